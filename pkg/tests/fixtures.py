import numpy as np

from mpcsd.coverage import FieldGrid, GridSpec
from mpcsd.propagation import FREE_SPACE, Antenna, Room, Transmitter
from mpcsd.scenario import BUNDLED_DIR, Scenario, load_scenario
from mpcsd.spectrum import FrequencyPlan

CENTER_FREQUENCY = 952.4e6
BANDWIDTH = 200e3
TX_SPACING = 6.7
LINE = GridSpec(name="line", x=(0.0, 0.0), y=(0.5, 6.2), z=(0.0, 0.0), step=0.03)
ISOTROPIC_RX = Antenna()


def patch_transmitter(position, boresight, offset=0.0, name="tx", power_dbm=30.0):
    antenna = Antenna(position=position, boresight=boresight, gain_dbi=6.0, pattern="patch")
    return Transmitter(antenna=antenna, power_dbm=power_dbm, carrier_offset=offset, name=name)


def twin_patches(offsets=(0.0, 50.0)):
    return (
        patch_transmitter((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), offsets[0], "tx1"),
        patch_transmitter((0.0, TX_SPACING, 0.0), (0.0, -1.0, 0.0), offsets[1], "tx2"),
    )


def twin_patch_room():
    return Room.box(((-2.0, 2.0), (-0.15, 6.85), (-1.05, 1.65)))


def make_scenario(room=FREE_SPACE, grids=(LINE,), max_order=2, offsets=(0.0, 50.0), transmitters=None):
    return Scenario(
        name="test",
        plan=FrequencyPlan(CENTER_FREQUENCY, BANDWIDTH, 2),
        room=room,
        transmitters=transmitters or twin_patches(offsets),
        receiver=ISOTROPIC_RX,
        load_ohms=50.0,
        grids=tuple(grids),
        max_order=max_order,
        schemes=("sp1", "sp2", "mp", "mpcsd"),
    )


def make_grid(powers_mw, scheme="sp1", name="hand"):
    """Field grid on a straight line with one sample per power, given in milliwatts."""
    powers = np.asarray(powers_mw, dtype=float) / 1e3
    points = np.column_stack([np.zeros(len(powers)), np.arange(len(powers)) * 0.1, np.zeros(len(powers))])
    return FieldGrid(name=name, scheme=scheme, points=points, powers=powers)


def bundled(name):
    return load_scenario(BUNDLED_DIR / f"{name}.scenario")

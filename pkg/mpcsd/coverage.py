"""Grid sweeps and the energy transmission coverage metric C(P_req)."""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from mpcsd import conf
from mpcsd.exceptions import DegenerateGeometryError
from mpcsd.propagation import tx_voltages, watts_to_dbm
from mpcsd.schemes import Scheme, SchemeKind, grouped_power

logger = logging.getLogger(__name__)

AXES = ("x", "y", "z")
CHUNK_POINTS = 256
_COUNT_SLACK = 1e-9
_COORDINATE_DECIMALS = 9


def _axis_samples(start, stop, step):
    count = math.floor((stop - start) / step + _COUNT_SLACK) + 1
    # + 0.0 folds -0.0 into 0.0
    return np.round(start + step * np.arange(count), _COORDINATE_DECIMALS) + 0.0


@dataclass(frozen=True)
class GridSpec:
    name: str
    x: tuple
    y: tuple
    z: tuple
    step: float
    slice_axis: str = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid {self.name!r}: step must be positive, got {self.step!r}")
        for axis in AXES:
            start, stop = getattr(self, axis)
            if not stop >= start:
                raise ValueError(f"grid {self.name!r}: empty {axis} range [{start}, {stop}]")
            object.__setattr__(self, axis, (float(start), float(stop)))
        if self.slice_axis is not None and self.slice_axis not in AXES:
            raise ValueError(f"grid {self.name!r}: slice axis must be one of {AXES}")

    def axis_values(self, axis):
        return _axis_samples(*getattr(self, axis), self.step)

    def points(self):
        """Grid points as a (K, 3) array, x outermost and z innermost."""
        return np.asarray(list(itertools.product(*(self.axis_values(axis) for axis in AXES))), dtype=float)

    @property
    def size(self):
        return math.prod(len(self.axis_values(axis)) for axis in AXES)


@dataclass(frozen=True)
class FieldGrid:
    name: str
    scheme: str
    points: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.powers) or len(self.powers) == 0:
            raise ValueError(f"grid {self.name!r} needs one power sample per point")
        if np.any(self.powers < 0):
            raise ValueError(f"grid {self.name!r} holds negative powers")

    @property
    def size(self):
        return len(self.powers)

    @property
    def powers_dbm(self):
        return watts_to_dbm(self.powers)


@dataclass(frozen=True)
class CoverageCurve:
    """C(P_req) samples ordered from the highest required power down."""

    p_req: np.ndarray
    coverage: np.ndarray
    scheme: str = ""
    grid_name: str = ""

    def __post_init__(self):
        if np.any(np.diff(self.p_req) >= 0):
            raise ValueError("coverage curve samples must be in descending power order")
        if np.any(np.diff(self.coverage) < 0):
            raise ValueError("coverage must not increase with the required power")

    def at(self, p_req):
        """Linear interpolation of the sampled curve."""
        return np.interp(p_req, self.p_req[::-1], self.coverage[::-1])


def _frequencies(scenario):
    return [scenario.center_frequency + tx.carrier_offset for tx in scenario.transmitters]


def _check_inside(scenario, points):
    if scenario.room.is_free_space:
        return
    for index, point in enumerate(points):
        if not scenario.room.contains(point):
            raise DegenerateGeometryError("receiver point lies outside the room", point_index=index)


def transmitter_voltages(scenario, points, carriers, workers=None):
    """Resultant voltage of every transmitter at every point, shaped (N, K)."""
    workers = workers or conf.SWEEP_WORKERS
    voltages = np.empty((len(scenario.transmitters), len(points)), dtype=complex)

    def fill(start):
        stop = min(start + CHUNK_POINTS, len(points))
        for n, (tx, frequency) in enumerate(zip(scenario.transmitters, carriers)):
            voltages[n, start:stop] = tx_voltages(
                scenario.room,
                tx,
                scenario.receiver,
                points[start:stop],
                scenario.max_order,
                frequency,
                scenario.load_ohms,
                first_index=start,
            )

    with ThreadPoolExecutor(max_workers=workers) as executor:
        # list() re-raises the first worker exception here.
        list(executor.map(fill, range(0, len(points), CHUNK_POINTS)))
    return voltages


def sweep_schemes(scenario, schemes, grid=None, workers=None):
    """Field grids of every scheme in ``schemes`` over one named grid, tracing each transmitter once per carrier."""
    grid = grid or scenario.grids[0]
    schemes = [Scheme.parse(s) if isinstance(s, str) else s for s in schemes]
    points = grid.points()
    _check_inside(scenario, points)
    logger.info("sweeping grid %r: %d points, schemes %s", grid.name, len(points), [str(s) for s in schemes])

    own_carriers = _frequencies(scenario)
    needs_own = any(s.kind is not SchemeKind.MP for s in schemes)
    needs_common = any(s.kind is SchemeKind.MP for s in schemes)
    own = transmitter_voltages(scenario, points, own_carriers, workers) if needs_own else None
    common = None
    if needs_common:
        shared = [scenario.center_frequency] * len(scenario.transmitters)
        common = own if own is not None and own_carriers == shared else transmitter_voltages(
            scenario, points, shared, workers
        )

    offsets = [tx.carrier_offset for tx in scenario.transmitters]
    load = scenario.load_ohms
    fields = {}
    for scheme in schemes:
        if scheme.kind is SchemeKind.SP:
            if not 0 <= scheme.tx_index < len(scenario.transmitters):
                raise ValueError(f"scheme {scheme} refers to a missing transmitter")
            powers = np.abs(own[scheme.tx_index]) ** 2 / load
        elif scheme.kind is SchemeKind.MP:
            powers = np.abs(common.sum(axis=0)) ** 2 / load
        else:
            powers = grouped_power(own, offsets, load)
        fields[scheme.name] = FieldGrid(name=grid.name, scheme=scheme.name, points=points, powers=powers)
    return fields


def sweep(scenario, scheme, grid=None, workers=None):
    """Received power of one scheme at every point of ``grid`` (the first named grid by default)."""
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    return sweep_schemes(scenario, [scheme], grid=grid, workers=workers)[scheme.name]


def coverage(grid, p_req):
    """Fraction of grid points receiving at least ``p_req`` dBm; ties count as covered."""
    return float(np.mean(grid.powers_dbm >= p_req))


def deadspot_count(grid, p_req):
    return int(np.count_nonzero(grid.powers_dbm < p_req))


def max_required_power_full_coverage(grid):
    """Largest required power (dBm) that keeps 100% coverage."""
    return float(grid.powers_dbm.min())


def zero_coverage_power(grid):
    """Required power (dBm) above which coverage is 0."""
    return float(grid.powers_dbm.max())


def coverage_curve(grid, p_req_range, step):
    """C(P_req) sampled every ``step`` dB across ``p_req_range``, plus a breakpoint at each grid power in range."""
    if not step > 0:
        raise ValueError(f"coverage step must be positive, got {step!r}")
    low, high = p_req_range
    if not high >= low:
        raise ValueError(f"empty required-power range [{low}, {high}]")
    sampled = _axis_samples(low, high, step)
    levels = grid.powers_dbm
    breakpoints = levels[np.isfinite(levels) & (levels >= low) & (levels <= high)]
    p_req = np.unique(np.concatenate([sampled, breakpoints]))[::-1]
    ordered = np.sort(levels)
    covered = grid.size - np.searchsorted(ordered, p_req, side="left")
    return CoverageCurve(p_req=p_req, coverage=covered / grid.size, scheme=grid.scheme, grid_name=grid.name)


def crossing_points(a, b):
    """Required powers where C_a - C_b changes sign, with the coverage there."""
    low = max(a.p_req.min(), b.p_req.min())
    high = min(a.p_req.max(), b.p_req.max())
    if low > high:
        logger.info("coverage curves %s/%s do not overlap", a.scheme, b.scheme)
        return []
    p_req = np.unique(np.concatenate([a.p_req, b.p_req]))
    p_req = p_req[(p_req >= low) & (p_req <= high)]
    ca, cb = a.at(p_req), b.at(p_req)
    difference = ca - cb
    signed = np.flatnonzero(difference != 0)
    if signed.size == 0:
        logger.info("coverage curves %s/%s are identical over their overlap", a.scheme, b.scheme)
        return []
    crossings = []
    for i, j in zip(signed[:-1], signed[1:]):
        if np.sign(difference[i]) == np.sign(difference[j]):
            continue
        if j == i + 1:
            fraction = difference[i] / (difference[i] - difference[j])
            power = p_req[i] + fraction * (p_req[j] - p_req[i])
            level = ca[i] + fraction * (ca[j] - ca[i])
        else:
            power, level = p_req[i + 1], ca[i + 1]
        crossings.append((float(power), float(level)))
    return crossings


def ripple_minima(grid, depth_db=3.0, window_m=0.5, axis=None):
    """
    Interior local minima of a line profile lying at least ``depth_db`` below
    the strongest sample within ``window_m`` on each side.
    """
    if axis is None:
        axis = int(np.argmax(np.ptp(grid.points, axis=0)))
    coordinates = grid.points[:, axis]
    order = np.argsort(coordinates, kind="stable")
    coordinates = coordinates[order]
    if np.any(np.diff(coordinates) <= 0):
        raise ValueError(f"grid {grid.name!r} is not a line along axis {AXES[axis]}")
    levels = grid.powers_dbm[order]
    minima = []
    for i in range(1, len(levels) - 1):
        if not (levels[i] < levels[i - 1] and levels[i] <= levels[i + 1]):
            continue
        before = levels[(coordinates >= coordinates[i] - window_m) & (coordinates < coordinates[i])]
        after = levels[(coordinates > coordinates[i]) & (coordinates <= coordinates[i] + window_m)]
        if before.size == 0 or after.size == 0:
            continue
        if before.max() >= levels[i] + depth_db and after.max() >= levels[i] + depth_db:
            minima.append(int(order[i]))
    return minima


def slices(grid, axis):
    """Sub-grids holding the points of each discrete coordinate along ``axis``."""
    index = AXES.index(axis)
    values = np.round(grid.points[:, index], _COORDINATE_DECIMALS) + 0.0
    parts = []
    for value in np.unique(values):
        mask = values == value
        parts.append(
            FieldGrid(
                name=f"{grid.name}@{axis}={value:+.3f}",
                scheme=grid.scheme,
                points=grid.points[mask],
                powers=grid.powers[mask],
            )
        )
    return parts


def pool(grids, name="overall"):
    """One grid holding every point of ``grids``, all for the same scheme."""
    schemes = {g.scheme for g in grids}
    if len(schemes) != 1:
        raise ValueError(f"cannot pool grids of different schemes {sorted(schemes)}")
    return FieldGrid(
        name=name,
        scheme=schemes.pop(),
        points=np.concatenate([g.points for g in grids]),
        powers=np.concatenate([g.powers for g in grids]),
    )

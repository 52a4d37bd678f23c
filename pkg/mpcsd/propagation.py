"""
Per-path voltage phasors from a transmitter to a receiver point.

Free space keeps the direct ray only. A rectangular room is handled with the
image method: every mirror image of the transmitter across the six walls, up
to a maximum number of bounces, contributes one ray whose reflection factor
is the product of its per-bounce Fresnel coefficients.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0

from mpcsd import conf
from mpcsd.exceptions import DegenerateGeometryError

logger = logging.getLogger(__name__)

SURFACES = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")
TWO_PI = 2 * math.pi
_UNIT_AXES = np.eye(3)
_TINY = 1e-12


class Polarization(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class Pattern(str, Enum):
    ISOTROPIC = "isotropic"
    PATCH = "patch"


class Wave(str, Enum):
    TE = "TE"
    TM = "TM"


def dbm_to_watts(power_dbm):
    return 10 ** (np.asarray(power_dbm, dtype=float) / 10) / 1e3


def watts_to_dbm(power_watts):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(np.asarray(power_watts, dtype=float) * 1e3)


def _as_vector(values, name):
    vector = np.asarray(values, dtype=float)
    if vector.shape != (3,) or not np.all(np.isfinite(vector)):
        raise ValueError(f"{name} must be three finite coordinates, got {values!r}")
    return vector


def patch_exponent(gain_dbi):
    """
    Exponent n of a cos^n power pattern with no backlobe and the given peak gain.

    The front hemisphere integrates to 4*pi only when n = G/2 - 1.
    """
    exponent = 10 ** (gain_dbi / 10) / 2 - 1
    if exponent < 0:
        logger.warning("patch gain %.2f dBi is below a hemispherical pattern, using n = 0", gain_dbi)
        return 0.0
    return exponent


@dataclass(frozen=True)
class Antenna:
    position: tuple = (0.0, 0.0, 0.0)
    boresight: tuple = (1.0, 0.0, 0.0)
    gain_dbi: float = 0.0
    polarization: Polarization = Polarization.HORIZONTAL
    pattern: Pattern = Pattern.ISOTROPIC
    exponent: float = None

    def __post_init__(self):
        if not math.isfinite(self.gain_dbi):
            raise ValueError(f"antenna gain must be finite, got {self.gain_dbi!r}")
        position = _as_vector(self.position, "position")
        boresight = _as_vector(self.boresight, "boresight")
        norm = np.linalg.norm(boresight)
        if norm < _TINY:
            raise ValueError("boresight must be a non-zero vector")
        object.__setattr__(self, "position", tuple(float(v) for v in position))
        object.__setattr__(self, "boresight", tuple(float(v) for v in boresight / norm))
        object.__setattr__(self, "polarization", Polarization(self.polarization))
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        if self.pattern is Pattern.PATCH and self.exponent is None:
            object.__setattr__(self, "exponent", patch_exponent(self.gain_dbi))
        if self.exponent is not None and self.exponent < 0:
            raise ValueError(f"pattern exponent must be non-negative, got {self.exponent!r}")

    @property
    def peak_gain(self):
        return 10 ** (self.gain_dbi / 10)

    def gain(self, directions):
        """Linear gain towards each unit vector in ``directions``."""
        directions = np.asarray(directions, dtype=float)
        if self.pattern is Pattern.ISOTROPIC:
            return np.full(directions.shape[:-1], self.peak_gain)
        cos_off = np.clip(directions @ np.asarray(self.boresight), 0.0, 1.0)
        return self.peak_gain * cos_off ** self.exponent

    def polarization_vector(self):
        """Unit E-field reference direction of the antenna."""
        boresight = np.asarray(self.boresight)
        if self.polarization is Polarization.VERTICAL:
            reference = _UNIT_AXES[2] - boresight[2] * boresight
            if np.linalg.norm(reference) < _TINY:
                reference = _UNIT_AXES[1]
        else:
            reference = np.cross(boresight, _UNIT_AXES[2])
            if np.linalg.norm(reference) < _TINY:
                reference = _UNIT_AXES[0]
        return reference / np.linalg.norm(reference)


@dataclass(frozen=True)
class Transmitter:
    antenna: Antenna
    power_dbm: float = 30.0
    carrier_offset: float = 0.0
    name: str = "tx"

    @property
    def position(self):
        return np.asarray(self.antenna.position)

    @property
    def power_watts(self):
        return float(dbm_to_watts(self.power_dbm))

    @property
    def eirp_dbm(self):
        return self.power_dbm + self.antenna.gain_dbi


def check_regulatory(tx):
    """Raise ValueError when ``tx`` exceeds the transmit power or EIRP cap."""
    if not conf.ENFORCE_REGULATORY_CAP:
        return
    if tx.power_dbm > conf.MAX_TRANSMIT_POWER_DBM:
        raise ValueError(f"transmit power {tx.power_dbm} dBm exceeds the {conf.MAX_TRANSMIT_POWER_DBM} dBm cap")
    if tx.eirp_dbm > conf.MAX_EIRP_DBM:
        raise ValueError(f"EIRP {tx.eirp_dbm} dBm exceeds the {conf.MAX_EIRP_DBM} dBm cap")


@dataclass(frozen=True)
class Material:
    permittivity: float = 1.0
    conductivity: float = 0.0

    def __post_init__(self):
        if not self.permittivity >= 1:
            raise ValueError(f"relative permittivity must be >= 1, got {self.permittivity!r}")
        if not self.conductivity >= 0:
            raise ValueError(f"conductivity must be >= 0, got {self.conductivity!r}")

    @property
    def is_matched(self):
        """True for a surface with no impedance contrast (a perfect absorber)."""
        return self.permittivity == 1 and self.conductivity == 0

    def complex_permittivity(self, frequency):
        return complex(self.permittivity, -self.conductivity / (TWO_PI * frequency * epsilon_0))


ABSORBER = Material()
CONCRETE = Material(permittivity=5.0, conductivity=0.1)


@dataclass(frozen=True)
class Room:
    """Axis-aligned box given by ``bounds`` ((x_lo, x_hi), (y_lo, y_hi), (z_lo, z_hi)); None is free space."""

    bounds: tuple = None
    materials: tuple = field(default=(ABSORBER,) * 6)

    def __post_init__(self):
        if self.bounds is None:
            return
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != 3 or any(not hi > lo for lo, hi in bounds):
            raise ValueError(f"room extents must be positive on every axis, got {self.bounds!r}")
        if len(self.materials) != len(SURFACES):
            raise ValueError(f"a room needs one material per surface {SURFACES}")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "materials", tuple(self.materials))

    @classmethod
    def box(cls, bounds, material=CONCRETE, **overrides):
        materials = tuple(overrides.get(surface, material) for surface in SURFACES)
        return cls(bounds=bounds, materials=materials)

    @property
    def is_free_space(self):
        return self.bounds is None

    @property
    def extents(self):
        return tuple(hi - lo for lo, hi in self.bounds)

    def contains(self, point):
        if self.is_free_space:
            return True
        return all(lo < coordinate < hi for coordinate, (lo, hi) in zip(point, self.bounds))


FREE_SPACE = Room()


@dataclass(frozen=True)
class Phasor:
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"phasor amplitude must be non-negative, got {self.amplitude!r}")
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    @classmethod
    def from_complex(cls, value):
        return cls(amplitude=abs(value), phase=float(np.angle(value)))

    @property
    def value(self):
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class PathComponent:
    total_length: float
    reflection_product: complex
    order: int
    source_tx: int = 0
    tx_gain: float = 1.0
    rx_gain: float = 1.0
    bounces: tuple = (0,) * 6


def wavelength(frequency):
    if not frequency > 0:
        raise ValueError(f"frequency must be positive, got {frequency!r}")
    return SPEED_OF_LIGHT / frequency


def free_space_loss_db(distance, frequency):
    return 20 * math.log10(4 * math.pi * distance / wavelength(frequency))


def friis_power(tx, rx, distance, frequency, direction=None):
    """
    Received power in dBm over a free-space link of length ``distance``.

    ``direction`` is the unit vector from the transmitter to the receiver;
    without it both antennas are taken at their pattern peak.
    """
    if not distance > 0:
        raise DegenerateGeometryError(f"link distance must be positive, got {distance!r}")
    if direction is None:
        tx_gain, rx_gain = tx.antenna.peak_gain, rx.peak_gain
    else:
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        tx_gain, rx_gain = float(tx.antenna.gain(direction)), float(rx.gain(-direction))
    with np.errstate(divide="ignore"):
        gains_db = 10 * np.log10(tx_gain) + 10 * np.log10(rx_gain)
    return tx.power_dbm + float(gains_db) - free_space_loss_db(distance, frequency)


def _fresnel(wave, cos_i, permittivity):
    cos_i = np.asarray(cos_i, dtype=float)
    root = np.sqrt(permittivity - (1.0 - cos_i ** 2) + 0j)
    if wave is Wave.TE:
        return (cos_i - root) / (cos_i + root)
    # Tangential-field convention: TM equals TE at normal incidence.
    return (root - permittivity * cos_i) / (root + permittivity * cos_i)


def fresnel_coefficient(polarization, incidence_angle, material, frequency):
    """
    Reflection coefficient of a planar surface for a TE or TM incident wave.

    ``incidence_angle`` is measured from the surface normal; the material is
    lossy through the complex permittivity eps_r - j*sigma/(omega*eps_0).
    """
    wave = Wave(polarization)
    if not 0 <= incidence_angle <= math.pi / 2:
        raise ValueError(f"incidence angle must lie in [0, pi/2], got {incidence_angle!r}")
    if material.is_matched:
        return 0j
    cos_i = max(math.cos(incidence_angle), 0.0)
    return complex(_fresnel(wave, cos_i, material.complex_permittivity(frequency)))


@dataclass(frozen=True)
class ImageSet:
    positions: np.ndarray
    mirror: np.ndarray
    bounces: np.ndarray

    @property
    def order(self):
        return self.bounces.sum(axis=1)

    def __len__(self):
        return len(self.positions)


def _axis_images(coordinate, lo, hi, max_order):
    # Image coordinate lo + (1 - 2p)(x - lo) + 2mL hits the low wall |m - p| times and the high wall |m| times.
    span = hi - lo
    local = coordinate - lo
    images = []
    for parity in (0, 1):
        for m in range(-max_order, max_order + 1):
            low_hits, high_hits = abs(m - parity), abs(m)
            if low_hits + high_hits <= max_order:
                images.append((lo + (1 - 2 * parity) * local + 2 * m * span, 1 - 2 * parity, low_hits, high_hits))
    return images


@lru_cache(maxsize=64)
def image_sources(room, position, max_order):
    """Every mirror image of ``position`` reachable in at most ``max_order`` bounces, direct source first."""
    if room.is_free_space or max_order == 0:
        return ImageSet(
            positions=np.asarray([position], dtype=float),
            mirror=np.ones((1, 3)),
            bounces=np.zeros((1, 6), dtype=int),
        )
    per_axis = [_axis_images(position[axis], lo, hi, max_order) for axis, (lo, hi) in enumerate(room.bounds)]
    rows = []
    for combination in itertools.product(*per_axis):
        bounces = tuple(hits for image in combination for hits in image[2:])
        if sum(bounces) <= max_order:
            rows.append((sum(bounces), bounces, combination))
    rows.sort(key=lambda row: (row[0], row[1]))
    return ImageSet(
        positions=np.asarray([[image[0] for image in combination] for _, _, combination in rows]),
        mirror=np.asarray([[image[1] for image in combination] for _, _, combination in rows], dtype=float),
        bounces=np.asarray([bounces for _, bounces, _ in rows], dtype=int),
    )


@dataclass(frozen=True)
class PathBatch:
    """Paths from one transmitter to K receiver points through M images, as (K, M) arrays."""

    lengths: np.ndarray
    reflection: np.ndarray
    tx_gain: np.ndarray
    rx_gain: np.ndarray
    bounces: np.ndarray


def trace(room, tx, receiver, points, max_order, frequency, first_index=0):
    """Trace every image path from ``tx`` to each of ``points`` (K, 3)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    images = image_sources(room, tuple(tx.antenna.position), max_order)
    offsets = points[:, None, :] - images.positions[None, :, :]
    lengths = np.linalg.norm(offsets, axis=2)
    degenerate = np.flatnonzero(lengths[:, 0] < _TINY)
    if degenerate.size:
        raise DegenerateGeometryError(
            "receiver coincides with the transmitter", point_index=first_index + int(degenerate[0])
        )
    arrival = offsets / lengths[:, :, None]
    departure = arrival * images.mirror[None, :, :]
    tx_gain = tx.antenna.gain(departure)
    rx_gain = receiver.gain(-arrival)
    reflection = np.ones(lengths.shape, dtype=complex)
    if len(images) > 1:
        reflection = _reflection_products(room, tx, images, arrival, departure, frequency)
    return PathBatch(
        lengths=lengths, reflection=reflection, tx_gain=tx_gain, rx_gain=rx_gain, bounces=images.bounces
    )


def _reflection_products(room, tx, images, arrival, departure, frequency):
    # In the unfolded frame the ray is straight and the launched field is mirrored with the image.
    polarization = tx.antenna.polarization_vector()
    launched = polarization - (departure @ polarization)[:, :, None] * departure
    launched = launched * images.mirror[None, :, :]
    launched_norm = np.linalg.norm(launched, axis=2)
    reflection = np.ones(arrival.shape[:2], dtype=complex)
    for axis in range(3):
        hits_low = images.bounces[:, 2 * axis]
        hits_high = images.bounces[:, 2 * axis + 1]
        if not (hits_low.any() or hits_high.any()):
            continue
        cos_i = np.abs(arrival[:, :, axis])
        te_direction = np.cross(arrival, _UNIT_AXES[axis])
        te_norm = np.linalg.norm(te_direction, axis=2)
        resolvable = (te_norm > _TINY) & (launched_norm > _TINY)
        projection = np.einsum("kmi,kmi->km", launched, te_direction)
        te_weight = np.full(cos_i.shape, 0.5)
        np.divide(projection ** 2, (te_norm * launched_norm) ** 2, out=te_weight, where=resolvable)
        for surface, hits in ((2 * axis, hits_low), (2 * axis + 1, hits_high)):
            if not hits.any():
                continue
            material = room.materials[surface]
            if material.is_matched:
                gamma = np.zeros(cos_i.shape, dtype=complex)
            else:
                permittivity = material.complex_permittivity(frequency)
                gamma = te_weight * _fresnel(Wave.TE, cos_i, permittivity) + (1 - te_weight) * _fresnel(
                    Wave.TM, cos_i, permittivity
                )
            for count in range(1, int(hits.max()) + 1):
                reflection = np.where(hits[None, :] >= count, reflection * gamma, reflection)
    return reflection


def enumerate_paths(room, tx, rx_point, max_order, frequency, receiver=None, tx_index=0):
    """Direct path plus every image path of at most ``max_order`` bounces to ``rx_point``."""
    if max_order < 0:
        raise ValueError(f"max_order must be non-negative, got {max_order!r}")
    receiver = receiver or Antenna()
    batch = trace(room, tx, receiver, [rx_point], max_order, frequency)
    return [
        PathComponent(
            total_length=float(batch.lengths[0, m]),
            reflection_product=complex(batch.reflection[0, m]),
            order=int(batch.bounces[m].sum()),
            source_tx=tx_index,
            tx_gain=float(batch.tx_gain[0, m]),
            rx_gain=float(batch.rx_gain[0, m]),
            bounces=tuple(int(hits) for hits in batch.bounces[m]),
        )
        for m in range(batch.lengths.shape[1])
    ]


def _voltages(power_watts, tx_gain, rx_gain, lengths, reflection, frequency, rectenna_load):
    lam = wavelength(frequency)
    amplitude = np.sqrt(power_watts * tx_gain * rx_gain * rectenna_load) * lam / (4 * math.pi * lengths)
    carrier = np.exp(-1j * TWO_PI * np.mod(lengths / lam, 1.0))
    return amplitude * reflection * carrier


def path_phasor(path, tx, frequency, rectenna_load):
    """DC-equivalent voltage phasor of one path at the ideal rectenna output."""
    value = _voltages(
        tx.power_watts,
        path.tx_gain,
        path.rx_gain,
        path.total_length,
        path.reflection_product,
        frequency,
        rectenna_load,
    )
    return Phasor.from_complex(complex(value))


def aggregate_phasor(paths):
    """Coherent sum of same-carrier phasors into one resultant."""
    if not paths:
        raise ValueError("cannot aggregate an empty list of phasors")
    return Phasor.from_complex(sum(phasor.value for phasor in paths))


def tx_voltages(room, tx, receiver, points, max_order, frequency, rectenna_load, first_index=0):
    """Resultant complex voltage from ``tx`` at each of ``points``, one entry per point."""
    batch = trace(room, tx, receiver, points, max_order, frequency, first_index=first_index)
    voltages = _voltages(
        tx.power_watts, batch.tx_gain, batch.rx_gain, batch.lengths, batch.reflection, frequency, rectenna_load
    )
    return voltages.sum(axis=1)

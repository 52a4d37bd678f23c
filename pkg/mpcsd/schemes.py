"""
Time-averaged received power of the energy transmission schemes.

SP    one transmitter, multipath adds coherently.
MP    every transmitter on the same carrier, so cross terms survive.
MPCSD every transmitter on its own carrier; cross terms average out over the
      beat period and the powers add.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from mpcsd import conf
from mpcsd.propagation import TWO_PI, Phasor, watts_to_dbm
from mpcsd.spectrum import OFFSET_RESOLUTION_HZ, beat_harmonics

logger = logging.getLogger(__name__)


class SchemeKind(str, Enum):
    SP = "sp"
    MP = "mp"
    MPCSD = "mpcsd"


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    tx_index: int = None

    @classmethod
    def parse(cls, name):
        """``sp<k>`` (1-based transmitter number), ``mp`` or ``mpcsd``."""
        label = name.strip().lower()
        if label in (SchemeKind.MP.value, SchemeKind.MPCSD.value):
            return cls(SchemeKind(label))
        if label.startswith(SchemeKind.SP.value) and label[2:].isdigit() and int(label[2:]) >= 1:
            return cls(SchemeKind.SP, int(label[2:]) - 1)
        raise ValueError(f"unknown scheme {name!r}, expected sp<k>, mp or mpcsd")

    @property
    def name(self):
        if self.kind is SchemeKind.SP:
            return f"sp{self.tx_index + 1}"
        return self.kind.value

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SchemeResult:
    scheme: Scheme
    power: float
    per_tx_power: tuple

    @property
    def power_dbm(self):
        return float(watts_to_dbm(self.power))


def _values(phasors):
    return np.asarray([p.value if isinstance(p, Phasor) else complex(p) for p in phasors], dtype=complex)


def _check_load(load):
    if not load > 0:
        raise ValueError(f"load must be a positive resistance, got {load!r}")


def sp_power(per_path_phasors, load):
    """Average power of one transmitter's multipath sum, |sum V_i|^2 / R_out."""
    _check_load(load)
    values = _values(per_path_phasors)
    if values.size == 0:
        raise ValueError("single-point power needs at least one path")
    return float(abs(values.sum()) ** 2 / load)


def mp_power(per_tx_phasors, load):
    """Average power when every transmitter shares one carrier; interference terms remain."""
    _check_load(load)
    values = _values(per_tx_phasors)
    if values.size == 0:
        raise ValueError("multi-point power needs at least one transmitter")
    return float(abs(values.sum()) ** 2 / load)


def offset_groups(offsets):
    """Indices of transmitters grouped by identical carrier offset, in first-seen order."""
    groups = {}
    for index, offset in enumerate(offsets):
        groups.setdefault(round(offset / OFFSET_RESOLUTION_HZ), []).append(index)
    return list(groups.values())


def grouped_power(voltages, offsets, load):
    """
    MPCSD power for voltages shaped (N, ...) whose transmitters sit at ``offsets``.

    Transmitters sharing an offset cannot be separated by time averaging and
    add coherently, as in MP.
    """
    voltages = np.asarray(voltages, dtype=complex)
    if offsets is None:
        return (np.abs(voltages) ** 2).sum(axis=0) / load
    groups = offset_groups(offsets)
    if len(groups) < len(offsets):
        logger.warning(
            "carrier shift diversity with duplicate offsets %s; coinciding transmitters add as in MP",
            [[offsets[i] for i in group] for group in groups if len(group) > 1],
        )
    return sum(np.abs(voltages[group].sum(axis=0)) ** 2 for group in groups) / load


def mpcsd_power(per_tx_phasors, load, offsets=None):
    """Average power with carrier shift diversity, sum V_n^2 / R_out, whatever the phases."""
    _check_load(load)
    values = _values(per_tx_phasors)
    if values.size == 0:
        raise ValueError("multi-point power needs at least one transmitter")
    if offsets is not None and len(offsets) != values.size:
        raise ValueError(f"expected {values.size} offsets, got {len(offsets)}")
    return float(grouped_power(values, offsets, load))


def _alias_free_count(harmonics, beats, minimum):
    # Sampling k/count of a window is exact unless a beat completes a multiple of count cycles.
    cycles = {abs(a - b) * beats for a in harmonics for b in harmonics} - {0}
    count = minimum
    while any(c % count == 0 for c in cycles):
        count += 1
    return count


def time_domain_power(
    per_tx_phasors,
    offsets,
    load,
    samples_per_beat=None,
    beats=1,
    mpcsd=False,
    duration=None,
):
    """
    Brute-force average of the received power over whole beat periods.

    The carrier is factored out: averaging cos^2 of the ~1 GHz carrier gives
    exactly one half, which cancels the sqrt(2) peak factor, so only the
    complex envelope sum V_n exp(j(2 pi df_n t + theta_n)) is sampled.

    Offsets are snapped to the ``OFFSET_RESOLUTION_HZ`` lattice, so the window
    of ``beats`` common beat periods holds a whole number of cycles of every
    beat. ``duration`` replaces it with an arbitrary window in seconds,
    integrated at the exact offsets by adaptive quadrature.
    """
    _check_load(load)
    samples_per_beat = samples_per_beat or conf.ORACLE_SAMPLES_PER_BEAT
    if samples_per_beat < 100:
        raise ValueError(f"samples_per_beat must be at least 100, got {samples_per_beat!r}")
    if beats < 1:
        raise ValueError(f"beats must be at least 1, got {beats!r}")
    values = _values(per_tx_phasors)
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != values.shape:
        raise ValueError(f"expected {values.size} offsets, got {offsets.size}")
    if mpcsd and len(offset_groups(offsets)) < offsets.size:
        logger.warning("time-domain MPCSD check with duplicate offsets %s", offsets.tolist())

    if duration is not None:
        return _partial_window_power(values, offsets, load, duration)

    harmonics = beat_harmonics(offsets)
    count = _alias_free_count(harmonics, beats, samples_per_beat * beats)
    cycles = np.outer(np.asarray(harmonics, dtype=np.int64) * beats, np.arange(count, dtype=np.int64)) % count
    envelope = values @ np.exp(1j * TWO_PI * cycles / count)
    return float(np.mean(np.abs(envelope) ** 2) / load)


def _partial_window_power(values, offsets, load, duration):
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration!r}")
    relative = offsets - offsets[0]

    def integrand(t):
        return abs(values @ np.exp(1j * TWO_PI * relative * t)) ** 2

    oscillations = math.ceil(float(np.ptp(offsets)) * duration)
    total, _ = integrate.quad(integrand, 0.0, duration, epsabs=0.0, epsrel=1e-10, limit=50 + 20 * oscillations)
    return total / duration / load


def phase_averaged_mp_power(per_tx_phasors, load, index=-1):
    """MP power averaged over a uniformly distributed phase of transmitter ``index``, by quadrature."""
    _check_load(load)
    values = _values(per_tx_phasors)
    rest = values.sum() - values[index]
    moving = values[index]

    def integrand(phi):
        return abs(rest + moving * complex(math.cos(phi), math.sin(phi))) ** 2 / load

    average, _ = integrate.quad(integrand, 0.0, TWO_PI, epsabs=0.0, epsrel=1e-10, limit=200)
    return average / TWO_PI


def evaluate(scheme, per_tx_phasors, load, offsets=None):
    """Power delivered by ``scheme`` from the per-transmitter resultant phasors."""
    values = _values(per_tx_phasors)
    per_tx_power = tuple(float(abs(v) ** 2 / load) for v in values)
    if scheme.kind is SchemeKind.SP:
        if not 0 <= scheme.tx_index < values.size:
            raise ValueError(f"scheme {scheme} refers to a missing transmitter")
        power = sp_power([values[scheme.tx_index]], load)
    elif scheme.kind is SchemeKind.MP:
        power = mp_power(values, load)
    else:
        power = mpcsd_power(values, load, offsets)
    return SchemeResult(scheme=scheme, power=power, per_tx_power=per_tx_power)

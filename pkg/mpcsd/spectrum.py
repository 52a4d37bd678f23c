"""Carrier allocation for carrier shift diversity.

The channel of bandwidth ``B`` around ``f_c`` is split into ``N`` orthogonal
subcarriers, one per transmitter. Carriers are handled as offsets from ``f_c``
so that Hz-scale shifts on a ~1 GHz carrier keep full double precision.
"""
import logging
import math
from dataclasses import dataclass
from functools import reduce

from mpcsd.exceptions import InvalidPlanError

logger = logging.getLogger(__name__)

# Offsets are compared on a millihertz lattice when looking for a common beat period.
OFFSET_RESOLUTION_HZ = 1e-3
_FEASIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class FrequencyPlan:
    center_frequency: float
    bandwidth: float
    subcarrier_count: int

    def __post_init__(self):
        if not isinstance(self.subcarrier_count, int) or self.subcarrier_count < 1:
            raise InvalidPlanError(f"subcarrier count must be a positive integer, got {self.subcarrier_count!r}")
        if not self.bandwidth > 0:
            raise InvalidPlanError(f"bandwidth must be positive, got {self.bandwidth!r}")
        if not self.center_frequency > self.bandwidth / 2:
            raise InvalidPlanError(f"center frequency {self.center_frequency!r} Hz does not hold the channel")

    @property
    def spacing(self):
        return self.bandwidth / self.subcarrier_count


def plan_offsets(plan):
    """Offsets from the center frequency of the N subcarriers, ascending."""
    n_total = plan.subcarrier_count
    bandwidth = plan.bandwidth
    return [-bandwidth / 2 + (2 * n - 1) * bandwidth / (2 * n_total) for n in range(1, n_total + 1)]


def carrier_frequencies(plan):
    """Carrier frequency of each transmitter, f_n = f_c - B/2 + (2n - 1)B/(2N)."""
    return [plan.center_frequency + offset for offset in plan_offsets(plan)]


def beat_period(plan):
    """Longest period of the artificial fading, T = N/B."""
    return plan.subcarrier_count / plan.bandwidth


def _ticks(offsets):
    return [int(round(offset / OFFSET_RESOLUTION_HZ)) for offset in offsets]


def _tick_step(ticks):
    return reduce(math.gcd, (abs(tick - ticks[0]) for tick in ticks[1:]), 0)


def offsets_beat_period(offsets):
    """
    Common period of every pairwise beat between ``offsets``.

    Returns None when all offsets coincide: the envelope is then constant and
    any averaging window is exact.
    """
    step = _tick_step(_ticks(offsets))
    if step == 0:
        return None
    return 1.0 / (step * OFFSET_RESOLUTION_HZ)


def beat_harmonics(offsets):
    """
    Each offset as an integer multiple of the common beat frequency, relative to the first.

    Offsets are snapped to the nearest ``OFFSET_RESOLUTION_HZ`` (at most 0.5 mHz
    away) so that a common beat always exists.
    """
    ticks = _ticks(offsets)
    step = _tick_step(ticks)
    if step == 0:
        return [0] * len(ticks)
    return [(tick - ticks[0]) // step for tick in ticks]


def duty_cycle_feasible(plan, data_period):
    """True when the sensor data period leaves room for a full beat, T_D >= N/B."""
    if not data_period > 0:
        raise ValueError(f"data period must be positive, got {data_period!r}")
    period = beat_period(plan)
    feasible = data_period >= period * (1 - _FEASIBILITY_RTOL)
    if not feasible:
        logger.debug("data period %.3e s is shorter than the beat period %.3e s", data_period, period)
    return feasible

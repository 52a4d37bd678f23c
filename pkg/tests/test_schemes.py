import math
import time
from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mpcsd.propagation import Phasor
from mpcsd.schemes import (
    Scheme,
    SchemeKind,
    evaluate,
    mp_power,
    mpcsd_power,
    offset_groups,
    phase_averaged_mp_power,
    sp_power,
    time_domain_power,
)
from mpcsd.spectrum import OFFSET_RESOLUTION_HZ

LOAD = 50.0
amplitudes = st.floats(min_value=0.01, max_value=10.0)
phases = st.floats(min_value=0.0, max_value=2 * math.pi)
phasors = st.lists(st.builds(Phasor, amplitudes, phases), min_size=2, max_size=5)


@st.composite
def shifted_transmitters(draw, shared_carrier=False):
    """One to eight transmitter phasors with distinct carrier offsets within +-5 kHz, or all zero."""
    count = draw(st.integers(min_value=1, max_value=8))
    voltages = draw(st.lists(st.builds(Phasor, amplitudes, phases), min_size=count, max_size=count))
    if shared_carrier:
        return voltages, [0.0] * count
    offsets = draw(
        st.lists(
            st.floats(min_value=-5e3, max_value=5e3),
            min_size=count,
            max_size=count,
            unique_by=lambda offset: round(offset / OFFSET_RESOLUTION_HZ),
        )
    )
    return voltages, offsets


class SchemeParseTest(TestCase):
    def test_names(self):
        self.assertEqual(Scheme.parse("sp1"), Scheme(SchemeKind.SP, 0))
        self.assertEqual(Scheme.parse("SP2").name, "sp2")
        self.assertEqual(Scheme.parse("mp").kind, SchemeKind.MP)
        self.assertEqual(str(Scheme.parse(" mpcsd ")), "mpcsd")

    def test_unknown(self):
        for name in ("sp", "sp0", "spx", "mpx", ""):
            with self.assertRaises(ValueError):
                Scheme.parse(name)


class PowerTest(TestCase):
    def test_single_point_sums_paths_coherently(self):
        self.assertAlmostEqual(sp_power([Phasor(1.0, 0.0), Phasor(1.0, 0.0)], LOAD), 4 / LOAD, places=15)
        self.assertAlmostEqual(sp_power([Phasor(1.0, 0.0), Phasor(1.0, math.pi)], LOAD), 0.0, places=15)

    def test_equal_in_phase(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, 0.0)]
        self.assertAlmostEqual(mp_power(voltages, LOAD), 4 / LOAD, places=15)
        self.assertAlmostEqual(mpcsd_power(voltages, LOAD, offsets=[0.0, 50.0]), 2 / LOAD, places=15)

    def test_equal_in_antiphase(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, math.pi)]
        self.assertAlmostEqual(mp_power(voltages, LOAD), 0.0, places=15)
        self.assertAlmostEqual(mpcsd_power(voltages, LOAD, offsets=[0.0, 50.0]), 2 / LOAD, places=15)

    def test_unequal(self):
        voltages = [Phasor(2.0, 0.0), Phasor(1.0, math.pi / 2)]
        self.assertAlmostEqual(mp_power(voltages, LOAD), 5 / LOAD, places=15)
        self.assertAlmostEqual(mpcsd_power(voltages, LOAD), 5 / LOAD, places=15)

    def test_complex_values_are_accepted(self):
        self.assertAlmostEqual(mpcsd_power([1 + 1j, -2j], LOAD), 6 / LOAD, places=15)

    @given(phasors)
    def test_mp_bounds(self, voltages):
        amplitudes = np.array([v.amplitude for v in voltages])
        power = mp_power(voltages, LOAD)
        self.assertGreaterEqual(power, -1e-15)
        self.assertLessEqual(power, amplitudes.sum() ** 2 / LOAD * (1 + 1e-12))

    @given(phasors)
    def test_mpcsd_ignores_phases(self, voltages):
        rotated = [Phasor(v.amplitude, v.phase + i) for i, v in enumerate(voltages)]
        self.assertAlmostEqual(mpcsd_power(voltages, LOAD), mpcsd_power(rotated, LOAD), places=12)

    def test_bad_inputs(self):
        with self.assertRaises(ValueError):
            mp_power([], LOAD)
        with self.assertRaises(ValueError):
            mpcsd_power([Phasor(1.0, 0.0)], 0.0)
        with self.assertRaises(ValueError):
            mpcsd_power([Phasor(1.0, 0.0)], LOAD, offsets=[0.0, 50.0])


class DuplicateOffsetTest(TestCase):
    def test_groups(self):
        self.assertEqual(offset_groups([0.0, 50.0, 0.0, 25.0]), [[0, 2], [1], [3]])

    def test_coinciding_carriers_interfere(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, math.pi), Phasor(1.0, 0.0)]
        with self.assertLogs("mpcsd.schemes", level="WARNING"):
            power = mpcsd_power(voltages, LOAD, offsets=[0.0, 0.0, 50.0])
        self.assertAlmostEqual(power, 1 / LOAD, places=15)


class TimeDomainPowerTest(TestCase):
    @settings(max_examples=1000, deadline=None)
    @given(shifted_transmitters())
    def test_matches_mpcsd(self, case):
        voltages, offsets = case
        expected = mpcsd_power(voltages, LOAD, offsets)
        measured = time_domain_power(voltages, offsets, LOAD, mpcsd=True)
        self.assertLess(abs(measured - expected) / expected, 1e-6)

    def test_random_offsets_in_bounded_time(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        started = time.perf_counter()
        for _ in range(1000):
            count = int(rng.integers(1, 9))
            voltages = rng.uniform(0.01, 10.0, count) * np.exp(1j * rng.uniform(0.0, 2 * math.pi, count))
            offsets = rng.uniform(-5e3, 5e3, count)
            expected = mpcsd_power(voltages, LOAD, offsets)
            measured = time_domain_power(voltages, offsets, LOAD, mpcsd=True)
            worst = max(worst, abs(measured - expected) / expected)
        self.assertLess(worst, 1e-6)
        self.assertLess(time.perf_counter() - started, 10.0)

    def test_off_lattice_offsets(self):
        voltages = [Phasor(1.0, 0.0), Phasor(2.0, 1.0), Phasor(0.5, 2.0), Phasor(1.5, 3.0)]
        offsets = [-731.40211, 12.00037, 250.5, 999.99999]
        measured = time_domain_power(voltages, offsets, LOAD, mpcsd=True)
        self.assertAlmostEqual(measured / mpcsd_power(voltages, LOAD, offsets), 1.0, places=9)

    def test_fifty_hertz_shift(self):
        voltages = [Phasor(1.0, 0.2), Phasor(0.5, 2.9)]
        measured = time_domain_power(voltages, [0.0, 50.0], LOAD, samples_per_beat=256, beats=3)
        self.assertAlmostEqual(measured, 1.25 / LOAD, places=12)

    @settings(max_examples=1000, deadline=None)
    @given(shifted_transmitters(shared_carrier=True))
    def test_shared_carrier_matches_mp(self, case):
        voltages, offsets = case
        expected = mp_power(voltages, LOAD)
        measured = time_domain_power(voltages, offsets, LOAD)
        scale = sum(v.amplitude for v in voltages) ** 2 / LOAD
        self.assertLessEqual(abs(measured - expected), 1e-9 * expected + 1e-13 * scale)

    def test_quarter_beat_window_keeps_cross_term(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, 0.0)]
        quarter = time_domain_power(voltages, [0.0, 50.0], LOAD, duration=0.005)
        self.assertAlmostEqual(quarter, (2 + 4 / math.pi) / LOAD, places=6)

    def test_long_partial_window_converges(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, 0.0)]
        errors = [
            abs(time_domain_power(voltages, [0.0, 50.0], LOAD, duration=(beats + 0.25) * 0.02) - 2 / LOAD)
            for beats in (1, 10, 100)
        ]
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_partial_window_uses_exact_offsets(self):
        voltages = [Phasor(1.0, 0.3), Phasor(2.0, 1.1)]
        window = 10 / 37.3
        measured = time_domain_power(voltages, [0.0, 37.3], LOAD, duration=window)
        self.assertAlmostEqual(measured / mpcsd_power(voltages, LOAD), 1.0, places=8)
        with self.assertRaises(ValueError):
            time_domain_power(voltages, [0.0, 37.3], LOAD, duration=0.0)

    def test_rejects_bad_sampling(self):
        with self.assertRaises(ValueError):
            time_domain_power([Phasor(1.0, 0.0)], [0.0], LOAD, samples_per_beat=10)
        with self.assertRaises(ValueError):
            time_domain_power([Phasor(1.0, 0.0)], [0.0], LOAD, beats=0)
        with self.assertRaises(ValueError):
            time_domain_power([Phasor(1.0, 0.0)], [0.0, 50.0], LOAD)


class PhaseAveragedPowerTest(TestCase):
    @settings(max_examples=30, deadline=None)
    @given(phasors)
    def test_equals_mpcsd(self, voltages):
        rest = voltages[:-1]
        expected = mp_power(rest, LOAD) + voltages[-1].amplitude ** 2 / LOAD
        averaged = phase_averaged_mp_power(voltages, LOAD)
        self.assertAlmostEqual(averaged / expected, 1.0, places=8)

    def test_two_transmitters(self):
        voltages = [Phasor(1.0, 0.0), Phasor(1.0, math.pi)]
        self.assertAlmostEqual(phase_averaged_mp_power(voltages, LOAD), mpcsd_power(voltages, LOAD), places=10)


class EvaluateTest(TestCase):
    voltages = [Phasor(1.0, 0.0), Phasor(2.0, math.pi)]

    def test_every_scheme(self):
        self.assertAlmostEqual(evaluate(Scheme.parse("sp1"), self.voltages, LOAD).power, 1 / LOAD, places=15)
        self.assertAlmostEqual(evaluate(Scheme.parse("sp2"), self.voltages, LOAD).power, 4 / LOAD, places=15)
        self.assertAlmostEqual(evaluate(Scheme.parse("mp"), self.voltages, LOAD).power, 1 / LOAD, places=15)
        result = evaluate(Scheme.parse("mpcsd"), self.voltages, LOAD, offsets=[0.0, 50.0])
        self.assertAlmostEqual(result.power, 5 / LOAD, places=15)
        self.assertEqual(len(result.per_tx_power), 2)
        self.assertAlmostEqual(result.power_dbm, 10 * math.log10(5 / LOAD * 1e3), places=9)

    def test_missing_transmitter(self):
        with self.assertRaises(ValueError):
            evaluate(Scheme.parse("sp3"), self.voltages, LOAD)

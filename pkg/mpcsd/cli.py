"""Command line entry point: ``mpcsd run <scenario> [options]``."""
import argparse
import csv
import itertools
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from mpcsd import conf
from mpcsd import coverage as cov
from mpcsd import schemes
from mpcsd.exceptions import (
    OracleMismatchError,
    ScenarioParseError,
    ScenarioValidationError,
    SimulationError,
)
from mpcsd.scenario import load_scenario
from mpcsd.spectrum import beat_period, offsets_beat_period

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

FIELD_COLUMNS = ("x_m", "y_m", "z_m", "power_dBm", "scheme")
COVERAGE_COLUMNS = ("p_req_dBm", "coverage_fraction", "scheme", "grid_name")
OVERALL = "overall"


def _comma_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="mpcsd", description="Multi-point wireless energy transmission simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="sweep a scenario and write field maps, coverage curves and a summary")
    run_parser.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    run_parser.add_argument("--schemes", type=_comma_list, help="comma separated subset, e.g. sp1,mpcsd")
    run_parser.add_argument("--grids", type=_comma_list, help="comma separated subset of the named grids")
    run_parser.add_argument("--max-order", type=int, help="override the maximum reflection order")
    run_parser.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    run_parser.add_argument("--p-req-min", type=float, help="lowest required power of the coverage curves, dBm")
    run_parser.add_argument("--p-req-max", type=float, help="highest required power of the coverage curves, dBm")
    run_parser.add_argument("--p-req-step", type=float, help="coverage curve sampling step, dB")
    run_parser.add_argument(
        "--oracle-check",
        action="store_true",
        help="re-check every MPCSD point against the time-domain average",
    )
    run_parser.add_argument("--seed", type=int, help="randomise transmitter phases in the oracle check")
    run_parser.add_argument("--workers", type=int, help="concurrent sweep workers")
    return parser


def _fmt(value, digits=3):
    if not math.isfinite(value):
        return "-inf" if value < 0 else "inf"
    return f"{value:.{digits}f}"


def _rounded(value):
    return round(float(value), 3) if math.isfinite(value) else None


def _write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_field(path, field):
    rows = (
        [_fmt(x), _fmt(y), _fmt(z), _fmt(level), field.scheme]
        for (x, y, z), level in zip(field.points, field.powers_dbm)
    )
    _write_csv(path, FIELD_COLUMNS, rows)


def oracle_check(scenario, grid, field, seed=None, workers=None):
    """Compare every MPCSD sample of ``field`` with the brute-force time average."""
    points = grid.points()
    carriers = [scenario.center_frequency + offset for offset in scenario.offsets]
    voltages = cov.transmitter_voltages(scenario, points, carriers, workers)
    if seed is not None:
        rng = np.random.default_rng(seed)
        voltages = voltages * np.exp(1j * rng.uniform(0.0, 2 * math.pi, size=(len(voltages), 1)))
    worst = 0.0
    for k in range(len(points)):
        measured = schemes.time_domain_power(voltages[:, k], scenario.offsets, scenario.load_ohms, mpcsd=True)
        expected = field.powers[k]
        error = abs(measured - expected) / expected if expected > 0 else abs(measured)
        worst = max(worst, error)
        if error > conf.ORACLE_TOLERANCE:
            logger.error("oracle mismatch on grid %r at point %d: %.3e", grid.name, k, error)
            raise OracleMismatchError(k, error)
    logger.info("oracle check on grid %r passed, worst relative error %.3e", grid.name, worst)
    return worst


def _analyse(fields, line_profile=False):
    """Summary block for one set of same-geometry field grids keyed by scheme."""
    names = list(fields)
    thresholds = {name: cov.max_required_power_full_coverage(f) for name, f in fields.items()}
    summary = {
        "points": next(iter(fields.values())).size,
        "thresholds_dBm": {name: _rounded(value) for name, value in thresholds.items()},
        "zero_coverage_dBm": {name: _rounded(cov.zero_coverage_power(f)) for name, f in fields.items()},
    }
    if "mpcsd" in fields:
        summary["gaps_dB"] = {
            f"mpcsd-{name}": _rounded(thresholds["mpcsd"] - thresholds[name])
            for name in names
            if name.startswith("sp")
        }
    levels = sorted({round(value, 3) for value in thresholds.values() if math.isfinite(value)})
    summary["deadspots"] = {
        _fmt(level): {name: cov.deadspot_count(f, level) for name, f in fields.items()} for level in levels
    }
    if line_profile:
        summary["ripple_minima"] = {
            name: len(cov.ripple_minima(f)) for name, f in fields.items() if name.startswith("sp")
        }
    return summary


def _crossings(curves):
    return {
        f"{a}/{b}": [[_rounded(p), _rounded(c)] for p, c in cov.crossing_points(curves[a], curves[b])]
        for a, b in itertools.combinations(curves, 2)
    }


def _is_line(grid):
    return sum(len(grid.axis_values(axis)) > 1 for axis in cov.AXES) <= 1


def run(scenario, options):
    """Sweep every selected grid and scheme of ``scenario`` and write the result files under ``options.out``."""
    out = Path(options.out)
    out.mkdir(parents=True, exist_ok=True)
    p_range = (
        options.p_req_min if options.p_req_min is not None else scenario.coverage.p_req_min,
        options.p_req_max if options.p_req_max is not None else scenario.coverage.p_req_max,
    )
    p_step = options.p_req_step if options.p_req_step is not None else scenario.coverage.p_req_step

    report = {
        "scenario": scenario.name,
        "max_order": scenario.max_order,
        "schemes": list(scenario.schemes),
        "beat_period_s": offsets_beat_period(scenario.offsets),
        "plan_beat_period_s": beat_period(scenario.plan),
        "grids": {},
    }
    coverage_rows = []
    pooled = {}

    def add_curves(fields, label):
        curves = {}
        for name, field in fields.items():
            curve = cov.coverage_curve(field, p_range, p_step)
            curves[name] = curve
            coverage_rows.extend(
                [_fmt(p), f"{c:.6f}", name, label] for p, c in zip(curve.p_req, curve.coverage)
            )
        return curves

    for grid in scenario.grids:
        fields = cov.sweep_schemes(scenario, scenario.schemes, grid=grid, workers=options.workers)
        for name, field in fields.items():
            write_field(out / f"field_{grid.name}_{name}.csv", field)
            pooled.setdefault(name, []).append(field)
        if options.oracle_check:
            if "mpcsd" in fields:
                oracle_check(scenario, grid, fields["mpcsd"], seed=options.seed, workers=options.workers)
            else:
                logger.warning("oracle check skipped on grid %r: mpcsd is not selected", grid.name)

        block = _analyse(fields, line_profile=_is_line(grid))
        block["crossings"] = _crossings(add_curves(fields, grid.name))
        if grid.slice_axis:
            per_slice = {}
            for name, field in fields.items():
                for part in cov.slices(field, grid.slice_axis):
                    per_slice.setdefault(part.name, {})[name] = part
            block["slices"] = {label: _analyse(parts) for label, parts in per_slice.items()}
            for label, parts in per_slice.items():
                block["slices"][label]["crossings"] = _crossings(add_curves(parts, label))
        report["grids"][grid.name] = block

    if len(scenario.grids) > 1:
        overall = {name: cov.pool(parts, name=OVERALL) for name, parts in pooled.items()}
        report[OVERALL] = _analyse(overall)
        report[OVERALL]["crossings"] = _crossings(add_curves(overall, OVERALL))

    _write_csv(out / "coverage.csv", COVERAGE_COLUMNS, coverage_rows)
    with open(out / "summary.json", "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")

    for grid_name, block in report["grids"].items():
        print(f"{scenario.name} / {grid_name}")
        for name, value in block["thresholds_dBm"].items():
            print(f"  100% coverage up to {value} dBm  [{name}]")
        for label, gap in block.get("gaps_dB", {}).items():
            print(f"  gap {label}: {gap} dB")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    options = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if options.verbose else conf.LOG_LEVEL,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        scenario = load_scenario(options.scenario).restricted(
            schemes=options.schemes, grids=options.grids, max_order=options.max_order
        )
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"mpcsd: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return run(scenario, options)
    except (SimulationError, ValueError, OSError) as exc:
        print(f"mpcsd: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

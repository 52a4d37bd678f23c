import csv
import io
import json
import os
import tempfile
from unittest import TestCase

import mock

from mpcsd.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main


class CommandLineTest(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name
        self.addCleanup(self._tmp.cleanup)

    def run_cli(self, *args, out="out"):
        out = os.path.join(self.tmp, out)
        with mock.patch("sys.stdout", new_callable=io.StringIO) as stdout, mock.patch(
            "sys.stderr", new_callable=io.StringIO
        ) as stderr:
            code = main(["run", *args, "--out", out, "--p-req-step", "1"])
        self.stdout, self.stderr = stdout.getvalue(), stderr.getvalue()
        return code, out

    def read(self, out, name):
        with open(os.path.join(out, name), encoding="utf-8") as handle:
            return handle.read()

    def test_free_space_run(self):
        code, out = self.run_cli("twin_patch_freespace")
        self.assertEqual(code, EXIT_OK)
        for scheme in ("sp1", "sp2", "mp", "mpcsd"):
            rows = list(csv.reader(io.StringIO(self.read(out, f"field_line_{scheme}.csv"))))
            self.assertEqual(rows[0], ["x_m", "y_m", "z_m", "power_dBm", "scheme"])
            self.assertEqual(len(rows), 192)
            self.assertEqual(rows[96][:3], ["0.000", "3.350", "0.000"])
            self.assertEqual({row[4] for row in rows[1:]}, {scheme})

        rows = list(csv.DictReader(io.StringIO(self.read(out, "coverage.csv"))))
        self.assertEqual({row["scheme"] for row in rows}, {"sp1", "sp2", "mp", "mpcsd"})
        self.assertEqual({row["grid_name"] for row in rows}, {"line"})
        for row in rows:
            self.assertTrue(0.0 <= float(row["coverage_fraction"]) <= 1.0)

        summary = json.loads(self.read(out, "summary.json"))
        line = summary["grids"]["line"]
        self.assertEqual(line["points"], 191)
        self.assertEqual(set(line["thresholds_dBm"]), {"sp1", "sp2", "mp", "mpcsd"})
        self.assertIn("mpcsd-sp1", line["gaps_dB"])
        self.assertAlmostEqual(summary["beat_period_s"], 0.02)
        self.assertIn("100% coverage up to", self.stdout)

    def test_scheme_subset(self):
        code, out = self.run_cli("twin_patch_freespace", "--schemes", "sp1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(sorted(f for f in os.listdir(out) if f.startswith("field_")), ["field_line_sp1.csv"])

    def test_order_zero_room_equals_free_space(self):
        _, room = self.run_cli("twin_patch_room", "--grids", "line", "--max-order", "0", out="room")
        _, free = self.run_cli("twin_patch_freespace", out="free")
        for scheme in ("sp1", "sp2", "mp", "mpcsd"):
            name = f"field_line_{scheme}.csv"
            self.assertEqual(self.read(room, name), self.read(free, name))

    def test_deterministic(self):
        _, first = self.run_cli("twin_patch_room", "--grids", "line", out="first")
        _, second = self.run_cli("twin_patch_room", "--grids", "line", "--workers", "1", out="second")
        for name in ("summary.json", "coverage.csv", "field_line_mp.csv"):
            self.assertEqual(self.read(first, name), self.read(second, name))

    def test_room_run_reports_slices_and_overall(self):
        code, out = self.run_cli("twin_patch_room", "--schemes", "sp1,mpcsd")
        self.assertEqual(code, EXIT_OK)
        summary = json.loads(self.read(out, "summary.json"))
        self.assertEqual(set(summary["grids"]), {"line", "horizontal", "vertical"})
        self.assertEqual(len(summary["grids"]["horizontal"]["slices"]), 11)
        self.assertIn("horizontal@x=+0.000", summary["grids"]["horizontal"]["slices"])
        self.assertEqual(summary["overall"]["points"], 191 + 2 * 11 * 191)
        self.assertIn("ripple_minima", summary["grids"]["line"])
        grids = {row["grid_name"] for row in csv.DictReader(io.StringIO(self.read(out, "coverage.csv")))}
        self.assertIn("overall", grids)
        self.assertIn("vertical@z=-0.150", grids)

    def test_malformed_scenario(self):
        path = os.path.join(self.tmp, "broken.scenario")
        with open(path, "w") as handle:
            handle.write("{")
        code, _ = self.run_cli(path)
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("broken.scenario:1:", self.stderr)

    def test_invalid_override(self):
        code, _ = self.run_cli("twin_patch_freespace", "--schemes", "sp9")
        self.assertEqual(code, EXIT_VALIDATION)

    def test_oracle_check(self):
        code, _ = self.run_cli("twin_patch_room", "--grids", "line", "--schemes", "mpcsd", "--oracle-check", "--seed", "7")
        self.assertEqual(code, EXIT_OK)

    def test_oracle_mismatch(self):
        with mock.patch("mpcsd.schemes.time_domain_power", return_value=0.0):
            code, _ = self.run_cli("twin_patch_freespace", "--schemes", "mpcsd", "--oracle-check")
        self.assertEqual(code, EXIT_RUNTIME)
        self.assertIn("grid point 0", self.stderr)

import csv
import json
import math
import os
import sys
from pathlib import Path
import tempfile
import unittest
from unittest import mock


PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCRIPT_DIR = PROJECT_ROOT / "script"

# Add script directory to path
sys.path.insert(0, str(SCRIPT_DIR))

from benchmark import (RunRecord, aggregate, find_instances, instance_name, run_benchmark, scatter_rows,
                       shifted_geomean, write_report)
from boost import Mode, SolveConfig
from errors import NumericalFailure
from instances import hilbert_lp, write_corpus
from mps import write_mps
from rational import RationalLP
from standard_form import general_from_standard
from utils import save_checkpoint

ALL_MODES = list(Mode)


def _write_lp(directory, lp):
    path = Path(directory) / f"{lp.name}.mps"
    path.write_text(write_mps(general_from_standard(lp)), encoding="utf-8")
    return path


class ShiftedGeomeanTests(unittest.TestCase):
    def test_single_value(self):
        self.assertAlmostEqual(shifted_geomean([5], 0.1), 5.0, places=12)

    def test_zeros(self):
        self.assertAlmostEqual(shifted_geomean([0, 0], 0.1), 0.0, places=12)

    def test_two_values(self):
        value = shifted_geomean([1, 10], 0.1)
        self.assertAlmostEqual(value, math.sqrt(1.1 * 10.1) - 0.1, places=12)
        self.assertAlmostEqual(value, 3.2330, places=3)

    def test_invalid_input(self):
        with self.assertRaises(ValueError):
            shifted_geomean([], 0.1)
        with self.assertRaises(ValueError):
            shifted_geomean([1], 0)
        with self.assertRaises(ValueError):
            shifted_geomean([-1], 0.1)


class RecordTests(unittest.TestCase):
    def test_objective_only_for_optimal_runs(self):
        with self.assertRaises(ValueError):
            RunRecord("a", "ir-double", "optimal")
        with self.assertRaises(ValueError):
            RunRecord("a", "ir-double", "failure", objective="1/1")
        record = RunRecord("a", "ir-double", "optimal", objective="1/3", pivots_initial=3, pivots_boosted=4)
        self.assertEqual(record.pivots, 7)
        self.assertTrue(record.solved)
        self.assertFalse(RunRecord("a", "ir-double", "timeout").solved)

    def test_instance_names(self):
        self.assertEqual(instance_name(Path("dir/afiro.mps.gz")), "afiro")
        self.assertEqual(instance_name(Path("afiro.mps")), "afiro")


class AggregateTests(unittest.TestCase):
    def setUp(self):
        self.records = [
            RunRecord("a", "ir-double", "optimal", objective="1/1", time=1.0, pivots_initial=10,
                      initial_basis_optimal=True),
            RunRecord("b", "ir-double", "failure", time=10.0, pivots_initial=10, failure_reason="numerical",
                      initial_basis_optimal=False),
            RunRecord("a", "ir-boosting", "optimal", objective="1/1", time=1.0, pivots_initial=10,
                      initial_basis_optimal=True),
            RunRecord("b", "ir-boosting", "optimal", objective="2/1", time=10.0, pivots_initial=10,
                      pivots_boosted=20, boosts=1, precision_final=192, initial_basis_optimal=False),
        ]

    def test_all_subset(self):
        rows = {(r["subset"], r["mode"]): r for r in aggregate(self.records)}
        double = rows[("all", "ir-double")]
        self.assertEqual((double["instances"], double["solved"], double["failures"]), (2, 1, 1))
        self.assertAlmostEqual(double["time_sgm"], math.sqrt(1.1 * 10.1) - 0.1, places=9)
        self.assertAlmostEqual(double["pivots_sgm"], 10.0, places=9)
        boosting = rows[("all", "ir-boosting")]
        self.assertEqual(boosting["boosted"], 1)
        self.assertAlmostEqual(boosting["pivots_boosted_sgm"], math.sqrt(10 * 30) - 10, places=9)

    def test_subsets_by_instance(self):
        rows = {(r["subset"], r["mode"]): r for r in aggregate(self.records)}
        # instance b is boosted by one mode, so it counts as boosted for every mode
        self.assertEqual(rows[("boosted", "ir-double")]["instances"], 1)
        self.assertEqual(rows[("not-boosted", "ir-boosting")]["instances"], 1)
        self.assertEqual(rows[("initial-optimal", "ir-double")]["solved"], 1)
        self.assertEqual(rows[("initial-not-optimal", "ir-double")]["failures"], 1)

    def test_scatter_pairs(self):
        scatter = scatter_rows(self.records)
        self.assertEqual(len(scatter), 2)
        self.assertEqual({(r["mode_a"], r["mode_b"]) for r in scatter}, {("ir-boosting", "ir-double")})


class RunBenchmarkTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.instances = Path(self.tmp.name) / "instances"
        self.instances.mkdir()
        self.checkpoint = str(Path(self.tmp.name) / "checkpoint.pkl")
        self.config = SolveConfig(time_limit=600.0)

    def test_trivial_lps_agree_across_modes(self):
        _write_lp(self.instances, RationalLP.from_dense([[3]], [1], [1], name="third"))
        _write_lp(self.instances, RationalLP.from_dense([[1, 1]], [1], [-1, 0], name="corner"))
        (self.instances / "notes.txt").write_text("ignored", encoding="utf-8")
        report = run_benchmark(str(self.instances), ALL_MODES, seed=3, config=self.config, threads=2,
                               checkpoint=self.checkpoint)
        self.assertEqual(len(report.records), 6)
        self.assertFalse(report.interrupted)
        by_instance = {}
        for record in report.records:
            by_instance.setdefault(record.instance, set()).add((record.status, record.objective))
            self.assertEqual(record.boosts, 0)
        self.assertEqual(by_instance["third"], {("optimal", "1/3")})
        self.assertEqual(by_instance["corner"], {("optimal", "-1/1")})
        self.assertEqual([(r.instance, r.mode) for r in report.records],
                         sorted((r.instance, r.mode) for r in report.records))

    def test_ill_conditioned_and_broken_instances(self):
        _write_lp(self.instances, hilbert_lp(8, 57))
        (self.instances / "broken.mps").write_text("NAME broken\nBOGUS\nENDATA\n", encoding="utf-8")
        report = run_benchmark(str(self.instances), ALL_MODES, config=self.config, threads=1,
                               checkpoint=self.checkpoint)
        status = {(r.instance, r.mode): r for r in report.records}
        self.assertEqual(status[("hilbert8_e57", "ir-double")].status, "failure")
        self.assertEqual(status[("hilbert8_e57", "ir-boosting")].objective, "10/1")
        self.assertEqual(status[("hilbert8_e57", "boosting-pure")].objective, "10/1")
        broken = status[("broken", "ir-boosting")]
        self.assertEqual(broken.status, "failure")
        self.assertTrue(broken.failure_reason.startswith("parse error"))

    def test_coefficient_beyond_double_range(self):
        _write_lp(self.instances, RationalLP.from_dense([[10 ** 400]], [10 ** 400], [1], name="huge"))
        report = run_benchmark(str(self.instances), ALL_MODES, config=self.config, threads=1,
                               checkpoint=self.checkpoint)
        status = {r.mode: r for r in report.records}
        self.assertEqual(len(status), 3)
        self.assertEqual(status["ir-double"].status, "failure")
        self.assertEqual(status["ir-double"].failure_reason, "numerical")
        self.assertEqual((status["boosting-pure"].status, status["boosting-pure"].objective), ("optimal", "1/1"))

    def test_solver_error_becomes_failure_row(self):
        _write_lp(self.instances, RationalLP.from_dense([[3]], [1], [1], name="third"))
        with mock.patch("benchmark.solve_exact", side_effect=NumericalFailure("singular update")):
            report = run_benchmark(str(self.instances), [Mode.IR_BOOSTING], config=self.config, threads=1,
                                   checkpoint=self.checkpoint)
        record, = report.records
        self.assertEqual(record.status, "failure")
        self.assertEqual(record.failure_reason, "error: singular update")

    def test_resume_skips_finished_runs(self):
        _write_lp(self.instances, RationalLP.from_dense([[3]], [1], [1], name="third"))
        finished = {("third", "ir-double"): RunRecord("third", "ir-double", "optimal", objective="9/9")}
        save_checkpoint(finished, path=self.checkpoint)
        report = run_benchmark(str(self.instances), [Mode.IR_DOUBLE, Mode.IR_BOOSTING], config=self.config,
                               resume=True, checkpoint=self.checkpoint)
        objectives = {r.mode: r.objective for r in report.records}
        self.assertEqual(objectives, {"ir-double": "9/9", "ir-boosting": "1/3"})
        self.assertFalse(os.path.exists(self.checkpoint))

    def test_missing_directory(self):
        with self.assertRaises(FileNotFoundError):
            find_instances(str(Path(self.tmp.name) / "absent"))

    def test_generated_corpus_and_report_files(self):
        paths = write_corpus(str(self.instances), kind="random", count=2, seed=1)
        self.assertEqual(len(paths), 2)
        self.assertEqual(find_instances(str(self.instances)), sorted(paths))
        report = run_benchmark(str(self.instances), [Mode.IR_BOOSTING], config=self.config,
                               checkpoint=self.checkpoint)
        outputs = write_report(report, str(Path(self.tmp.name) / "out" / "bench"))
        self.assertEqual([p.name for p in outputs],
                         ["bench_runs.csv", "bench_aggregate.csv", "bench_scatter.csv", "bench.json"])
        with open(outputs[0], newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 2)
        self.assertIn("pivots_boosted", rows[0])
        with open(outputs[3], encoding="utf-8") as f:
            data = json.load(f)
        self.assertEqual(len(data["runs"]), 2)
        self.assertEqual(data["aggregates"][0]["subset"], "all")


if __name__ == "__main__":
    unittest.main()

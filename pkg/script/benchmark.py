"""Benchmark harness: run every mode on a directory of MPS files and aggregate
with shifted geometric means."""

from concurrent.futures import ThreadPoolExecutor, as_completed
import csv
from dataclasses import asdict, dataclass, field, fields, replace
import itertools
import json
from pathlib import Path
import random
import threading
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from boost import FAILURE, OPTIMAL, Mode, SolveConfig, solve_exact
from errors import ExactLPError
from mps import read_mps
from rational import format_rational
from standard_form import to_standard_form
from utils import (CHECKPOINT_FILE, DEFAULT_THREADS, ITERATION_SHIFT, TIME_SHIFT, LogLevel, get_env_int,
                   load_checkpoint, log, save_checkpoint, shutdown_requested)

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False

MPS_SUFFIXES = (".mps", ".mps.gz")
SUBSETS = ("all", "initial-optimal", "initial-not-optimal", "boosted", "not-boosted")


# ==============================================================================
# RECORDS
# ==============================================================================
@dataclass
class RunRecord:
    instance: str
    mode: str
    status: str
    objective: Optional[str] = None  # "num/den", optimal runs only
    time: float = 0.0                # wall time excluding the initial fp solve
    time_initial: float = 0.0
    rounds: int = 0
    boosts: int = 0
    pivots_initial: int = 0
    pivots_boosted: int = 0
    precision_final: int = 64
    initial_basis_optimal: Optional[bool] = None
    failure_reason: str = ""

    def __post_init__(self):
        if (self.objective is not None) != (self.status == OPTIMAL):
            raise ValueError(f"{self.instance}/{self.mode}: objective must be present exactly for optimal runs")

    @property
    def pivots(self) -> int:
        return self.pivots_initial + self.pivots_boosted

    @property
    def solved(self) -> bool:
        return self.status not in (FAILURE, "timeout")


@dataclass
class BenchmarkReport:
    records: List[RunRecord]
    aggregates: List[Dict[str, Any]] = field(default_factory=list)
    scatter: List[Dict[str, Any]] = field(default_factory=list)
    interrupted: bool = False


def shifted_geomean(values: Iterable[float], shift: float) -> float:
    """exp(mean(log(v + shift))) - shift."""
    if shift <= 0:
        raise ValueError(f"shift must be positive, got {shift}")
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        raise ValueError("shifted geometric mean of an empty list")
    if np.any(data < 0):
        raise ValueError("shifted geometric mean needs nonnegative values")
    return float(np.exp(np.mean(np.log(data + shift))) - shift)


# ==============================================================================
# RUNS
# ==============================================================================
def instance_name(path: Path) -> str:
    name = path.name
    for suffix in MPS_SUFFIXES:
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return name


def find_instances(instance_dir: str) -> List[Path]:
    root = Path(instance_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"instance directory {instance_dir} does not exist")
    return sorted(p for p in root.iterdir() if p.is_file() and p.name.endswith(MPS_SUFFIXES))


def run_instance(path: Path, mode: Mode, config: SolveConfig) -> RunRecord:
    """Solve one instance in one mode; unreadable files become failure rows."""
    name = instance_name(path)
    try:
        general = read_mps(str(path))
        lp, vmap = to_standard_form(general)
    except (ExactLPError, OSError, UnicodeDecodeError) as exc:
        log(f"{name}: cannot read instance: {exc}", config.log_file, LogLevel.WARNING)
        return RunRecord(name, mode.value, FAILURE, failure_reason=f"parse error: {exc}")

    try:
        result = solve_exact(lp, replace(config, mode=mode))
    except ExactLPError as exc:
        log(f"{name}: solver error in {mode.value}: {exc}", config.log_file, LogLevel.WARNING)
        return RunRecord(name, mode.value, FAILURE, failure_reason=f"error: {exc}")
    stats = result.statistics
    objective = None
    if result.status == OPTIMAL:
        objective = format_rational(vmap.original_objective(result.objective))
    return RunRecord(
        instance=name,
        mode=mode.value,
        status=result.status,
        objective=objective,
        time=max(0.0, stats.time_total - stats.time_initial),
        time_initial=stats.time_initial,
        rounds=stats.refinement_rounds,
        boosts=stats.boosts,
        pivots_initial=stats.pivots_initial,
        pivots_boosted=stats.pivots_boosted,
        precision_final=result.precision_final,
        initial_basis_optimal=stats.initial_basis_optimal,
        failure_reason=result.failure_reason,
    )


def run_benchmark(instance_dir: str, modes: Sequence[Mode], seed: int = 0,
                  config: Optional[SolveConfig] = None, threads: Optional[int] = None,
                  resume: bool = False, checkpoint: str = CHECKPOINT_FILE) -> BenchmarkReport:
    """Run all (instance, mode) pairs; records come back sorted, so aggregation is deterministic."""
    config = config or SolveConfig()
    log_file = config.log_file
    if threads is None:
        threads = get_env_int("EXACTLP_THREADS", DEFAULT_THREADS)
    threads = max(1, threads)

    paths = find_instances(instance_dir)
    jobs = [(p, m) for p in paths for m in modes]
    random.Random(seed).shuffle(jobs)

    finished: Dict[Tuple[str, str], RunRecord] = load_checkpoint(log_file, checkpoint) if resume else {}
    pending = [(p, m) for p, m in jobs if (instance_name(p), m.value) not in finished]
    log(f"Benchmark: {len(paths)} instances x {len(modes)} modes, {len(pending)} runs pending, "
        f"{threads} worker(s)", log_file, LogLevel.INFO,
        extra={"modes": [m.value for m in modes], "seed": seed})

    lock = threading.Lock()
    interrupted = False

    def job(path: Path, mode: Mode) -> Optional[RunRecord]:
        if shutdown_requested():
            return None
        return run_instance(path, mode, config)

    progress = tqdm(total=len(pending), desc="Benchmark", unit="run") if TQDM_AVAILABLE and pending else None
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job, p, m) for p, m in pending]
        for future in as_completed(futures):
            record = future.result()
            if record is None:
                interrupted = True
                continue
            with lock:
                finished[(record.instance, record.mode)] = record
                if len(finished) % 10 == 0:
                    save_checkpoint(finished, log_file, checkpoint)
            if progress:
                progress.update(1)
                progress.set_postfix({"last": f"{record.instance}/{record.mode}: {record.status}"})
    if progress:
        progress.close()

    if interrupted:
        save_checkpoint(finished, log_file, checkpoint)
        log("Shutdown requested, benchmark stopped early; rerun with --resume to continue",
            log_file, LogLevel.WARNING)
    elif resume and Path(checkpoint).exists():
        Path(checkpoint).unlink()

    records = sorted(finished.values(), key=lambda r: (r.instance, r.mode))
    return BenchmarkReport(records, aggregate(records), scatter_rows(records), interrupted)


# ==============================================================================
# AGGREGATION
# ==============================================================================
def _subset_instances(records: Sequence[RunRecord]) -> Dict[str, set]:
    instances = {r.instance for r in records}
    initial_optimal = {r.instance for r in records if r.initial_basis_optimal}
    boosted = {r.instance for r in records if r.boosts > 0}
    return {
        "all": instances,
        "initial-optimal": initial_optimal,
        "initial-not-optimal": instances - initial_optimal,
        "boosted": boosted,
        "not-boosted": instances - boosted,
    }


def aggregate(records: Sequence[RunRecord]) -> List[Dict[str, Any]]:
    """Per mode and subset: counts and shifted geometric means of time and pivots."""
    subsets = _subset_instances(records)
    modes = sorted({r.mode for r in records})
    rows = []
    for subset in SUBSETS:
        for mode in modes:
            group = [r for r in records if r.mode == mode and r.instance in subsets[subset]]
            if not group:
                continue
            rows.append({
                "subset": subset,
                "mode": mode,
                "instances": len(group),
                "solved": sum(r.solved for r in group),
                "failures": sum(r.status == FAILURE for r in group),
                "timeouts": sum(r.status == "timeout" for r in group),
                "boosted": sum(r.boosts > 0 for r in group),
                "time_sgm": shifted_geomean([r.time for r in group], TIME_SHIFT),
                "pivots_sgm": shifted_geomean([r.pivots for r in group], ITERATION_SHIFT),
                "pivots_initial_sgm": shifted_geomean([r.pivots_initial for r in group], ITERATION_SHIFT),
                "pivots_boosted_sgm": shifted_geomean([r.pivots_boosted for r in group], ITERATION_SHIFT),
            })
    return rows


def scatter_rows(records: Sequence[RunRecord]) -> List[Dict[str, Any]]:
    """Per-instance times of every mode pair, for external scatter plots."""
    by_key = {(r.instance, r.mode): r for r in records}
    modes = sorted({r.mode for r in records})
    instances = sorted({r.instance for r in records})
    rows = []
    for first, second in itertools.combinations(modes, 2):
        for instance in instances:
            a, b = by_key.get((instance, first)), by_key.get((instance, second))
            if a is None or b is None:
                continue
            rows.append({
                "instance": instance,
                "mode_a": first,
                "mode_b": second,
                "time_a": a.time,
                "time_b": b.time,
                "solved_a": a.solved,
                "solved_b": b.solved,
            })
    return rows


# ==============================================================================
# OUTPUT
# ==============================================================================
def _write_csv(path: Path, rows: List[Dict[str, Any]], columns: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_report(report: BenchmarkReport, prefix: str, log_file: Optional[str] = None) -> List[Path]:
    """Write <prefix>_runs.csv, <prefix>_aggregate.csv, <prefix>_scatter.csv and <prefix>.json."""
    base = Path(prefix)
    if base.parent and not base.parent.exists():
        base.parent.mkdir(parents=True, exist_ok=True)
    run_rows = [asdict(r) for r in report.records]
    outputs = [
        base.with_name(base.name + "_runs.csv"),
        base.with_name(base.name + "_aggregate.csv"),
        base.with_name(base.name + "_scatter.csv"),
        base.with_name(base.name + ".json"),
    ]
    _write_csv(outputs[0], run_rows, [f.name for f in fields(RunRecord)])
    aggregate_columns = list(report.aggregates[0]) if report.aggregates else ["subset", "mode"]
    _write_csv(outputs[1], report.aggregates, aggregate_columns)
    scatter_columns = ["instance", "mode_a", "mode_b", "time_a", "time_b", "solved_a", "solved_b"]
    _write_csv(outputs[2], report.scatter, scatter_columns)
    with open(outputs[3], "w", encoding="utf-8") as f:
        json.dump({
            "runs": run_rows,
            "aggregates": report.aggregates,
            "interrupted": report.interrupted,
        }, f, indent=2)
    log(f"Benchmark report written to {', '.join(str(p) for p in outputs)}", log_file, LogLevel.INFO)
    return outputs

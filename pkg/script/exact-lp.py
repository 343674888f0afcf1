#!/usr/bin/env python3
"""
EXACT-LP - Solve linear programs exactly over the rationals.

Subcommands:
  solve     solve one MPS file and print the certified verdict
  bench     run all modes over a directory of MPS files
  generate  write seeded random and ill-conditioned instances
"""

import argparse
import os
from pathlib import Path
import signal
import sys
from typing import List, Optional

# Add script directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from benchmark import run_benchmark, write_report
from boost import Mode, SolveConfig, solve_exact
from errors import ExactLPError
from instances import write_corpus
from mps import read_mps
from rational import parse_rational
from report import summary_line, write_result
from standard_form import to_standard_form
from utils import (CHECKPOINT_FILE, DEFAULT_CONFIG_FILE, LogLevel, VALID_MODES, export_statistics,
                   load_config, log, resolve_setting, set_log_level, signal_handler)

EXIT_CERTIFIED = 0
EXIT_USAGE = 1
EXIT_UNCERTIFIED = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this CLI reserves 2 for uncertified results."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# ==============================================================================
# CLI ARGUMENT PARSING
# ==============================================================================
def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=DEFAULT_CONFIG_FILE, help="Path to config file (.json, .env or INI)")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Set logging verbosity")
    parser.add_argument("--mode", choices=VALID_MODES, help="Solving mode (default ir-boosting)")
    parser.add_argument("--time-limit", type=float, help="Time limit in seconds per instance")
    parser.add_argument("--alpha", help="Maximum scaling growth per refinement round (exact rational)")
    parser.add_argument("--max-precision", type=int, help="Largest floating-point precision in bits")


def create_arg_parser() -> argparse.ArgumentParser:
    """Create the CLI argument parser."""
    parser = _Parser(
        prog="exact-lp",
        description="Exact rational LP solving by iterative refinement and precision boosting.",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    solve = sub.add_parser("solve", help="Solve one MPS file")
    _add_common(solve)
    solve.add_argument("--json", metavar="PATH", help="Write the full result document to PATH")
    solve.add_argument("--stats", action="store_true", help="Log solve statistics")
    solve.add_argument("--export-stats", choices=["json", "csv"], help="Export statistics to file")
    solve.add_argument("--fixed", action="store_true", help="Read fixed-format MPS")
    solve.add_argument("file", help="MPS or MPS.gz file")

    bench = sub.add_parser("bench", help="Benchmark all modes on a directory of MPS files")
    _add_common(bench)
    bench.add_argument("directory")
    bench.add_argument("--modes", nargs="+", choices=VALID_MODES, default=list(VALID_MODES))
    bench.add_argument("--seed", type=int, default=0, help="Seed of the run order")
    bench.add_argument("--out", default="exactlp_bench", help="Prefix of the CSV/JSON outputs")
    bench.add_argument("--threads", type=int, help="Worker slots (default EXACTLP_THREADS)")
    bench.add_argument("--resume", action="store_true", help="Resume from previous run")
    bench.add_argument("--clear-checkpoint", action="store_true", help="Clear checkpoint and start fresh")

    generate = sub.add_parser("generate", help="Write generated instances as MPS files")
    generate.add_argument("directory")
    generate.add_argument("--kind", choices=["random", "ill", "both"], default="both")
    generate.add_argument("--count", type=int, default=10)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def build_config(args: argparse.Namespace) -> SolveConfig:
    """CLI flag > environment variable > config file > default."""
    settings = load_config(args.config)
    alpha = parse_rational(args.alpha) if args.alpha is not None else None
    return SolveConfig.from_settings(
        settings,
        mode=Mode(args.mode) if args.mode else None,
        time_limit=args.time_limit,
        alpha=alpha,
        max_precision_bits=args.max_precision,
    )


# ==============================================================================
# COMMANDS
# ==============================================================================
def cmd_solve(args: argparse.Namespace, config: SolveConfig) -> int:
    log_file = config.log_file
    general = read_mps(args.file, fixed=args.fixed)
    lp, vmap = to_standard_form(general)
    log(f"START: {general.name} ({lp.m} rows, {lp.n} columns, {lp.A.nnz} nonzeros) | mode={config.mode.value}",
        log_file, LogLevel.INFO,
        extra={"mode": config.mode.value, "alpha": str(config.alpha), "time_limit": config.time_limit})

    result = solve_exact(lp, config)
    print(summary_line(result, vmap), flush=True)

    if args.json:
        write_result(args.json, result, vmap, general.name, log_file)
    if args.stats or args.export_stats:
        statistics = result.statistics.to_dict()
        statistics["status"] = result.status
        if args.stats:
            log(f"FINISH: {result.status} | boosts={statistics['boosts']} | "
                f"rounds={statistics['refinement_rounds']} | precision={result.precision_final}",
                log_file, LogLevel.INFO, extra={"statistics": statistics})
        if args.export_stats:
            export_statistics(statistics, log_file, args.export_stats)
    return EXIT_CERTIFIED if result.certified else EXIT_UNCERTIFIED


def cmd_bench(args: argparse.Namespace, config: SolveConfig) -> int:
    log_file = config.log_file
    if args.clear_checkpoint and Path(CHECKPOINT_FILE).exists():
        Path(CHECKPOINT_FILE).unlink()
        log("Checkpoint cleared", log_file, LogLevel.INFO)
    report = run_benchmark(args.directory, [Mode(m) for m in args.modes], args.seed, config,
                           args.threads, args.resume)
    write_report(report, args.out, log_file)
    for row in report.aggregates:
        if row["subset"] == "all":
            log(f"{row['mode']}: solved {row['solved']}/{row['instances']} | "
                f"time sgm {row['time_sgm']:.4f}s | pivots sgm {row['pivots_sgm']:.1f}",
                log_file, LogLevel.INFO)
    return EXIT_UNCERTIFIED if report.interrupted else EXIT_CERTIFIED


def cmd_generate(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise ValueError("--count must be at least 1")
    write_corpus(args.directory, args.kind, args.count, args.seed)
    return EXIT_CERTIFIED


# ==============================================================================
# MAIN FUNCTION
# ==============================================================================
def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = create_arg_parser()
    args = parser.parse_args(argv)

    if args.command == "generate":
        set_log_level(args.log_level or "INFO")
        try:
            return cmd_generate(args)
        except (OSError, ValueError) as exc:
            log(f"ERROR: {exc}", level=LogLevel.ERROR)
            return EXIT_USAGE

    settings = load_config(args.config)
    set_log_level(args.log_level or resolve_setting("EXACTLP_LOG_LEVEL", settings) or "INFO")
    try:
        config = build_config(args)
    except (ExactLPError, ValueError) as exc:
        log(f"ERROR: invalid configuration: {exc}", level=LogLevel.ERROR)
        return EXIT_USAGE

    try:
        if args.command == "solve":
            return cmd_solve(args, config)
        return cmd_bench(args, config)
    except (ExactLPError, OSError) as exc:
        log(f"ERROR: {exc}", config.log_file, LogLevel.ERROR)
        return EXIT_USAGE


def main() -> None:
    # Setup signal handlers for graceful shutdown
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

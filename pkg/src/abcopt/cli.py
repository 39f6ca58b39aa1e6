"""Command-line entry points.

    abcopt run CONFIG [--output DIR]     execute an experiment config
    abcopt validate CONFIG               dry-run validation, nothing executed
    abcopt bench FUNCTION --variant V --pn N --budget B --seed S [...]
                                         one run on a builtin benchmark,
                                         trace CSV on stdout
    abcopt report DIR                    regenerate summary.csv from traces

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .colony import ColonyConfig, RunAborted, run
from .harness import (
    ConfigError,
    format_summary,
    format_trace,
    parse_config,
    run_experiment,
    summarize,
    write_summary,
)
from .objective import EvaluationError, ObjectiveSpec, benchmark_names
from .space import ParamSpec, SearchSpace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; bad usage is a validation failure
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abcopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"abcopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a YAML experiment config")
    p_run.add_argument("--output", help="output directory (overrides the config)")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config", help="path to a YAML experiment config")

    p_bench = sub.add_parser("bench", help="single benchmark run, trace to stdout")
    p_bench.add_argument("function", choices=benchmark_names())
    p_bench.add_argument("--variant", required=True)
    p_bench.add_argument("--pn", type=int, required=True)
    p_bench.add_argument("--k", type=int, help="cluster count (optabc only)")
    p_bench.add_argument("--limit", type=int, default=20)
    p_bench.add_argument("--budget", type=int, required=True)
    p_bench.add_argument("--seed", type=int, required=True)
    p_bench.add_argument("--dim", type=int, default=5)
    p_bench.add_argument("--lower", type=float, default=-5.12)
    p_bench.add_argument("--upper", type=float, default=5.12)
    p_bench.add_argument("--max-iterations", type=int)

    p_report = sub.add_parser("report", help="regenerate summary.csv from a run directory")
    p_report.add_argument("directory")

    return parser


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    report = run_experiment(config, output_dir=args.output)
    sys.stdout.write(format_summary(summarize(report.output_dir)))
    sys.stderr.write(f"wrote {report.summary_path} and {report.manifest_path}\n")
    for record in report.records:
        if record.status != "ok":
            sys.stderr.write(
                f"{record.status}: {record.cell_id} seed {record.seed}: {record.error}\n"
            )
    return EXIT_OK if report.all_ok else EXIT_RUNTIME


def _cmd_validate(args) -> int:
    config = parse_config(args.config)
    problems = []
    for i, cell in enumerate(config.cells):
        try:
            config.colony_config(cell, config.seeds[0])
        except ValueError as exc:
            problems.append(f"cells[{i}]: {exc}")
    if problems:
        for problem in problems:
            sys.stderr.write(f"{args.config}: {problem}\n")
        return EXIT_VALIDATION
    total = len(config.cells) * len(config.seeds)
    sys.stdout.write(
        f"{args.config}: OK ({len(config.cells)} cells x {len(config.seeds)} seeds "
        f"= {total} runs, budget {config.budget})\n"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    space = SearchSpace(
        [
            ParamSpec(f"x{i}", "continuous", lower=args.lower, upper=args.upper)
            for i in range(args.dim)
        ]
    )
    config = ColonyConfig(
        variant=args.variant,
        pn=args.pn,
        limit=args.limit,
        k_clusters=args.k,
        budget=args.budget,
        max_iterations=args.max_iterations,
        seed=args.seed,
    )
    result = run(config, space, ObjectiveSpec.builtin(args.function))
    sys.stdout.write(format_trace(result.trace))
    sys.stderr.write(
        f"best {result.best.objective!r} at {result.best.position} "
        f"after {result.ledger.count} evaluations\n"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    path = write_summary(args.directory)
    sys.stdout.write(format_summary(summarize(args.directory)))
    sys.stderr.write(f"wrote {path}\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_report(args)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (RunAborted, EvaluationError) as exc:
        sys.stderr.write(f"run failed: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

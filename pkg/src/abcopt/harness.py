"""Experiment harness: declarative configs, seeded runs, reports.

A config is a YAML file:

    space:
      - {name: x0, kind: continuous, lower: -5.12, upper: 5.12}
      - {name: depth, kind: integer, lower: 1, upper: 100}
      - {name: kernel, kind: categorical, categories: [rbf, poly, linear]}
    objective:
      function: sphere            # builtin, or instead:
      # command: [python, -m, my_evaluator, --mode, holdout]
      # timeout: 120
      # workers: 2
    cells:
      - {variant: optabc, pn: 100, k: 10, limit: 5}
      - {variant: hyp-abc, pn: 100, limit: 5}
    seeds: [101, 211, 307]        # optional, defaults to DEFAULT_SEEDS
    budget: 5000
    max_iterations: 200           # optional
    target_objective: 1.0e-8      # optional
    output: runs/sphere           # optional, CLI --output overrides

Every (cell x seed) pair becomes one run. Each run writes one trace file
(CSV: iteration, best_objective, evaluations, elapsed_seconds); the
experiment writes summary.csv plus manifest.json. Summary statistics are
always recomputed from the trace files on disk, never from in-memory
state, so `report` regenerates the identical summary later. The manifest
records everything needed to reproduce a run except wall-clock times.

Failed runs are recorded and skipped in the aggregates; the experiment
keeps going.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from .colony import VARIANTS, ColonyConfig, ConvergenceTrace, RunAborted, TraceRow, run
from .objective import PROTOCOL_VERSION, EvaluationError, ObjectiveSpec
from .space import ParamSpec, SearchSpace

# fixed seed set shared by all variants when a config does not list its own
DEFAULT_SEEDS = (101, 211, 307, 401, 503, 601, 701, 809, 907, 1009)

TRACE_HEADER = "iteration,best_objective,evaluations,elapsed_seconds"
SUMMARY_HEADER = (
    "cell,variant,pn,k_clusters,limit,runs,completed,failed,"
    "mean_final_objective,min_final_objective,max_final_objective,"
    "mean_evaluations,mean_elapsed_seconds"
)
MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "summary.csv"


class ConfigError(ValueError):
    """A config file failed to parse or validate; message carries file:line."""


@dataclass(frozen=True)
class Cell:
    """One engine configuration to run under every seed."""

    variant: str
    pn: int
    limit: int
    k_clusters: int | None = None

    @property
    def slug(self) -> str:
        parts = [self.variant.replace("-", ""), f"pn{self.pn}"]
        if self.k_clusters is not None:
            parts.append(f"k{self.k_clusters}")
        parts.append(f"limit{self.limit}")
        return "_".join(parts)


@dataclass(frozen=True)
class ExperimentConfig:
    space: SearchSpace
    objective: ObjectiveSpec
    cells: tuple[Cell, ...]
    seeds: tuple[int, ...]
    budget: int
    max_iterations: int | None = None
    target_objective: float | None = None
    output: str | None = None

    def colony_config(self, cell: Cell, seed: int) -> ColonyConfig:
        return ColonyConfig(
            variant=cell.variant,
            pn=cell.pn,
            limit=cell.limit,
            k_clusters=cell.k_clusters,
            seed=seed,
            budget=self.budget,
            max_iterations=self.max_iterations,
            target_objective=self.target_objective,
        )

    def as_dict(self) -> dict:
        objective: dict[str, Any] = {"kind": self.objective.kind}
        if self.objective.kind == "builtin":
            objective["function"] = self.objective.function
            if self.objective.options:
                objective["options"] = dict(self.objective.options)
        else:
            objective["command"] = list(self.objective.command)
            objective["timeout"] = self.objective.timeout
            objective["workers"] = self.objective.workers
        cells = []
        for cell in self.cells:
            entry: dict[str, Any] = {"variant": cell.variant, "pn": cell.pn, "limit": cell.limit}
            if cell.k_clusters is not None:
                entry["k"] = cell.k_clusters
            cells.append(entry)
        out: dict[str, Any] = {
            "space": self.space.to_wire(),
            "objective": objective,
            "cells": cells,
            "seeds": list(self.seeds),
            "budget": self.budget,
        }
        if self.max_iterations is not None:
            out["max_iterations"] = self.max_iterations
        if self.target_objective is not None:
            out["target_objective"] = self.target_objective
        if self.output is not None:
            out["output"] = self.output
        return out


# ---------------------------------------------------------------------------
# Config parsing with line-anchored errors
# ---------------------------------------------------------------------------


def _line_map(text: str) -> dict[tuple, int]:
    """Map every key path in the YAML document to its 1-based line."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    lines: dict[tuple, int] = {(): 1}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                sub = path + (key_node.value,)
                lines[sub] = key_node.start_mark.line + 1
                walk(value_node, sub)
        elif isinstance(node, yaml.SequenceNode):
            for index, item in enumerate(node.value):
                sub = path + (index,)
                lines[sub] = item.start_mark.line + 1
                walk(item, sub)

    if root is not None:
        walk(root, ())
    return lines


def _render_path(path: tuple) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else part)
    return out or "top level"


class _Checker:
    """Walks parsed config data, raising ConfigError with file:line anchors."""

    def __init__(self, filename: str, data: Any, lines: dict[tuple, int]):
        self.filename = filename
        self.data = data
        self.lines = lines

    def fail(self, path: tuple, message: str):
        line = self.lines.get(path) or self.lines.get(path[:-1]) or 1
        raise ConfigError(f"{self.filename}:{line}: {_render_path(path)}: {message}")

    def mapping(self, path: tuple, value: Any, allowed: Sequence[str]) -> dict:
        if not isinstance(value, dict):
            self.fail(path, "expected a mapping")
        unknown = sorted(set(value) - set(allowed))
        if unknown:
            self.fail(path + (unknown[0],), f"unknown key {unknown[0]!r}")
        return value

    def sequence(self, path: tuple, value: Any, what: str) -> list:
        if not isinstance(value, list) or not value:
            self.fail(path, f"expected a non-empty list of {what}")
        return value

    def integer(self, path: tuple, value: Any, minimum: int | None = None) -> int:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, "expected an integer")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be at least {minimum}, got {value}")
        return value

    def number(self, path: tuple, value: Any) -> float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(path, "expected a number")
        return float(value)

    def string(self, path: tuple, value: Any) -> str:
        if not isinstance(value, str) or not value:
            self.fail(path, "expected a non-empty string")
        return value


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        raise ConfigError(f"{path.name}:{line}: not valid YAML: {exc}") from exc
    chk = _Checker(path.name, data, _line_map(text))
    top = chk.mapping(
        (),
        data,
        [
            "space",
            "objective",
            "cells",
            "seeds",
            "budget",
            "max_iterations",
            "target_objective",
            "output",
        ],
    )
    for required in ("space", "objective", "cells", "budget"):
        if required not in top:
            chk.fail((required,), "required key missing")

    space = _parse_space(chk, top["space"])
    objective = _parse_objective(chk, top["objective"])
    cells = _parse_cells(chk, top["cells"])

    if "seeds" in top:
        raw_seeds = chk.sequence(("seeds",), top["seeds"], "integers")
        seeds = tuple(chk.integer(("seeds", i), s) for i, s in enumerate(raw_seeds))
        if len(set(seeds)) != len(seeds):
            chk.fail(("seeds",), "seeds must be distinct")
    else:
        seeds = DEFAULT_SEEDS

    budget = chk.integer(("budget",), top["budget"], minimum=1)
    max_iterations = (
        chk.integer(("max_iterations",), top["max_iterations"], minimum=1)
        if "max_iterations" in top
        else None
    )
    target = (
        chk.number(("target_objective",), top["target_objective"])
        if "target_objective" in top
        else None
    )
    output = chk.string(("output",), top["output"]) if "output" in top else None
    return ExperimentConfig(
        space=space,
        objective=objective,
        cells=cells,
        seeds=seeds,
        budget=budget,
        max_iterations=max_iterations,
        target_objective=target,
        output=output,
    )


def _parse_space(chk: _Checker, raw: Any) -> SearchSpace:
    entries = chk.sequence(("space",), raw, "param mappings")
    specs = []
    for i, entry in enumerate(entries):
        path = ("space", i)
        entry = chk.mapping(path, entry, ["name", "kind", "lower", "upper", "categories"])
        categories = None
        if "categories" in entry:
            cats = chk.sequence(path + ("categories",), entry["categories"], "labels")
            categories = tuple(
                chk.string(path + ("categories", j), c) for j, c in enumerate(cats)
            )
        try:
            specs.append(
                ParamSpec(
                    name=entry.get("name"),
                    kind=entry.get("kind"),
                    lower=entry.get("lower"),
                    upper=entry.get("upper"),
                    categories=categories,
                )
            )
        except ValueError as exc:
            chk.fail(path, str(exc))
    try:
        return SearchSpace(specs)
    except ValueError as exc:
        chk.fail(("space",), str(exc))


def _parse_objective(chk: _Checker, raw: Any) -> ObjectiveSpec:
    entry = chk.mapping(
        ("objective",), raw, ["function", "options", "command", "timeout", "workers"]
    )
    has_function = "function" in entry
    has_command = "command" in entry
    if has_function == has_command:
        chk.fail(("objective",), "set exactly one of 'function' (builtin) or 'command'")
    try:
        if has_function:
            options = entry.get("options", {})
            if not isinstance(options, dict) or not all(isinstance(k, str) for k in options):
                chk.fail(("objective", "options"), "expected a mapping with string keys")
            return ObjectiveSpec.builtin(
                chk.string(("objective", "function"), entry["function"]), **options
            )
        command = chk.sequence(("objective", "command"), entry["command"], "strings")
        command = [
            chk.string(("objective", "command", i), part) for i, part in enumerate(command)
        ]
        timeout = (
            chk.number(("objective", "timeout"), entry["timeout"]) if "timeout" in entry else 60.0
        )
        workers = (
            chk.integer(("objective", "workers"), entry["workers"], minimum=1)
            if "workers" in entry
            else 1
        )
        return ObjectiveSpec.external(command, timeout=timeout, workers=workers)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        chk.fail(("objective",), str(exc))


def _parse_cells(chk: _Checker, raw: Any) -> tuple[Cell, ...]:
    entries = chk.sequence(("cells",), raw, "cell mappings")
    cells = []
    for i, entry in enumerate(entries):
        path = ("cells", i)
        entry = chk.mapping(path, entry, ["variant", "pn", "k", "limit"])
        for required in ("variant", "pn", "limit"):
            if required not in entry:
                chk.fail(path + (required,), "required key missing")
        variant = chk.string(path + ("variant",), entry["variant"])
        if variant not in VARIANTS:
            chk.fail(path + ("variant",), f"unknown variant {variant!r}")
        pn = chk.integer(path + ("pn",), entry["pn"], minimum=1)
        limit = chk.integer(path + ("limit",), entry["limit"], minimum=1)
        k = chk.integer(path + ("k",), entry["k"], minimum=1) if "k" in entry else None
        cells.append(Cell(variant=variant, pn=pn, limit=limit, k_clusters=k))
    return tuple(cells)


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def format_trace(trace: ConvergenceTrace) -> str:
    lines = [TRACE_HEADER]
    for row in trace:
        lines.append(
            f"{row.iteration},{row.best_objective!r},{row.evaluations},{row.elapsed_seconds!r}"
        )
    return "\n".join(lines) + "\n"


def write_trace(path: Path, trace: ConvergenceTrace) -> None:
    path.write_text(format_trace(trace))


def read_trace(path: Path) -> ConvergenceTrace:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: not a trace file")
    trace = ConvergenceTrace()
    for line in lines[1:]:
        iteration, best, evals, elapsed = line.split(",")
        trace.append(TraceRow(int(iteration), float(best), int(evals), float(elapsed)))
    return trace


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    cell: Cell
    cell_id: str
    seed: int
    status: str  # "ok" | "invalid" | "failed"
    trace_file: str | None = None
    error: str | None = None
    final_objective: float | None = None
    evaluations: int | None = None
    iterations: int | None = None
    resolved_k: int | None = None  # k the run actually used, defaults included

    def as_dict(self) -> dict:
        out: dict[str, Any] = {
            "cell": self.cell_id,
            "variant": self.cell.variant,
            "pn": self.cell.pn,
            "k_clusters": self.resolved_k if self.resolved_k is not None else self.cell.k_clusters,
            "limit": self.cell.limit,
            "seed": self.seed,
            "status": self.status,
            "trace": self.trace_file,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.status == "ok":
            out["final_objective"] = self.final_objective
            out["evaluations"] = self.evaluations
            out["iterations"] = self.iterations
        return out


@dataclass
class ExperimentReport:
    output_dir: Path
    records: list[RunRecord]
    summary_path: Path
    manifest_path: Path

    @property
    def all_ok(self) -> bool:
        return all(r.status == "ok" for r in self.records)


def _cell_ids(cells: Sequence[Cell]) -> list[str]:
    return [f"c{i:02d}_{cell.slug}" for i, cell in enumerate(cells)]


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None) -> ExperimentReport:
    """Execute every (cell x seed) run and write traces, summary, manifest."""
    out = Path(output_dir) if output_dir is not None else None
    if out is None:
        if config.output is None:
            raise ConfigError("no output directory: set 'output' in the config or pass one")
        out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)

    records: list[RunRecord] = []
    for cell_id, cell in zip(_cell_ids(config.cells), config.cells):
        for seed in config.seeds:
            record = RunRecord(cell=cell, cell_id=cell_id, seed=seed, status="ok")
            records.append(record)
            try:
                colony_config = config.colony_config(cell, seed)
            except ValueError as exc:
                record.status = "invalid"
                record.error = str(exc)
                continue
            record.resolved_k = colony_config.k_clusters
            trace_name = f"{cell_id}_seed{seed}.csv"
            try:
                result = run(colony_config, config.space, config.objective)
            except RunAborted as exc:
                record.status = "failed"
                record.error = str(exc)
                if exc.partial is not None and len(exc.partial.trace):
                    write_trace(out / trace_name, exc.partial.trace)
                    record.trace_file = trace_name
                continue
            except (EvaluationError, ValueError) as exc:
                record.status = "failed"
                record.error = str(exc)
                continue
            write_trace(out / trace_name, result.trace)
            record.trace_file = trace_name
            final = result.trace.final
            record.final_objective = final.best_objective
            record.evaluations = final.evaluations
            record.iterations = final.iteration

    manifest = {
        "format": "abcopt-experiment-v1",
        "abcopt_version": __version__,
        "protocol_version": PROTOCOL_VERSION,
        "config": config.as_dict(),
        "runs": [r.as_dict() for r in records],
    }
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    summary_path = write_summary(out)
    return ExperimentReport(out, records, summary_path, manifest_path)


# ---------------------------------------------------------------------------
# Summaries (always recomputed from files on disk)
# ---------------------------------------------------------------------------


@dataclass
class CellSummary:
    cell_id: str
    variant: str
    pn: int
    k_clusters: int | None
    limit: int
    runs: int
    completed: int
    failed: int
    mean_final_objective: float | None
    min_final_objective: float | None
    max_final_objective: float | None
    mean_evaluations: float | None
    mean_elapsed_seconds: float | None


def summarize(output_dir: str | Path) -> list[CellSummary]:
    """Aggregate per-cell statistics from the traces in an output directory."""
    out = Path(output_dir)
    manifest_path = out / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path}: run the experiment first")
    manifest = json.loads(manifest_path.read_text())
    by_cell: dict[str, list[dict]] = {}
    order: list[str] = []
    for entry in manifest["runs"]:
        if entry["cell"] not in by_cell:
            order.append(entry["cell"])
        by_cell.setdefault(entry["cell"], []).append(entry)

    summaries = []
    for cell_id in order:
        entries = by_cell[cell_id]
        finals: list[float] = []
        evals: list[float] = []
        elapsed: list[float] = []
        completed = 0
        for entry in entries:
            if entry["status"] != "ok" or not entry.get("trace"):
                continue
            trace = read_trace(out / entry["trace"])
            completed += 1
            finals.append(trace.final.best_objective)
            evals.append(float(trace.final.evaluations))
            elapsed.append(trace.final.elapsed_seconds)
        first = entries[0]
        summaries.append(
            CellSummary(
                cell_id=cell_id,
                variant=first["variant"],
                pn=first["pn"],
                k_clusters=first["k_clusters"],
                limit=first["limit"],
                runs=len(entries),
                completed=completed,
                failed=len(entries) - completed,
                mean_final_objective=statistics.fmean(finals) if finals else None,
                min_final_objective=min(finals) if finals else None,
                max_final_objective=max(finals) if finals else None,
                mean_evaluations=statistics.fmean(evals) if evals else None,
                mean_elapsed_seconds=statistics.fmean(elapsed) if elapsed else None,
            )
        )
    return summaries


def format_summary(summaries: Sequence[CellSummary]) -> str:
    def fmt(value) -> str:
        return "" if value is None else repr(value)

    lines = [SUMMARY_HEADER]
    for s in summaries:
        lines.append(
            ",".join(
                [
                    s.cell_id,
                    s.variant,
                    str(s.pn),
                    "" if s.k_clusters is None else str(s.k_clusters),
                    str(s.limit),
                    str(s.runs),
                    str(s.completed),
                    str(s.failed),
                    fmt(s.mean_final_objective),
                    fmt(s.min_final_objective),
                    fmt(s.max_final_objective),
                    fmt(s.mean_evaluations),
                    fmt(s.mean_elapsed_seconds),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_summary(output_dir: str | Path) -> Path:
    out = Path(output_dir)
    path = out / SUMMARY_NAME
    path.write_text(format_summary(summarize(out)))
    return path

"""The bee-colony engine: employed, onlooker, and scout phases.

Three variants share one loop:

- abc:     random init of PN sources, roulette onlooker probabilities
           (0.9 * fit / max(fit) + 0.1), random-restart scouts.
- hyp-abc: random init of PN sources, min-max onlooker probabilities,
           random-restart scouts.
- optabc:  k-means-seeded init (PN samples reduced to k_clusters working
           sources), min-max probabilities, and scouts that evaluate both
           a random candidate and the abandoned source's opposite point,
           keeping whichever scores lower.

Each run consumes three independent random streams spawned from the
seed: one for initial sampling, one for clustering, one for the main
loop. The loop stream is read only by the coordinator and all candidates
for a phase are generated before any of them is evaluated, so evaluation
order (including parallel dispatch) cannot change the search path. A
consequence used by the tests: optabc with k_clusters == PN and scout
opposition turned off walks exactly the same path as hyp-abc.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .kmeans import seed_population
from .objective import (
    BuiltinEvaluator,
    EvaluationError,
    EvaluationLedger,
    ExternalEvaluator,
    ObjectiveSpec,
    make_evaluator,
)
from .space import FoodSource, ParamSpec, Position, SearchSpace, Value

VARIANTS = ("abc", "hyp-abc", "optabc")


@dataclass(frozen=True)
class ColonyConfig:
    """Run settings for one colony.

    k_clusters applies to optabc only (default PN // 10, at least 2) and
    sets the working population size; the other variants keep all PN
    sources. At least one stop condition (budget, max_iterations,
    target_objective) must be set. scout_opposition may be set explicitly
    only for optabc, where False reduces its scout phase to the baseline
    single random restart.
    """

    variant: str
    pn: int
    limit: int
    seed: int = 0
    k_clusters: int | None = None
    budget: int | None = None
    max_iterations: int | None = None
    target_objective: float | None = None
    scout_opposition: bool | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; known: {', '.join(VARIANTS)}")
        if self.pn < 2:
            raise ValueError("pn must be at least 2 (neighbor moves need a partner)")
        if self.limit < 1:
            raise ValueError("limit must be at least 1")
        if self.variant == "optabc":
            k = self.k_clusters if self.k_clusters is not None else max(2, self.pn // 10)
            if k < 2:
                raise ValueError("k_clusters must be at least 2 (neighbor moves need a partner)")
            if k > self.pn:
                raise ValueError(f"k_clusters ({k}) cannot exceed pn ({self.pn})")
            object.__setattr__(self, "k_clusters", k)
        elif self.k_clusters is not None:
            raise ValueError(f"k_clusters only applies to optabc, not {self.variant}")
        if self.scout_opposition is None:
            object.__setattr__(self, "scout_opposition", self.variant == "optabc")
        elif self.variant != "optabc":
            raise ValueError(f"scout_opposition is fixed for {self.variant}")
        if self.budget is None and self.max_iterations is None and self.target_objective is None:
            raise ValueError("set at least one of budget, max_iterations, target_objective")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def working_size(self) -> int:
        """Number of sources the main loop maintains."""
        return self.k_clusters if self.variant == "optabc" else self.pn

    @property
    def scout_cost(self) -> int:
        """Objective calls per scout replacement."""
        return 2 if self.scout_opposition else 1


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_objective: float
    evaluations: int
    elapsed_seconds: float


@dataclass
class ConvergenceTrace:
    """Per-iteration best-so-far series; row 0 is the initial population."""

    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows:
            last = self.rows[-1]
            if row.iteration <= last.iteration:
                raise ValueError("iteration must be strictly increasing")
            if row.best_objective > last.best_objective:
                raise ValueError("best objective must be non-increasing")
            if row.evaluations < last.evaluations:
                raise ValueError("evaluation count must be non-decreasing")
        self.rows.append(row)

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


@dataclass(frozen=True)
class IterationStats:
    """Exact per-phase accounting for one main-loop iteration."""

    iteration: int
    employed_evaluations: int
    onlooker_selections: int
    onlooker_evaluations: int
    scout_events: int
    scout_evaluations: int


@dataclass
class RunResult:
    best: FoodSource
    trace: ConvergenceTrace
    ledger: EvaluationLedger
    stats: list[IterationStats]


class RunAborted(RuntimeError):
    """An evaluation failed mid-run; partial results are attached."""

    def __init__(self, cause: EvaluationError, partial: RunResult | None):
        super().__init__(str(cause))
        self.cause = cause
        self.partial = partial


def selection_probabilities(fitnesses: Sequence[float], variant: str) -> np.ndarray:
    """Per-source onlooker selection probabilities.

    abc uses the roulette form 0.9 * fit / max(fit) + 0.1, in (0.1, 1.0].
    hyp-abc and optabc min-max normalize to [0, 1], pinning the worst
    source to 0 and the best to 1; when all fitnesses are equal, every
    probability is 1 so no source is starved.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    fits = np.asarray(fitnesses, dtype=float)
    if fits.size == 0:
        raise ValueError("need at least one fitness value")
    if variant == "abc":
        # ratio first, so the best source lands on exactly 0.9 + 0.1 = 1.0
        return 0.9 * (fits / fits.max()) + 0.1
    lo, hi = fits.min(), fits.max()
    if hi == lo:
        return np.ones_like(fits)
    return (fits - lo) / (hi - lo)


def neighbor_value(spec: ParamSpec, current: Value, partner: Value, phi: float) -> Value:
    """Numeric one-dimension move: current + phi * (current - partner), repaired."""
    if spec.kind == "categorical":
        raise ValueError("categorical dimensions have no arithmetic neighbor move")
    return spec.repair_raw(current + phi * (current - partner))


class Colony:
    """One configured run over a search space and objective."""

    def __init__(
        self,
        config: ColonyConfig,
        space: SearchSpace,
        evaluator: BuiltinEvaluator | ExternalEvaluator,
        ledger: EvaluationLedger | None = None,
    ):
        self.config = config
        self.space = space
        self.evaluator = evaluator
        self.ledger = ledger if ledger is not None else EvaluationLedger()
        init_ss, kmeans_ss, loop_ss = np.random.SeedSequence(config.seed).spawn(3)
        self._rng_init = np.random.default_rng(init_ss)
        self._rng_kmeans = np.random.default_rng(kmeans_ss)
        self._rng = np.random.default_rng(loop_ss)
        self.sources: list[FoodSource] = []
        self.best: FoodSource | None = None
        self.iteration = 0
        self.trace = ConvergenceTrace()
        self.stats: list[IterationStats] = []
        self._start = time.perf_counter()

    # -- evaluation plumbing -------------------------------------------------

    def _remaining_budget(self) -> float:
        if self.config.budget is None:
            return float("inf")
        return self.config.budget - self.ledger.count

    def _evaluate(self, positions: list[Position]) -> list[float]:
        """Evaluate at most the remaining budget's worth of positions."""
        remaining = self._remaining_budget()
        if remaining < len(positions):
            positions = positions[: int(remaining)]
        if not positions:
            return []
        values = self.evaluator.evaluate_many(positions, self.ledger, self.iteration)
        for position, value in zip(positions, values):
            if self.best is None or value < self.best.objective:
                self.best = FoodSource(position, objective=value)
        return values

    def _greedy(self, i: int, candidate: Position, value: float) -> None:
        incumbent = self.sources[i]
        if value < incumbent.objective:
            self.sources[i] = FoodSource(candidate, objective=value)
        else:
            # ties keep the incumbent so plateaus still exhaust the limit
            self.sources[i] = replace(incumbent, trials=incumbent.trials + 1)

    def _record_trace(self) -> None:
        self.trace.append(
            TraceRow(
                iteration=self.iteration,
                best_objective=self.best.objective,
                evaluations=self.ledger.count,
                elapsed_seconds=time.perf_counter() - self._start,
            )
        )

    # -- phases ----------------------------------------------------------------

    def initialize(self) -> None:
        """Build and evaluate the starting population (iteration 0)."""
        cfg = self.config
        if cfg.variant == "optabc":
            positions = seed_population(
                self.space, cfg.pn, cfg.k_clusters, self._rng_init, cluster_rng=self._rng_kmeans
            )
        else:
            positions = [self.space.sample_uniform(self._rng_init) for _ in range(cfg.pn)]
        if cfg.budget is not None and cfg.budget < len(positions):
            raise ValueError(
                f"budget ({cfg.budget}) cannot cover the initial population "
                f"({len(positions)} evaluations)"
            )
        values = self._evaluate(positions)
        self.sources = [FoodSource(p, objective=v) for p, v in zip(positions, values)]
        self._record_trace()

    def neighbor_move(self, i: int) -> Position:
        """Candidate differing from source i in one uniformly chosen dimension.

        Numeric dimensions move by phi ~ U(-1, 1) times the gap to a random
        partner source; categorical dimensions keep their value or adopt the
        partner's with equal probability.
        """
        rng = self._rng
        j = int(rng.integers(self.space.dimension))
        draw = int(rng.integers(len(self.sources) - 1))
        partner = draw if draw < i else draw + 1
        xi = self.sources[i].position
        xk = self.sources[partner].position
        spec = self.space.params[j]
        if spec.kind == "categorical":
            value = xi[j] if rng.random() < 0.5 else xk[j]
        else:
            value = neighbor_value(spec, xi[j], xk[j], float(rng.uniform(-1.0, 1.0)))
        candidate = list(xi)
        candidate[j] = value
        return tuple(candidate)

    def employed_phase(self) -> int:
        """One neighbor candidate per source, greedily selected."""
        candidates = [self.neighbor_move(i) for i in range(len(self.sources))]
        values = self._evaluate(candidates)
        for i, value in enumerate(values):
            self._greedy(i, candidates[i], value)
        return len(values)

    def onlooker_phase(self) -> tuple[int, int]:
        """Probabilistic re-exploitation; returns (selected, evaluated)."""
        probs = selection_probabilities(
            [s.fitness for s in self.sources], self.config.variant
        )
        chosen: list[int] = []
        candidates: list[Position] = []
        for i, p in enumerate(probs):
            if self._rng.random() < p:
                chosen.append(i)
                candidates.append(self.neighbor_move(i))
        values = self._evaluate(candidates)
        for i, candidate, value in zip(chosen, candidates, values):
            self._greedy(i, candidate, value)
        return len(chosen), len(values)

    def scout_phase(self) -> tuple[int, int]:
        """Replace every exhausted source; returns (events, evaluated).

        Sources are scanned in index order and every one at or over the
        limit is replaced this phase. The replacement is installed without
        comparing against the abandoned source: scouting is exploration,
        not greedy selection. A replacement event is atomic with respect
        to the budget; if the remaining budget cannot cover it, the phase
        stops early and the source keeps its trial count.
        """
        cfg = self.config
        events = evaluations = 0
        for i, source in enumerate(self.sources):
            if source.trials < cfg.limit:
                continue
            if self._remaining_budget() < cfg.scout_cost:
                break
            random_pos = self.space.sample_uniform(self._rng)
            if cfg.scout_opposition:
                opposite_pos = self.space.oppose(source)
                values = self._evaluate([random_pos, opposite_pos])
                evaluations += 2
                if values[0] <= values[1]:
                    position, value = random_pos, values[0]
                else:
                    position, value = opposite_pos, values[1]
            else:
                value = self._evaluate([random_pos])[0]
                evaluations += 1
                position = random_pos
            self.sources[i] = FoodSource(position, objective=value)
            events += 1
        return events, evaluations

    # -- main loop ---------------------------------------------------------------

    def _stopped(self) -> bool:
        cfg = self.config
        if self._remaining_budget() <= 0:
            return True
        if cfg.max_iterations is not None and self.iteration >= cfg.max_iterations:
            return True
        if cfg.target_objective is not None and self.best.objective <= cfg.target_objective:
            return True
        return False

    def run(self) -> RunResult:
        self.initialize()
        while not self._stopped():
            self.iteration += 1
            employed = self.employed_phase()
            selected = onlooker_evals = 0
            scout_events = scout_evals = 0
            if self._remaining_budget() > 0:
                selected, onlooker_evals = self.onlooker_phase()
            if self._remaining_budget() > 0:
                scout_events, scout_evals = self.scout_phase()
            self.stats.append(
                IterationStats(
                    iteration=self.iteration,
                    employed_evaluations=employed,
                    onlooker_selections=selected,
                    onlooker_evaluations=onlooker_evals,
                    scout_events=scout_events,
                    scout_evaluations=scout_evals,
                )
            )
            self._record_trace()
        return RunResult(self.best, self.trace, self.ledger, self.stats)

    def _partial_result(self) -> RunResult | None:
        if self.best is None:
            return None
        return RunResult(self.best, self.trace, self.ledger, self.stats)


def run(config: ColonyConfig, space: SearchSpace, objective: ObjectiveSpec) -> RunResult:
    """Run one colony to completion.

    Evaluation failures raise RunAborted with whatever trace and ledger
    had accumulated; configuration problems raise ValueError before any
    objective call.
    """
    with make_evaluator(objective, space) as evaluator:
        colony = Colony(config, space, evaluator)
        try:
            return colony.run()
        except EvaluationError as exc:
            raise RunAborted(exc, colony._partial_result()) from exc

"""Acceptance suite: one test per criterion, strictest tolerances pinned.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Criteria 1-7 need only this package; the external-evaluator
round trip is exercised in the evaluator's own test suite.
"""

import itertools
import time

import numpy as np
import pytest

from abcopt import (
    ColonyConfig,
    EvaluationLedger,
    ObjectiveSpec,
    ParamSpec,
    SearchSpace,
    cluster,
    fitness,
    neighbor_value,
    register_benchmark,
    run,
    seed_population,
    selection_probabilities,
)
from abcopt.cli import main
from abcopt.harness import DEFAULT_SEEDS

TOL = 1e-12


def sphere_space(dim=5):
    return SearchSpace(
        [ParamSpec(f"x{i}", "continuous", lower=-5.12, upper=5.12) for i in range(dim)]
    )


def optabc_config(**kw):
    base = dict(variant="optabc", pn=100, k_clusters=10, limit=5, seed=101)
    base.update(kw)
    return ColonyConfig(**base)


# ---------------------------------------------------------------------------
# 1. budget accounting
# ---------------------------------------------------------------------------


def test_criterion_1_budget_accounting():
    started = time.perf_counter()
    space = sphere_space()
    spec = ObjectiveSpec.builtin("sphere")

    result = run(optabc_config(max_iterations=30), space, spec)
    expected = 10  # init evaluates the k_clusters representatives only
    assert result.trace.rows[0].evaluations == expected
    for stat, row in zip(result.stats, result.trace.rows[1:]):
        assert stat.employed_evaluations == 10
        assert stat.onlooker_evaluations == stat.onlooker_selections <= 10
        assert stat.scout_evaluations == 2 * stat.scout_events
        expected += 10 + stat.onlooker_selections + 2 * stat.scout_events
        assert row.evaluations == expected, f"iteration {stat.iteration}"
    assert result.ledger.count == expected
    assert sum(s.scout_events for s in result.stats) > 0, "no scout events exercised"

    abc = run(
        ColonyConfig(variant="abc", pn=100, limit=5, max_iterations=30, seed=101),
        space,
        spec,
    )
    expected = 100  # full population evaluated at init
    assert abc.trace.rows[0].evaluations == expected
    for stat, row in zip(abc.stats, abc.trace.rows[1:]):
        assert stat.employed_evaluations == 100
        assert stat.onlooker_evaluations == stat.onlooker_selections <= 100
        assert stat.scout_evaluations == 1 * stat.scout_events
        expected += 100 + stat.onlooker_selections + 1 * stat.scout_events
        assert row.evaluations == expected, f"iteration {stat.iteration}"
    assert abc.ledger.count == expected
    assert sum(s.scout_events for s in abc.stats) > 0

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    print(f"\n[criterion 1] PASS: per-iteration evaluation counts exact ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# 2. oracle equivalence on a small discrete instance
# ---------------------------------------------------------------------------

GRID_PENALTY = {"red": 1.25, "green": 2.5, "blue": 0.75, "amber": 0.25, "cyan": 3.0}


def grid_objective(position):
    a, b, c = position
    return float((a - 4) ** 2 + (b - 2) ** 2 + GRID_PENALTY[c])


def test_criterion_2_exhaustive_oracle_equivalence():
    started = time.perf_counter()
    space = SearchSpace(
        [
            ParamSpec("a", "integer", lower=1, upper=5),
            ParamSpec("b", "integer", lower=1, upper=5),
            ParamSpec("c", "categorical", categories=tuple(GRID_PENALTY)),
        ]
    )
    # independent oracle: enumerate all 125 configurations directly
    grid = list(itertools.product(range(1, 6), range(1, 6), GRID_PENALTY))
    assert len(grid) == 125
    oracle_best = min(grid, key=grid_objective)
    assert oracle_best == (4, 2, "amber")

    register_benchmark("acceptance_grid3", lambda options: grid_objective)
    spec = ObjectiveSpec.builtin("acceptance_grid3")
    hits = 0
    for seed in DEFAULT_SEEDS:
        config = ColonyConfig(
            variant="optabc", pn=25, k_clusters=5, limit=5, budget=400, seed=seed
        )
        result = run(config, space, spec)
        hits += result.best.position == oracle_best
    assert hits >= 9, f"found the oracle optimum in only {hits}/10 seeds"
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    print(f"[criterion 2] PASS: exact optimum found in {hits}/10 seeds ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# 3. convergence sanity
# ---------------------------------------------------------------------------


def test_criterion_3_convergence_on_sphere():
    started = time.perf_counter()
    space = sphere_space()
    spec = ObjectiveSpec.builtin("sphere")
    threshold = 1e-2
    optabc_hits = hyp_hits = 0
    for seed in DEFAULT_SEEDS:
        opt = run(
            ColonyConfig(
                variant="optabc", pn=30, k_clusters=10, limit=20, budget=5000, seed=seed
            ),
            space,
            spec,
        )
        hyp = run(
            ColonyConfig(variant="hyp-abc", pn=30, limit=20, budget=5000, seed=seed),
            space,
            spec,
        )
        optabc_hits += opt.best.objective <= threshold
        hyp_hits += hyp.best.objective <= threshold
    assert optabc_hits >= 9, f"optabc reached {threshold} in only {optabc_hits}/10 seeds"
    assert hyp_hits >= 9, f"hyp-abc reached {threshold} in only {hyp_hits}/10 seeds"
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    print(
        f"[criterion 3] PASS: best <= 1e-2 for optabc {optabc_hits}/10 "
        f"and hyp-abc {hyp_hits}/10 ({elapsed:.2f}s)"
    )


# ---------------------------------------------------------------------------
# 4. equation unit suite
# ---------------------------------------------------------------------------


def test_criterion_4_equation_units():
    # fitness transform
    assert abs(fitness(0.0) - 1.0) <= TOL
    assert abs(fitness(1.0) - 0.5) <= TOL
    assert abs(fitness(-0.5) - 1.5) <= TOL

    # min-max probabilities
    probs = selection_probabilities((2.0, 4.0, 6.0), "optabc")
    for got, want in zip(probs, (0.0, 0.5, 1.0)):
        assert abs(got - want) <= TOL

    # roulette probability of the best source
    roulette = selection_probabilities((0.25, 0.5, 2.0), "abc")
    assert abs(roulette[2] - 1.0) <= TOL

    # opposition involution and midpoint fixed point
    space = SearchSpace([ParamSpec("x", "continuous", lower=0.0, upper=10.0)])
    for x in (0.0, 1.7, 3.0, 5.0, 8.25, 10.0):
        twice = space.oppose(space.oppose((x,)))[0]
        assert abs(twice - x) <= TOL
    assert abs(space.oppose((5.0,))[0] - 5.0) <= TOL

    # zero-phi neighbor move is the identity
    spec = ParamSpec("x", "continuous", lower=0.0, upper=10.0)
    for x, partner in ((5.0, 3.0), (0.0, 10.0), (7.3, 7.3)):
        assert abs(neighbor_value(spec, x, partner, 0.0) - x) <= TOL
    print("[criterion 4] PASS: equation unit suite exact to 1e-12")


# ---------------------------------------------------------------------------
# 5. k-means suite
# ---------------------------------------------------------------------------


def test_criterion_5_kmeans_suite():
    gen = np.random.default_rng(515)
    for trial in range(100):
        n = int(gen.integers(4, 40))
        k = int(gen.integers(1, n + 1))
        width = int(gen.integers(1, 6))
        points = gen.uniform(size=(n, width))
        result = cluster(points, k, gen)
        history = result.wcss_history
        for prev, cur in zip(history, history[1:]):
            assert cur <= prev + 1e-9, f"wcss rose on instance {trial}"
        assert (result.centroids >= -1e-12).all()
        assert (result.centroids <= 1.0 + 1e-12).all()

    ledger = EvaluationLedger()
    seed_population(sphere_space(), 50, 10, np.random.default_rng(0))
    assert ledger.count == 0

    points = np.array([0.0, 0.1, 0.9, 1.0]).reshape(-1, 1)
    for seed in range(25):
        result = cluster(points, 2, np.random.default_rng(seed))
        got = sorted(float(c[0]) for c in result.centroids)
        assert got == pytest.approx([0.05, 0.95], abs=TOL)
    print("[criterion 5] PASS: wcss monotone, centroids boxed, seeding free, 4-point split exact")


# ---------------------------------------------------------------------------
# 6. determinism of bench runs
# ---------------------------------------------------------------------------


def bench_without_wallclock(capsys, seed):
    code = main(
        [
            "bench", "rastrigin",
            "--variant", "optabc",
            "--pn", "40",
            "--k", "8",
            "--limit", "5",
            "--budget", "600",
            "--seed", str(seed),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    return [",".join(line.split(",")[:3]) for line in out.splitlines()]


def test_criterion_6_bench_determinism(capsys):
    first = bench_without_wallclock(capsys, 424242)
    second = bench_without_wallclock(capsys, 424242)
    assert first == second
    assert len(first) > 2
    other = bench_without_wallclock(capsys, 424243)
    assert other != first  # the seed is actually consumed
    print("[criterion 6] PASS: repeated bench invocations byte-identical outside wall-clock")


# ---------------------------------------------------------------------------
# 7. reduction to the baseline
# ---------------------------------------------------------------------------


def test_criterion_7_reduction_to_hyp_abc():
    space = sphere_space()
    spec = ObjectiveSpec.builtin("sphere")
    for seed in (101, 211):
        baseline = run(
            ColonyConfig(variant="hyp-abc", pn=20, limit=5, budget=900, seed=seed),
            space,
            spec,
        )
        reduced = run(
            ColonyConfig(
                variant="optabc",
                pn=20,
                k_clusters=20,
                limit=5,
                budget=900,
                seed=seed,
                scout_opposition=False,
            ),
            space,
            spec,
        )
        assert len(reduced.trace) == len(baseline.trace)
        for ra, rb in zip(reduced.trace, baseline.trace):
            assert ra.iteration == rb.iteration
            assert ra.best_objective == rb.best_objective
            assert ra.evaluations == rb.evaluations
        assert [r.position for r in reduced.ledger.records] == [
            r.position for r in baseline.ledger.records
        ]
        assert [r.objective for r in reduced.ledger.records] == [
            r.objective for r in baseline.ledger.records
        ]
    print("[criterion 7] PASS: optabc with k = PN and no opposition replays hyp-abc exactly")

import itertools

import numpy as np
import pytest

from abcopt import EvaluationLedger, ParamSpec, SearchSpace, cluster, seed_population

from conftest import random_space


def brute_force_lloyd(points, init_pair):
    """Independent reference: plain Lloyd from a given pair of start points."""
    centroids = [points[init_pair[0]], points[init_pair[1]]]
    assign = None
    for _ in range(100):
        new_assign = [
            min(range(2), key=lambda c: (p - centroids[c]) ** 2) for p in points
        ]
        if new_assign == assign:
            break
        assign = new_assign
        for c in range(2):
            members = [p for p, a in zip(points, assign) if a == c]
            if members:
                centroids[c] = sum(members) / len(members)
    return sorted(centroids)


FOUR_POINTS = [0.0, 0.1, 0.9, 1.0]


def test_four_point_example_has_unique_fixed_point():
    # every distinct-pair initialization lands on the same split
    for pair in itertools.combinations(range(4), 2):
        assert brute_force_lloyd(FOUR_POINTS, pair) == pytest.approx([0.05, 0.95], abs=1e-12)


def test_four_point_example_clusters_to_expected_centroids():
    points = np.array(FOUR_POINTS).reshape(-1, 1)
    for seed in range(40):
        result = cluster(points, 2, np.random.default_rng(seed))
        got = sorted(float(c[0]) for c in result.centroids)
        assert got == pytest.approx([0.05, 0.95], abs=1e-12)


def test_k_equals_n_gives_singleton_clusters():
    gen = np.random.default_rng(2)
    points = gen.uniform(size=(6, 3))
    result = cluster(points, 6, gen)
    # identity assignment up to the (sorted, hence identity) init selection
    assert sorted(result.assignments.tolist()) == list(range(6))
    for c in range(6):
        member = points[result.assignments == c]
        assert member.shape[0] == 1
        np.testing.assert_array_equal(result.centroids[c], member[0])


def test_identical_points_trigger_duplicate_centroid_repair():
    points = np.tile([0.25, 0.5], (5, 1))
    result = cluster(points, 2, np.random.default_rng(0))
    assert result.centroids.shape == (2, 2)
    np.testing.assert_allclose(result.centroids, [[0.25, 0.5], [0.25, 0.5]])
    assert set(result.assignments.tolist()) == {0, 1}


def test_cluster_argument_validation():
    points = np.zeros((3, 2))
    gen = np.random.default_rng(0)
    with pytest.raises(ValueError, match="cannot exceed"):
        cluster(points, 4, gen)
    with pytest.raises(ValueError, match="at least 1"):
        cluster(points, 0, gen)


def test_wcss_monotone_over_fuzzed_instances():
    outer = np.random.default_rng(31)
    for trial in range(100):
        n = int(outer.integers(4, 40))
        width = int(outer.integers(1, 6))
        k = int(outer.integers(1, n + 1))
        points = outer.uniform(size=(n, width))
        result = cluster(points, k, outer)
        history = result.wcss_history
        assert history, "history must be recorded"
        for prev, cur in zip(history, history[1:]):
            assert cur <= prev + 1e-9, f"wcss rose: {prev} -> {cur}"


def test_centroids_stay_in_assigned_points_hull():
    outer = np.random.default_rng(37)
    for trial in range(50):
        n = int(outer.integers(5, 30))
        k = int(outer.integers(1, n + 1))
        points = outer.uniform(size=(n, 3))
        result = cluster(points, k, outer)
        for c in range(k):
            members = points[result.assignments == c]
            assert members.shape[0] > 0
            assert (result.centroids[c] >= members.min(axis=0) - 1e-12).all()
            assert (result.centroids[c] <= members.max(axis=0) + 1e-12).all()
            assert (result.centroids[c] >= -1e-12).all()
            assert (result.centroids[c] <= 1 + 1e-12).all()


def test_cluster_deterministic_per_seed():
    points = np.random.default_rng(41).uniform(size=(25, 4))
    a = cluster(points, 5, np.random.default_rng(99))
    b = cluster(points, 5, np.random.default_rng(99))
    np.testing.assert_array_equal(a.assignments, b.assignments)
    np.testing.assert_array_equal(a.centroids, b.centroids)
    assert a.wcss_history == b.wcss_history


# ---------------------------------------------------------------------------
# seed_population
# ---------------------------------------------------------------------------


@pytest.fixture
def box3():
    return SearchSpace(
        [ParamSpec(f"x{i}", "continuous", lower=-2.0, upper=2.0) for i in range(3)]
    )


def test_seed_population_k_equals_pn_returns_the_samples(box3):
    sampler = np.random.default_rng(5)
    expected = [box3.sample_uniform(sampler) for _ in range(5)]
    got = seed_population(
        box3, 5, 5, np.random.default_rng(5), cluster_rng=np.random.default_rng(6)
    )
    assert got == expected


def test_seed_population_shape_bounds_distinctness(box3):
    for seed in range(100):
        gen = np.random.default_rng(seed)
        positions = seed_population(box3, 100, 10, gen)
        assert len(positions) == 10
        for p in positions:
            box3.validate(p)
        assert len(set(positions)) == 10


def test_seed_population_integer_rounding():
    space = SearchSpace([ParamSpec("n", "integer", lower=1, upper=100)])
    # a centroid at 42.4 in original units rounds down to 42
    assert space.repair_embedded([(42.4 - 1.0) / 99.0]) == (42,)


def test_seed_population_makes_no_evaluations(box3):
    ledger = EvaluationLedger()
    before = ledger.count
    seed_population(box3, 30, 6, np.random.default_rng(0))
    assert ledger.count == before == 0


def test_seed_population_deterministic(box3):
    a = seed_population(box3, 40, 8, np.random.default_rng(77))
    b = seed_population(box3, 40, 8, np.random.default_rng(77))
    assert a == b


def test_seed_population_mixed_space_positions_valid(rng):
    outer = np.random.default_rng(43)
    for trial in range(30):
        space = random_space(outer)
        pn = int(outer.integers(4, 30))
        k = int(outer.integers(1, pn + 1))
        for p in seed_population(space, pn, k, outer):
            space.validate(p)

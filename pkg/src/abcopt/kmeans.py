"""Lloyd clustering over embedded positions.

Used to shrink a large random initial population down to its cluster
centroids before any objective call happens: sample widely, cluster in
the embedded unit box, keep one representative per cluster. Distances
are Euclidean on the embedded coordinates, so normalized numerics and
one-hot categoricals weigh comparably.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import Position, SearchSpace


@dataclass
class Clustering:
    """Result of one clustering run.

    centroids[c] is exactly the mean of the points with assignments == c;
    no cluster is empty. wcss_history records the within-cluster sum of
    squares after every assignment and every mean update, in order.
    """

    assignments: np.ndarray
    centroids: np.ndarray
    iterations_used: int
    wcss_history: list[float] = field(default_factory=list)


def _wcss(points: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    return float(((points - centroids[assignments]) ** 2).sum())


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid assignment; ties go to the lowest centroid index.

    Any cluster left empty is refilled: its centroid moves onto the point
    currently farthest from its own centroid, drawn from a cluster with at
    least two members so the donor cannot empty in turn. Reseeding to the
    far point keeps the spread that clustering is there to provide.
    """
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assignments = np.argmin(d2, axis=1)
    k = centroids.shape[0]
    while True:
        counts = np.bincount(assignments, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return assignments
        c = int(empties[0])
        own = ((points - centroids[assignments]) ** 2).sum(axis=1)
        donors = counts[assignments] >= 2
        own[~donors] = -1.0
        p = int(np.argmax(own))
        centroids[c] = points[p]
        assignments[p] = c


def cluster(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int = 100,
) -> Clustering:
    """Cluster equal-width vectors into k groups.

    Centroids start as k points picked without replacement from the input
    (kept in index order, so k == len(points) starts from the identity).
    Iteration stops when assignments stop changing or max_iters is hit;
    a final mean update makes the returned centroids exact cluster means.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array of equal-width vectors")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"k ({k}) cannot exceed the number of points ({n})")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")

    chosen = np.sort(rng.choice(n, size=k, replace=False))
    centroids = points[chosen].copy()
    history: list[float] = []

    assignments = _assign(points, centroids)
    history.append(_wcss(points, centroids, assignments))

    iterations_used = 0
    for iterations_used in range(1, max_iters + 1):
        centroids = np.stack([points[assignments == c].mean(axis=0) for c in range(k)])
        history.append(_wcss(points, centroids, assignments))
        new_assignments = _assign(points, centroids)
        history.append(_wcss(points, centroids, new_assignments))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

    # make the returned centroids exact means even when the loop stopped
    # right after an assignment step or an empty-cluster reseed
    centroids = np.stack([points[assignments == c].mean(axis=0) for c in range(k)])
    history.append(_wcss(points, centroids, assignments))
    return Clustering(assignments, centroids, iterations_used, history)


def seed_population(
    space: SearchSpace,
    pn: int,
    k: int,
    rng: np.random.Generator,
    cluster_rng: np.random.Generator | None = None,
    max_iters: int = 100,
) -> list[Position]:
    """Draw pn uniform positions, cluster them, return the k centroids.

    The centroids are mapped back through embedded repair, so every
    returned position is valid. No objective is evaluated here; callers
    decide what the representatives are worth. Sampling consumes rng;
    clustering consumes cluster_rng when given (rng otherwise), which
    keeps the sampled sequence independent of the clustering step.
    """
    if pn < 1:
        raise ValueError("pn must be at least 1")
    positions = [space.sample_uniform(rng) for _ in range(pn)]
    points = np.stack([space.embed(p) for p in positions])
    result = cluster(points, k, cluster_rng if cluster_rng is not None else rng, max_iters)
    # a centroid that coincides with a sampled point (always the case for
    # singleton clusters) maps back to that exact sample, skipping the
    # lossy unembed round trip
    by_coords = {row.tobytes(): pos for row, pos in zip(points, positions)}
    seeded = []
    for centroid in result.centroids:
        exact = by_coords.get(np.ascontiguousarray(centroid).tobytes())
        seeded.append(exact if exact is not None else space.repair_embedded(centroid))
    return seeded

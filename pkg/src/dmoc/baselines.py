"""Conventional clustering baseline: Lloyd k-means and the cluster-then-decide pipeline.

The pipeline clusters in data space, computes the per-centroid optimal
decision, and scores those decisions with the true utility on the true
samples. It is both the comparison baseline and a warm start for the engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ClusteringResult,
    DataSet,
    DmocError,
    MetricOps,
    MetricSpec,
    Partition,
    RunTrace,
    metric_ops,
)
from .engine import _objective


@dataclass(frozen=True)
class KmeansResult:
    """Centroids in data space plus the nearest-centroid assignment and its inertia."""

    centroids: np.ndarray
    assignment: Partition
    inertia: float
    inertia_trace: tuple = ()


def _sq_distances(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(N, M) squared Euclidean distances."""
    diff = values[:, None, :] - centers[None, :, :]
    return (diff**2).sum(axis=-1)


def _centroids(values: np.ndarray, assignment: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Cluster means; a cluster left empty after repair keeps its previous centroid."""
    out = previous.copy()
    for j in range(previous.shape[0]):
        members = np.nonzero(assignment == j)[0]
        if members.size:
            out[j] = values[members].mean(axis=0)
    return out


def kmeans_pp_init(values: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids by squared-distance sampling."""
    n = values.shape[0]
    picks = [int(rng.integers(n))]
    d2 = ((values - values[picks[0]]) ** 2).sum(axis=1)
    for _ in range(1, n_clusters):
        total = d2.sum()
        if total <= 0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=d2 / total))
        picks.append(pick)
        d2 = np.minimum(d2, ((values - values[pick]) ** 2).sum(axis=1))
    return values[picks].copy()


def _repair_empty_kmeans(values, centroids, assignment):
    """Re-seed empty clusters to the worst-represented points, then reassign once."""
    m = centroids.shape[0]
    counts = np.bincount(assignment, minlength=m)
    empties = np.nonzero(counts == 0)[0]
    if empties.size == 0:
        return centroids, assignment
    dist = _sq_distances(values, centroids)[np.arange(values.shape[0]), assignment]
    farthest_first = np.argsort(-dist, kind="stable")
    centroids = centroids.copy()
    for k, j in enumerate(empties):
        centroids[j] = values[farthest_first[k]]
    return centroids, np.argmin(_sq_distances(values, centroids), axis=1)


def kmeans(
    data: DataSet,
    n_clusters: int,
    seed: int,
    max_iters: int = 100,
    init=None,
) -> KmeansResult:
    """Lloyd iterations from a k-means++ (or supplied) start until the assignment fixes.

    Deterministic for a given seed. Inertia is recorded after every
    assignment step and is nonincreasing.
    """
    if n_clusters > data.n:
        raise DmocError(f"n_clusters = {n_clusters} exceeds N = {data.n}")
    values = data.values
    rng = np.random.default_rng(seed)
    centroids = (
        kmeans_pp_init(values, n_clusters, rng)
        if init is None
        else np.array(np.atleast_2d(np.asarray(init, dtype=float)))
    )
    if centroids.shape != (n_clusters, data.dim):
        raise DmocError(f"init centroids have shape {centroids.shape}")

    assignment = None
    trace = []
    for _ in range(max_iters):
        dist = _sq_distances(values, centroids)
        new_assignment = np.argmin(dist, axis=1)
        centroids, new_assignment = _repair_empty_kmeans(values, centroids, new_assignment)
        trace.append(
            float(_sq_distances(values, centroids)[np.arange(data.n), new_assignment].sum())
        )
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        centroids = _centroids(values, assignment, centroids)

    inertia = float(_sq_distances(values, centroids)[np.arange(data.n), assignment].sum())
    return KmeansResult(
        centroids=centroids,
        assignment=Partition(assignment, n_clusters),
        inertia=inertia,
        inertia_trace=tuple(trace),
    )


def kmc_pipeline(
    spec: MetricSpec,
    data: DataSet,
    n_clusters: int,
    seed: int,
    solver=None,
    max_iters: int = 100,
) -> ClusteringResult:
    """Conventional pipeline: k-means partition + per-centroid optimal decisions.

    The centroid of each cluster is treated as if it were the observed sample
    and the decision problem is solved for it; the reported objective uses the
    true utility of those decisions on the actual samples.
    """
    km = kmeans(data, n_clusters, seed=seed, max_iters=max_iters)
    ops = metric_ops(spec, solver=solver)
    reps = np.stack([ops.perfect_decision(c) for c in km.centroids])
    assignment = km.assignment.assignment
    objective = _objective(ops, data.values, reps, assignment)
    return ClusteringResult(
        partition=km.assignment,
        representatives=reps,
        objective=objective,
        trace=RunTrace(objectives=(objective,), iterations_run=1, converged=True),
    )


def squared_distance_ops(dim: int) -> MetricOps:
    """Metric bundle for f(x; g) = -||x - g||^2 (the conventional-clustering embedding).

    Under this metric the engine's assignment step is nearest-neighbour and its
    representative step is the cluster centroid, i.e. one Lloyd iteration.
    """

    def cluster_utility(x, values, members) -> float:
        rows = np.atleast_2d(np.asarray(values, dtype=float))[np.asarray(members, dtype=int)]
        return float(-((rows - np.asarray(x, dtype=float)) ** 2).sum())

    return MetricOps(
        decision_dim=dim,
        data_dim=dim,
        evaluate=lambda x, g: float(
            -((np.asarray(x, dtype=float) - np.asarray(g, dtype=float)) ** 2).sum()
        ),
        assign=lambda values, reps: np.argmin(
            _sq_distances(np.atleast_2d(values), np.atleast_2d(reps)), axis=1
        ),
        cluster_utility=cluster_utility,
        best_representative=lambda values, members, warm_start=None: np.atleast_2d(
            np.asarray(values, dtype=float)
        )[np.asarray(members, dtype=int)].mean(axis=0),
        perfect_decision=lambda g: np.array(np.asarray(g, dtype=float)),
        feasible=lambda x: np.asarray(x).size == dim
        and bool(np.all(np.isfinite(np.asarray(x, dtype=float)))),
    )

"""Oracles and evaluation metrics: perfect baseline, optimality loss, peak statistics.

The perfect baseline solves the decision problem per sample (the infinite-
cluster limit) and anchors the relative optimality loss of any clustering
scheme. Peak-occurrence entropy summarizes how hard a dataset is to cluster
for peak-power purposes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    ClusteringResult,
    DataSet,
    DimensionError,
    DmocError,
    MetricSpec,
    metric_ops,
)
from .engine import EngineConfig, run_dmoc
from .baselines import kmc_pipeline

SCHEMES = ("dmoc", "dmoc-approx", "kmc")


def perfect_decisions(spec: MetricSpec, data: DataSet, solver=None) -> np.ndarray:
    """Per-sample optimal decisions x*(g_n), stacked as an (N, T) array."""
    ops = metric_ops(spec, solver=solver)
    return np.stack([ops.perfect_decision(data.values[n]) for n in range(data.n)])


def perfect_objective(spec: MetricSpec, data: DataSet, solver=None) -> float:
    """Total utility when every sample gets its own optimal decision."""
    ops = metric_ops(spec, solver=solver)
    total = 0.0
    for n in range(data.n):
        g = data.values[n]
        total += ops.evaluate(ops.perfect_decision(g), g)
    return total


def relative_loss(f_perfect: float, f_c: float) -> float:
    """Optimality loss of a scheme against the perfect baseline, in percent.

    Reported as |F_perfect - F_c| / |F_perfect| * 100 so that losses are
    positive for both sign conventions of the utility.
    """
    if f_perfect == 0:
        raise DmocError("relative loss is undefined for a zero perfect objective")
    return abs(f_perfect - f_c) / abs(f_perfect) * 100.0


@dataclass(frozen=True)
class PeakHistogram:
    """Empirical distribution of the per-sample peak time slot."""

    p_hat: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_hat, dtype=float)
        if abs(p.sum() - 1.0) > 1e-12 or np.any(p < 0):
            raise DmocError("p_hat must be a probability vector")


def peak_histogram(data: DataSet) -> PeakHistogram:
    """Histogram of argmax slots, one count per sample (ties to the lowest slot)."""
    peaks = np.argmax(data.values, axis=1)
    counts = np.bincount(peaks, minlength=data.dim)
    return PeakHistogram(p_hat=counts / data.n, counts=counts)


def peak_entropy(hist: PeakHistogram) -> float:
    """Shannon entropy of the peak-slot distribution in bits (0*log 0 = 0)."""
    p = hist.p_hat[hist.p_hat > 0]
    return float(-(p * np.log2(p)).sum())


def realized_peaks(spec: MetricSpec, result: ClusteringResult, data: DataSet) -> np.ndarray:
    """Weighted peak of the total load per sample: max_t w_t (x_{m(n)}(t) + g_n(t))."""
    if spec.kind != "pcs":
        raise DmocError("realized peaks are defined for the scheduling metric")
    if result.partition.n != data.n:
        raise DimensionError("result and dataset disagree on N")
    x = result.representatives[result.partition.assignment]
    return (spec.pcs.weights * (x + data.values)).max(axis=1)


def _run_scheme(
    scheme: str,
    spec: MetricSpec,
    data: DataSet,
    m: int,
    seed: int,
    solver=None,
    max_iters: int = 10,
    tol: float = 1e-3,
    init="kmeans",
) -> ClusteringResult:
    if scheme not in SCHEMES:
        raise DmocError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "kmc":
        return kmc_pipeline(spec, data, m, seed=seed, solver=solver)
    config = EngineConfig(n_clusters=m, max_iters=max_iters, tol=tol, seed=seed, init=init)
    return run_dmoc(
        spec, data, config, solver=solver, approx_assignment=(scheme == "dmoc-approx")
    )


@dataclass(frozen=True)
class LossCurve:
    """Relative optimality loss against the cluster count for one scheme."""

    scheme: str
    points: tuple  # (m, rho_percent)
    objectives: tuple
    f_perfect: float


def loss_curve(
    spec: MetricSpec,
    data: DataSet,
    m_values,
    schemes=SCHEMES,
    seed: int = 0,
    solver=None,
    max_iters: int = 10,
    tol: float = 1e-3,
    init="kmeans",
    jobs: int = 1,
) -> list[LossCurve]:
    """Loss-vs-M sweep over clustering schemes.

    Run (scheme, M) uses seed ``seed + M`` so the k-means start shared by the
    kmc baseline and a kmeans-initialized run is identical at each M. With
    ``jobs > 1`` the independent runs execute in a thread pool; results are
    keyed, so the output is identical for any job count.
    """
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise DmocError(f"unknown scheme {scheme!r}")
    m_values = [int(m) for m in m_values]
    f_perfect = perfect_objective(spec, data, solver=solver)

    def one(task):
        scheme, m = task
        res = _run_scheme(
            scheme, spec, data, m, seed=seed + m, solver=solver,
            max_iters=max_iters, tol=tol, init=init,
        )
        return res.objective

    tasks = [(scheme, m) for scheme in schemes for m in m_values]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip(tasks, pool.map(one, tasks)))
    else:
        results = {task: one(task) for task in tasks}

    curves = []
    for scheme in schemes:
        objectives = tuple(results[(scheme, m)] for m in m_values)
        points = tuple((m, relative_loss(f_perfect, f)) for m, f in zip(m_values, objectives))
        curves.append(
            LossCurve(scheme=scheme, points=points, objectives=objectives, f_perfect=f_perfect)
        )
    return curves


def nested_dmoc_sweep(
    spec: MetricSpec,
    data: DataSet,
    m_max: int,
    seed: int = 0,
    solver=None,
    max_iters: int = 10,
    tol: float = 1e-3,
) -> list[ClusteringResult]:
    """Nested runs for M = 1..m_max: each run starts from the previous
    representatives plus one split seeded at the currently worst-served sample.

    Under this protocol the objective is nondecreasing in M.
    """
    ops = metric_ops(spec, solver=solver)
    results = []
    init = "random"
    for m in range(1, m_max + 1):
        config = EngineConfig(n_clusters=m, max_iters=max_iters, tol=tol, seed=seed, init=init)
        res = run_dmoc(spec, data, config, solver=solver)
        results.append(res)
        per_sample = np.array(
            [
                ops.evaluate(res.representatives[res.partition.assignment[n]], data.values[n])
                for n in range(data.n)
            ]
        )
        worst = int(np.argsort(per_sample, kind="stable")[0])
        init = np.vstack([res.representatives, ops.perfect_decision(data.values[worst])])
    return results


def worst_peak_by_m(
    spec: MetricSpec,
    data: DataSet,
    scheme: str = "dmoc",
    m_max: int = 20,
    seed: int = 0,
    solver=None,
    max_iters: int = 10,
    tol: float = 1e-3,
) -> np.ndarray:
    """Worst realized peak over all samples for each M in 1..m_max (seed + M schedule)."""
    if spec.kind != "pcs" or spec.pcs.p != np.inf:
        raise DmocError("the peak-target search requires a pcs spec with p = inf")
    peaks = np.empty(m_max)
    for m in range(1, m_max + 1):
        res = _run_scheme(
            scheme, spec, data, m, seed=seed + m, solver=solver,
            max_iters=max_iters, tol=tol,
        )
        peaks[m - 1] = realized_peaks(spec, res, data).max()
    return peaks


def clusters_for_target(
    spec: MetricSpec,
    data: DataSet,
    target_peak_kw: float,
    scheme: str = "dmoc",
    m_max: int = 20,
    seed: int = 0,
    solver=None,
    max_iters: int = 10,
    tol: float = 1e-3,
) -> int | None:
    """Smallest M whose worst realized peak is at most the target; None if none."""
    if spec.kind != "pcs" or spec.pcs.p != np.inf:
        raise DmocError("the peak-target search requires a pcs spec with p = inf")
    for m in range(1, m_max + 1):
        res = _run_scheme(
            scheme, spec, data, m, seed=seed + m, solver=solver,
            max_iters=max_iters, tol=tol,
        )
        if realized_peaks(spec, res, data).max() <= target_peak_kw:
            return m
    return None

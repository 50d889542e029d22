"""Alternating optimization between cluster assignment and representative decisions.

Each iteration assigns every sample to the representative with the highest
utility (ties to the lowest index), then re-solves each cluster's best
representative given its members. The per-iteration objective can only
increase or stay constant; the run stops when the improvement drops to the
tolerance or the iteration cap is reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ClusteringResult,
    DataSet,
    DmocError,
    EmptyClusterError,
    InfeasibleDecisionError,
    MetricOps,
    MetricSpec,
    Partition,
    RunTrace,
    SolverError,
    metric_ops,
)


@dataclass(frozen=True)
class EngineConfig:
    """Run parameters: cluster count M, iteration cap Q, stop tolerance, seed, init.

    ``init`` is "random" (seeded draw of M distinct samples whose per-sample
    optimal decisions become the starting representatives), "kmeans" (start
    from the conventional-pipeline decisions), or an explicit (M, T) array of
    feasible starting decisions.
    """

    n_clusters: int
    max_iters: int = 10
    tol: float = 1e-3
    seed: int = 0
    init: object = "random"

    def __post_init__(self):
        if self.n_clusters < 1:
            raise DmocError("n_clusters must be >= 1")
        if self.max_iters < 1:
            raise DmocError("max_iters must be >= 1")
        if self.tol < 0:
            raise DmocError("tol must be >= 0")
        if isinstance(self.init, str):
            if self.init not in ("random", "kmeans"):
                raise DmocError(f"unknown init {self.init!r}")
        else:
            object.__setattr__(
                self, "init", np.array(np.atleast_2d(np.asarray(self.init, dtype=float)))
            )


def _validated_reps(ops: MetricOps, reps) -> np.ndarray:
    reps = np.atleast_2d(np.asarray(reps, dtype=float))
    if reps.shape[0] < 1:
        raise DmocError("at least one representative is required")
    for m, r in enumerate(reps):
        if not ops.feasible(r):
            raise InfeasibleDecisionError(f"representative {m} is infeasible: {r}")
    return reps


def _objective(ops: MetricOps, values: np.ndarray, reps: np.ndarray, assignment: np.ndarray) -> float:
    """Cluster-wise utility sum in fixed cluster order (empty clusters add 0)."""
    total = 0.0
    for m in range(reps.shape[0]):
        members = np.nonzero(assignment == m)[0]
        if members.size:
            total += ops.cluster_utility(reps[m], values, members)
    return total


def _repair_empty(ops: MetricOps, values: np.ndarray, reps: np.ndarray, assignment: np.ndarray):
    """Re-seed empty clusters from the worst-served samples, then reassign once."""
    counts = np.bincount(assignment, minlength=reps.shape[0])
    empties = np.nonzero(counts == 0)[0]
    if empties.size == 0:
        return reps, assignment
    per_sample = np.array(
        [ops.evaluate(reps[assignment[n]], values[n]) for n in range(values.shape[0])]
    )
    worst_first = np.argsort(per_sample, kind="stable")
    reps = reps.copy()
    for k, m in enumerate(empties):
        reps[m] = ops.perfect_decision(values[worst_first[k]])
    return reps, ops.assign(values, reps)


def assign_clusters(
    spec: MetricSpec,
    data: DataSet,
    reps,
    solver=None,
    approx_assignment: bool = False,
) -> Partition:
    """Assign every sample to its best representative (ties to the lowest index)."""
    ops = metric_ops(spec, solver=solver, approx_assignment=approx_assignment)
    reps = _validated_reps(ops, reps)
    return Partition(ops.assign(data.values, reps), reps.shape[0])


def update_representatives(
    spec: MetricSpec,
    data: DataSet,
    partition: Partition,
    solver=None,
    warm_starts=None,
) -> np.ndarray:
    """Best representative decision for every cluster of the partition.

    Raises EmptyClusterError if a cluster has no members and SolverError
    (carrying the cluster index) on solver failure.
    """
    ops = metric_ops(spec, solver=solver)
    reps = np.empty((partition.n_clusters, ops.decision_dim))
    for m in range(partition.n_clusters):
        members = partition.members(m)
        if members.size == 0:
            raise EmptyClusterError(f"cluster {m} has no members", cluster=m)
        warm = None if warm_starts is None else np.asarray(warm_starts)[m]
        try:
            reps[m] = ops.best_representative(data.values, members, warm_start=warm)
        except SolverError as err:
            raise SolverError(f"cluster {m}: {err}", cluster=m) from err
    return reps


def _initial_reps(ops: MetricOps, data: DataSet, config: EngineConfig) -> np.ndarray:
    if isinstance(config.init, np.ndarray):
        reps = _validated_reps(ops, config.init)
        if reps.shape[0] != config.n_clusters:
            raise DmocError(
                f"init provides {reps.shape[0]} decisions for {config.n_clusters} clusters"
            )
        return reps
    rng = np.random.default_rng(config.seed)
    picks = rng.choice(data.n, size=config.n_clusters, replace=False)
    return np.stack([ops.perfect_decision(data.values[i]) for i in picks])


def run_dmoc_ops(ops: MetricOps, data: DataSet, config: EngineConfig) -> ClusteringResult:
    """Alternating-optimization run against an arbitrary metric-ops bundle.

    The baseline objective of the starting decisions is measured after a
    first assignment; at least one full iteration always runs, and iteration
    q stops the run when its improvement is at most ``config.tol``.
    """
    if config.n_clusters > data.n:
        raise DmocError(f"n_clusters = {config.n_clusters} exceeds N = {data.n}")
    if isinstance(config.init, str) and config.init == "kmeans":
        raise DmocError("init 'kmeans' requires run_dmoc with a MetricSpec")
    values = data.values
    reps = _initial_reps(ops, data, config)

    assignment = ops.assign(values, reps)
    reps, assignment = _repair_empty(ops, values, reps, assignment)
    previous = _objective(ops, values, reps, assignment)

    objectives = []
    converged = False
    for q in range(1, config.max_iters + 1):
        if q > 1:
            assignment = ops.assign(values, reps)
            reps, assignment = _repair_empty(ops, values, reps, assignment)
        new_reps = reps.copy()
        for m in range(config.n_clusters):
            members = np.nonzero(assignment == m)[0]
            if members.size == 0:
                continue
            try:
                candidate = ops.best_representative(values, members, warm_start=reps[m])
            except SolverError as err:
                raise SolverError(f"cluster {m}: {err}", cluster=m) from err
            # keep the previous representative unless the solve strictly improved
            # the cluster utility; solver tolerance must never lower the objective
            if ops.cluster_utility(candidate, values, members) > ops.cluster_utility(
                reps[m], values, members
            ):
                new_reps[m] = candidate
        reps = new_reps
        current = _objective(ops, values, reps, assignment)
        objectives.append(current)
        if current - previous <= config.tol:
            converged = True
            break
        previous = current

    trace = RunTrace(
        objectives=tuple(objectives),
        iterations_run=len(objectives),
        converged=converged,
    )
    return ClusteringResult(
        partition=Partition(assignment, config.n_clusters),
        representatives=reps,
        objective=objectives[-1],
        trace=trace,
    )


def run_dmoc(
    spec: MetricSpec,
    data: DataSet,
    config: EngineConfig,
    solver=None,
    approx_assignment: bool = False,
) -> ClusteringResult:
    """Run decision-oriented clustering for a pricing or scheduling metric.

    ``approx_assignment`` replaces the assignment rule with its p = 2
    surrogate (scheduling only); representatives keep the true metric.
    """
    ops = metric_ops(spec, solver=solver, approx_assignment=approx_assignment)
    config_used = config
    if isinstance(config.init, str) and config.init == "kmeans":
        from . import baselines

        start = baselines.kmc_pipeline(
            spec, data, config.n_clusters, seed=config.seed, solver=solver
        )
        config_used = EngineConfig(
            n_clusters=config.n_clusters,
            max_iters=config.max_iters,
            tol=config.tol,
            seed=config.seed,
            init=start.representatives,
        )
    return run_dmoc_ops(ops, data, config_used)

"""Shared domain types, validation, and the metric interface the engine optimizes against.

Cluster indices are 0-based throughout (``0 .. M-1``). All container types are
immutable after construction: their arrays are copied on the way in and marked
read-only, so they are safe to share across threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

logger = logging.getLogger("dmoc")

#: Absolute tolerance applied to every feasibility constraint.
FEASIBILITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class DmocError(Exception):
    """Base class for all structured errors raised by this package."""


class DimensionError(DmocError):
    """A vector or matrix has the wrong shape for the operation."""


class InfeasibleDecisionError(DmocError):
    """A decision vector violates the metric's constraint set."""


class EmptyClusterError(DmocError):
    """A representative was requested for a cluster with no members."""

    def __init__(self, message: str, cluster: int | None = None):
        super().__init__(message)
        self.cluster = cluster


class SolverError(DmocError):
    """A representative solver failed to reach its target accuracy."""

    def __init__(self, message: str, cluster: int | None = None):
        super().__init__(message)
        self.cluster = cluster


class DataFormatError(DmocError):
    """An input file could not be parsed; carries the offending location."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


# ---------------------------------------------------------------------------
# Array helpers
# ---------------------------------------------------------------------------

def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=a.dtype, copy=True)
    a.flags.writeable = False
    return a


def as_vector(values, *, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DmocError(f"{name} contains non-finite entries")
    return v


def as_sample(values, *, dim: int | None = None) -> np.ndarray:
    """Coerce to a valid data sample: finite, nonnegative, optionally of length ``dim``."""
    v = as_vector(values, name="sample")
    if np.any(v < 0):
        raise DmocError("sample contains negative entries")
    if dim is not None and v.size != dim:
        raise DimensionError(f"sample has length {v.size}, expected {dim}")
    return v


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataSet:
    """A batch of samples stored as one read-only ``(N, d)`` array (row = sample)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DimensionError(f"dataset must be 2-D (N, d), got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise DmocError(f"dataset must be nonempty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DmocError("dataset contains non-finite entries")
        if np.any(v < 0):
            raise DmocError("dataset contains negative entries")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def sample(self, i: int) -> np.ndarray:
        return self.values[i]

    @classmethod
    def from_rows(cls, rows) -> "DataSet":
        return cls(np.asarray(rows, dtype=float))


@dataclass(frozen=True)
class Partition:
    """Assignment of each of N sample indices to one of ``n_clusters`` clusters."""

    assignment: np.ndarray
    n_clusters: int

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or a.size == 0:
            raise DimensionError("assignment must be a nonempty 1-D index array")
        if not np.issubdtype(a.dtype, np.integer):
            ai = a.astype(int)
            if np.any(ai != a):
                raise DmocError("assignment entries must be integers")
            a = ai
        if self.n_clusters < 1:
            raise DmocError("n_clusters must be >= 1")
        if a.min() < 0 or a.max() >= self.n_clusters:
            raise DmocError(
                f"assignment entries must lie in [0, {self.n_clusters}), "
                f"got range [{a.min()}, {a.max()}]"
            )
        object.__setattr__(self, "assignment", _freeze(a))

    @property
    def n(self) -> int:
        return self.assignment.size

    def members(self, m: int) -> np.ndarray:
        """Indices of the samples assigned to cluster ``m`` (the set N_m)."""
        return np.nonzero(self.assignment == m)[0]

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_clusters)


@dataclass(frozen=True)
class RtpParams:
    """Pricing-metric parameters: K consumers, T slots, and the cost triplet (a, b, c)."""

    n_consumers: int
    n_slots: int
    alpha: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.n_consumers < 1 or self.n_slots < 1:
            raise DmocError("n_consumers and n_slots must be >= 1")
        if not self.alpha > 0:
            raise DmocError("alpha must be > 0")
        if self.a < 0 or self.b < 0:
            raise DmocError("a and b must be >= 0")

    @property
    def data_dim(self) -> int:
        return self.n_consumers * self.n_slots

    @property
    def decision_dim(self) -> int:
        return self.n_slots


@dataclass(frozen=True)
class PcsParams:
    """Scheduling-metric parameters: exponent p, slot weights, energy need, and power cap."""

    n_slots: int
    p: float
    energy: float
    x_max: float = 3.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.n_slots < 1:
            raise DmocError("n_slots must be >= 1")
        if not (self.p == math.inf or (self.p >= 1 and float(self.p).is_integer())):
            raise DmocError(f"p must be a positive integer or inf, got {self.p}")
        if not self.energy > 0:
            raise DmocError("energy must be > 0")
        if not self.x_max > 0:
            raise DmocError("x_max must be > 0")
        if self.n_slots * self.x_max < self.energy - FEASIBILITY_TOL:
            raise DmocError(
                f"infeasible constraint set: T*x_max = {self.n_slots * self.x_max} "
                f"< energy = {self.energy}"
            )
        w = np.ones(self.n_slots) if self.weights is None else as_vector(self.weights, name="weights")
        if w.size != self.n_slots:
            raise DimensionError(f"weights has length {w.size}, expected {self.n_slots}")
        if np.any(w < 0):
            raise DmocError("weights must be nonnegative")
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def data_dim(self) -> int:
        return self.n_slots

    @property
    def decision_dim(self) -> int:
        return self.n_slots


@dataclass(frozen=True)
class MetricSpec:
    """Tagged description of the decision utility: exactly one of rtp/pcs is present."""

    kind: Literal["rtp", "pcs"]
    rtp: RtpParams | None = None
    pcs: PcsParams | None = None

    def __post_init__(self):
        if self.kind == "rtp":
            if self.rtp is None or self.pcs is not None:
                raise DmocError("kind 'rtp' requires rtp params only")
        elif self.kind == "pcs":
            if self.pcs is None or self.rtp is not None:
                raise DmocError("kind 'pcs' requires pcs params only")
        else:
            raise DmocError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def for_rtp(cls, **kwargs) -> "MetricSpec":
        return cls(kind="rtp", rtp=RtpParams(**kwargs))

    @classmethod
    def for_pcs(cls, **kwargs) -> "MetricSpec":
        return cls(kind="pcs", pcs=PcsParams(**kwargs))

    @property
    def params(self):
        return self.rtp if self.kind == "rtp" else self.pcs

    @property
    def data_dim(self) -> int:
        return self.params.data_dim

    @property
    def decision_dim(self) -> int:
        return self.params.decision_dim


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration objective values of an alternating-optimization run."""

    objectives: tuple
    iterations_run: int
    converged: bool

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(float(v) for v in self.objectives))


@dataclass(frozen=True)
class ClusteringResult:
    """Partition plus per-cluster representative decisions and the achieved objective."""

    partition: Partition
    representatives: np.ndarray
    objective: float
    trace: RunTrace

    def __post_init__(self):
        r = np.asarray(self.representatives, dtype=float)
        if r.ndim != 2:
            raise DimensionError("representatives must be a 2-D (M, T) array")
        if r.shape[0] != self.partition.n_clusters:
            raise DimensionError(
                f"{r.shape[0]} representatives for {self.partition.n_clusters} clusters"
            )
        object.__setattr__(self, "representatives", _freeze(r))

    @property
    def n_clusters(self) -> int:
        return self.partition.n_clusters


# ---------------------------------------------------------------------------
# Metric interface
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricOps:
    """Bundle of callables describing one decision-utility metric.

    The engine is generic over this interface; the pricing and scheduling
    modules (and the test-only squared-distance metric) each provide one.

    evaluate(x, g) -> float
        Utility of decision ``x`` for sample ``g``.
    assign(values, reps) -> (N,) int array
        Index of the best representative for every row of ``values``
        (argmax of evaluate, ties to the lowest index).
    cluster_utility(x, values, members) -> float
        Sum of evaluate(x, g_n) over the member rows, in index order.
    best_representative(values, members, warm_start=None) -> (T,) array
        Feasible decision maximizing cluster_utility over the members.
    perfect_decision(g) -> (T,) array
        Per-sample optimal decision x*(g).
    feasible(x) -> bool
        Constraint check for a decision vector.
    """

    decision_dim: int
    data_dim: int
    evaluate: Callable
    assign: Callable
    cluster_utility: Callable
    best_representative: Callable
    perfect_decision: Callable
    feasible: Callable


def metric_ops(spec: MetricSpec, solver=None, approx_assignment: bool = False) -> MetricOps:
    """Resolve a MetricSpec into the callable bundle for the engine."""
    if spec.kind == "rtp":
        if approx_assignment:
            raise DmocError("approximate assignment is a PCS-only variant")
        from . import rtp

        return rtp.metric_ops(spec.rtp)
    from . import pcs

    return pcs.metric_ops(spec.pcs, solver=solver, approx_assignment=approx_assignment)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def check_feasible(spec: MetricSpec, x) -> bool:
    """True iff ``x`` satisfies the metric's constraints within FEASIBILITY_TOL.

    Pricing requires positive prices (checked as ``x >= -tol``); scheduling
    requires ``0 <= x <= x_max`` per slot and total energy ``sum(x) >= E``.
    """
    x = as_vector(x, name="decision")
    if x.size != spec.decision_dim:
        raise DimensionError(
            f"decision has length {x.size}, expected {spec.decision_dim}"
        )
    tol = FEASIBILITY_TOL
    if spec.kind == "rtp":
        return bool(np.all(x >= -tol))
    p = spec.pcs
    return bool(
        np.all(x >= -tol)
        and np.all(x <= p.x_max + tol)
        and x.sum() >= p.energy - tol
    )


def evaluate_utility(spec: MetricSpec, x, g) -> float:
    """Utility f(x; g) of decision ``x`` for sample ``g`` under ``spec``.

    Raises DimensionError on shape mismatch and InfeasibleDecisionError when
    ``x`` violates the constraint set.
    """
    x = as_vector(x, name="decision")
    g = as_sample(g, dim=spec.data_dim)
    if not check_feasible(spec, x):
        raise InfeasibleDecisionError(
            f"decision violates the {spec.kind} constraint set: {x}"
        )
    if spec.kind == "rtp":
        from . import rtp

        return rtp.f1(x, g, spec.rtp)
    from . import pcs

    return pcs.f2(x, g, spec.pcs)


def total_utility(spec: MetricSpec, result: ClusteringResult, data: DataSet) -> float:
    """Sum of per-sample utilities at each sample's assigned representative.

    Samples are traversed in index order so the reduction is deterministic.
    """
    if result.partition.n != data.n:
        raise DimensionError(
            f"partition covers {result.partition.n} samples, dataset has {data.n}"
        )
    reps = result.representatives
    assignment = result.partition.assignment
    total = 0.0
    for n in range(data.n):
        total += evaluate_utility(spec, reps[assignment[n]], data.values[n])
    return total

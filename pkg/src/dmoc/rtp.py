"""Real-time pricing metric and its closed-form clustering rules.

The provider picks a per-slot price profile ``x`` (length T). A sample ``g``
stacks the satisfaction parameters of K consumers over T slots as
``(g_1(1), ..., g_K(1), ..., g_1(T), ..., g_K(T))``. Welfare is the sum of
consumer utilities at their best-response loads minus a quadratic procurement
cost ``a*L^2 + b*L + c`` per slot. Both the best assignment rule and the best
representative price admit closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DataSet,
    DimensionError,
    EmptyClusterError,
    FEASIBILITY_TOL,
    MetricOps,
    RtpParams,
    as_vector,
    logger,
)


def consumer_utility(ell, g, alpha: float):
    """Quadratic consumer benefit, saturating at load g/alpha.

    u(ell; g) = g*ell - (alpha/2)*ell**2 for ell <= g/alpha, else g**2/(2*alpha).
    Accepts scalars or arrays (broadcast).
    """
    ell = np.asarray(ell, dtype=float)
    g = np.asarray(g, dtype=float)
    quad = g * ell - 0.5 * alpha * ell**2
    sat = g**2 / (2.0 * alpha)
    out = np.where(ell <= g / alpha, quad, sat)
    return float(out) if out.ndim == 0 else out


def best_response_load(x, g, alpha: float):
    """Load the consumer picks at price x: zero when over-priced, else (g - x)/alpha."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    out = np.where(x > g, 0.0, (g - x) / alpha)
    return float(out) if out.ndim == 0 else out


def _stack_to_slots(g: np.ndarray, params: RtpParams) -> np.ndarray:
    """Reshape a stacked sample (or batch) to (..., T, K)."""
    if g.shape[-1] != params.data_dim:
        raise DimensionError(
            f"sample has length {g.shape[-1]}, expected K*T = {params.data_dim}"
        )
    return g.reshape(*g.shape[:-1], params.n_slots, params.n_consumers)


def f1_batch(x: np.ndarray, values: np.ndarray, params: RtpParams) -> np.ndarray:
    """Welfare-minus-cost utility of price profile ``x`` for each sample row."""
    x = as_vector(x, name="price profile")
    if x.size != params.n_slots:
        raise DimensionError(f"price profile has length {x.size}, expected {params.n_slots}")
    g = _stack_to_slots(np.atleast_2d(np.asarray(values, dtype=float)), params)
    price = x[:, None]
    if np.any(price > g):
        logger.warning(
            "over-pricing: price exceeds a satisfaction parameter; load clamped to 0"
        )
    ell = np.where(price > g, 0.0, (g - price) / params.alpha)
    u = consumer_utility(ell, g, params.alpha)
    load = ell.sum(axis=-1)
    per_slot = u.sum(axis=-1) - params.a * load**2 - params.b * load - params.c
    return per_slot.sum(axis=-1)


def f1(x, g, params: RtpParams) -> float:
    """Provider utility of price profile ``x`` for one stacked sample ``g``."""
    return float(f1_batch(x, np.asarray(g, dtype=float), params)[0])


@dataclass(frozen=True)
class RtpDerivedConstants:
    """Auxiliary scalars of the quadratic completion: a_tilde, kappa, beta."""

    a_tilde: float
    kappa: float
    beta: float
    n_slots: int

    @property
    def beta_vec(self) -> np.ndarray:
        return np.full(self.n_slots, self.beta)


def derived_constants(params: RtpParams) -> RtpDerivedConstants:
    """a_tilde = K^2/alpha^2 * (a + alpha/(2K)), kappa = a*K/(alpha^2*a_tilde), beta = b*K/(2*alpha*a_tilde)."""
    K, alpha = params.n_consumers, params.alpha
    a_tilde = (K**2 / alpha**2) * (params.a + alpha / (2.0 * K))
    kappa = params.a * K / (alpha**2 * a_tilde)
    beta = params.b * K / (2.0 * alpha * a_tilde)
    return RtpDerivedConstants(a_tilde=a_tilde, kappa=kappa, beta=beta, n_slots=params.n_slots)


def affine_transform(g, params: RtpParams, constants: RtpDerivedConstants | None = None) -> np.ndarray:
    """Map a stacked sample into price space: entry t is kappa * sum_k g_k(t) + beta."""
    c = derived_constants(params) if constants is None else constants
    g = as_vector(np.asarray(g, dtype=float), name="sample")
    slot_sums = _stack_to_slots(g, params).sum(axis=-1)
    return c.kappa * slot_sums + c.beta


def transform_dataset(values, params: RtpParams, constants: RtpDerivedConstants | None = None) -> np.ndarray:
    """Affine transform applied row-wise: (N, K*T) -> (N, T)."""
    c = derived_constants(params) if constants is None else constants
    v = np.atleast_2d(np.asarray(values, dtype=float))
    slot_sums = _stack_to_slots(v, params).sum(axis=-1)
    return c.kappa * slot_sums + c.beta


def assign_batch(values, reps, params: RtpParams) -> np.ndarray:
    """Closed-form assignment: nearest representative in the transformed space."""
    z = transform_dataset(values, params)
    reps = np.atleast_2d(np.asarray(reps, dtype=float))
    d2 = ((z[:, None, :] - reps[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)


def assign_cluster_rtp(g, reps, params: RtpParams) -> int:
    """Best cluster for one sample (ties to the lowest index)."""
    return int(assign_batch(np.atleast_2d(np.asarray(g, dtype=float)), reps, params)[0])


def _values_of(data) -> np.ndarray:
    return data.values if isinstance(data, DataSet) else np.atleast_2d(np.asarray(data, dtype=float))


def closed_form_representative(data, member_indices, params: RtpParams) -> np.ndarray:
    """Best representative price profile for a cluster.

    x*(t) = (a * gbar(t) + alpha*b/(2K)) / (a + alpha/(2K)) where gbar(t) is the
    cluster-average satisfaction parameter at slot t. Requires a > 0 or b > 0.
    """
    if params.a == 0 and params.b == 0:
        raise ValueError("representative price is undefined when a = 0 and b = 0")
    members = np.asarray(list(member_indices), dtype=int)
    if members.size == 0:
        raise EmptyClusterError("cannot compute a representative for an empty cluster")
    values = _values_of(data)
    gbar = _stack_to_slots(values[members], params).mean(axis=-1).mean(axis=0)
    half = params.alpha / (2.0 * params.n_consumers)
    return (params.a * gbar + half * params.b) / (params.a + half)


def generate_rtp_scenario(
    n_consumers: int,
    n_slots: int,
    n_samples: int,
    seed: int,
    g_low: float = 2.0,
    g_high: float = 3.0,
) -> DataSet:
    """Synthetic satisfaction parameters: i.i.d. uniform on [g_low, g_high]."""
    if g_low > g_high:
        raise ValueError(f"g_low = {g_low} exceeds g_high = {g_high}")
    if g_low < 0:
        raise ValueError("satisfaction parameters must be nonnegative")
    rng = np.random.default_rng(seed)
    values = rng.uniform(g_low, g_high, size=(n_samples, n_consumers * n_slots))
    return DataSet(values)


def metric_ops(params: RtpParams) -> MetricOps:
    """Callable bundle for the engine (closed-form assignment and representatives)."""

    def feasible(x) -> bool:
        x = as_vector(x, name="price profile")
        return x.size == params.n_slots and bool(np.all(x >= -FEASIBILITY_TOL))

    def cluster_utility(x, values, members) -> float:
        return float(f1_batch(x, values[np.asarray(members, dtype=int)], params).sum())

    return MetricOps(
        decision_dim=params.decision_dim,
        data_dim=params.data_dim,
        evaluate=lambda x, g: f1(x, g, params),
        assign=lambda values, reps: assign_batch(values, reps, params),
        cluster_utility=cluster_utility,
        best_representative=lambda values, members, warm_start=None: closed_form_representative(
            values, members, params
        ),
        perfect_decision=lambda g: closed_form_representative(
            np.atleast_2d(np.asarray(g, dtype=float)), [0], params
        ),
        feasible=feasible,
    )

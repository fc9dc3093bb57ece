"""Closed-form and iterative models of swarm lifespan.

Covers the root-driven spreading recurrence and its success threshold,
the missing-chunk probability bounds for the patient-peer pipeline and
its Bernoulli relaxation, the loss/creation survivability balance, the
critical branching extinction curve, and the mean-field chunk-count
chain with its stationary solver.

Every factorial ratio (n!/n^n and friends) is evaluated in the log
domain via lgamma; direct evaluation would overflow or underflow far
below the regimes of interest. Threshold constants are always computed
from exp/expm1, never hard-coded, so tests can compare them against an
independent evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ConfigurationError, DistributionVector, delta_matrix


# ---------------------------------------------------------------------------
# spreading phase


def spreading_ratio_step(ratio: float, alpha_r: float) -> float:
    """Next roots-to-undispatched ratio: (1 - alpha_r) * e^ratio * ratio.

    Saturates to +inf instead of overflowing; an unbounded ratio means
    spreading is certain.
    """
    if ratio < 0:
        raise ConfigurationError(f"ratio must be >= 0, got {ratio}")
    try:
        grown = math.exp(ratio)
    except OverflowError:
        return math.inf
    value = (1.0 - alpha_r) * grown * ratio
    return math.inf if math.isinf(value) else value


def spreading_succeeds(ratio0: float, alpha_r: float) -> bool:
    """Whether the ratio recurrence grows from its starting point.

    True iff (1 - alpha_r) * e^ratio0 >= 1; then the undispatched pool
    shrinks faster than the root population and spreading completes.
    """
    if ratio0 < 0:
        raise ConfigurationError(f"ratio must be >= 0, got {ratio0}")
    try:
        return (1.0 - alpha_r) * math.exp(ratio0) >= 1.0
    except OverflowError:
        return alpha_r < 1.0


def spreading_threshold(roots: int, k: int) -> float:
    """Largest root-departure probability that still spreads the file.

    Equals 1 - e^(-roots/k); for roots much smaller than k this is about
    roots/k.
    """
    if roots < 1 or k < 1:
        raise ConfigurationError(f"need roots >= 1 and k >= 1, got {roots}, {k}")
    return -math.expm1(-roots / k)


def expected_undispatched_step(undispatched: float, roots: float) -> float:
    """Mean-field update of the undispatched chunk count: K * e^(-R/K)."""
    if undispatched < 0 or roots < 0:
        raise ConfigurationError("counts must be non-negative")
    if undispatched == 0:
        return 0.0
    return undispatched * math.exp(-roots / undispatched)


@dataclass(frozen=True)
class SpreadingTrajectory:
    """Deterministic mean-field trajectory of the spreading phase.

    expected_roots[t] is exactly (1 - alpha_r)^t * roots; the
    undispatched sequence follows the e^(-R/K) contraction, and ratio is
    their quotient (inf once the undispatched pool hits zero).
    """

    ratio: tuple[float, ...]
    expected_roots: tuple[float, ...]
    expected_undispatched: tuple[float, ...]


def spreading_trajectory(roots: int, k: int, alpha_r: float, t_max: int) -> SpreadingTrajectory:
    if roots < 1 or k < 1:
        raise ConfigurationError(f"need roots >= 1 and k >= 1, got {roots}, {k}")
    if t_max < 0:
        raise ConfigurationError(f"t_max must be >= 0, got {t_max}")
    er = [float(roots) * (1.0 - alpha_r) ** t for t in range(t_max + 1)]
    ek = [float(k)]
    for t in range(t_max):
        ek.append(expected_undispatched_step(ek[-1], er[t]))
    ratio = tuple(r / u if u > 0 else math.inf for r, u in zip(er, ek))
    return SpreadingTrajectory(ratio, tuple(er), tuple(ek))


# ---------------------------------------------------------------------------
# missing-chunk probability bounds


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class BoundsReport:
    """Missing-chunk probabilities and bounds for n peers, k chunks.

    Pipeline-model fields: exact_missing_one_chunk is the exact per-chunk
    absence probability n!/n^n at the staircase state, union_bound is k
    times that, stirling_bound the k*n*e^(-n) comparison value, and
    stirling_bound_holds records whether n!/n^n <= n*e^(-n) actually
    holds (it fails for n <= 6).

    Bernoulli-model fields: bernoulli_y_exact is (n+1)!/(n+1)^n, the
    remaining fields are the Chernoff/occupancy bounds combining into
    z_dead_lower, a lower bound on the probability that some chunk is
    missing. Probability-like fields are clamped to [0, 1]; the _raw
    variants keep the unclamped values.
    """

    n: int
    k: int
    exact_missing_one_chunk: float | None = None
    union_bound: float | None = None
    union_bound_raw: float | None = None
    stirling_bound: float | None = None
    stirling_bound_raw: float | None = None
    stirling_bound_holds: bool | None = None
    bernoulli_y_exact: float | None = None
    g_shortfall_bound: float | None = None
    q_bound: float | None = None
    q_bound_raw: float | None = None
    z_alive_bound: float | None = None
    z_dead_lower: float | None = None
    z_dead_lower_raw: float | None = None


def deterministic_model_bounds(n: int, k: int) -> BoundsReport:
    """Pipeline-model absence probability and its union/Stirling bounds."""
    if n < 1 or k < 1:
        raise ConfigurationError(f"need n >= 1 and k >= 1, got {n}, {k}")
    log_exact = math.lgamma(n + 1) - n * math.log(n)  # log of n!/n^n
    exact = math.exp(log_exact)
    union_raw = k * exact
    stirling_raw = k * math.exp(math.log(n) - n)  # k * n * e^(-n)
    return BoundsReport(
        n=n,
        k=k,
        exact_missing_one_chunk=exact,
        union_bound=_clamp01(union_raw),
        union_bound_raw=union_raw,
        stirling_bound=_clamp01(stirling_raw),
        stirling_bound_raw=stirling_raw,
        stirling_bound_holds=log_exact <= math.log(n) - n,
    )


@dataclass(frozen=True)
class SurvivalScale:
    """Expected time before a missing-chunk event under the union bound.

    epochs counts peer-replacement epochs (geometric mean 1/(k*n!/n^n),
    clamped to at least 1); rounds converts at k/n rounds per epoch.
    """

    epochs: float
    rounds: float
    epochs_raw: float


def survival_time_scale(n: int, k: int) -> SurvivalScale:
    if n < 1 or k < 1:
        raise ConfigurationError(f"need n >= 1 and k >= 1, got {n}, {k}")
    log_p = math.log(k) + math.lgamma(n + 1) - n * math.log(n)
    epochs_raw = math.exp(-log_p)
    epochs = max(1.0, epochs_raw)
    return SurvivalScale(epochs=epochs, rounds=epochs * k / n, epochs_raw=epochs_raw)


def bernoulli_model_bounds(n: int, k: int) -> BoundsReport:
    """Bernoulli-relaxation bounds on the missing-chunk probability."""
    if n < 1 or k < 1:
        raise ConfigurationError(f"need n >= 1 and k >= 1, got {n}, {k}")
    log_y = math.lgamma(n + 2) - n * math.log(n + 1)  # log of (n+1)!/(n+1)^n
    y_exact = math.exp(log_y)
    g_shortfall = math.exp(-k / (2.0 * n**3 * (n + 1)))
    q_raw = n * g_shortfall
    # k(n+1)/e^(n+1) in log domain so large n underflows cleanly to 0
    z_alive = math.exp(-math.exp(math.log(k) + math.log(n + 1) - (n + 1)))
    z_dead_raw = 1.0 - z_alive - q_raw
    return BoundsReport(
        n=n,
        k=k,
        bernoulli_y_exact=y_exact,
        g_shortfall_bound=g_shortfall,
        q_bound=_clamp01(q_raw),
        q_bound_raw=q_raw,
        z_alive_bound=_clamp01(z_alive),
        z_dead_lower=_clamp01(z_dead_raw),
        z_dead_lower_raw=z_dead_raw,
    )


def full_bounds_report(n: int, k: int) -> BoundsReport:
    """Both bound families merged into one report."""
    upper = deterministic_model_bounds(n, k)
    lower = bernoulli_model_bounds(n, k)
    return replace(
        upper,
        bernoulli_y_exact=lower.bernoulli_y_exact,
        g_shortfall_bound=lower.g_shortfall_bound,
        q_bound=lower.q_bound,
        q_bound_raw=lower.q_bound_raw,
        z_alive_bound=lower.z_alive_bound,
        z_dead_lower=lower.z_dead_lower,
        z_dead_lower_raw=lower.z_dead_lower_raw,
    )


# ---------------------------------------------------------------------------
# survivability balance and critical branching


@dataclass(frozen=True)
class LossCreation:
    chunks_lost: float
    creation_cap: float
    survivable: bool


def loss_and_creation(
    nodes: int, dist: DistributionVector, alpha: float, alpha_r: float | None = None
) -> LossCreation:
    """Expected chunks lost per round versus the creation upper bound.

    Loss is N * (alpha * sum_{i<k} i*P_i + alpha_r * P_k); creation is
    capped at (1 - alpha) * N * (1 - P_0) because only non-empty peers
    that stay can upload. survivable is True when the cap covers the
    loss.
    """
    if alpha_r is None:
        alpha_r = alpha
    p = dist.p
    k = dist.k
    lost = nodes * (alpha * float(np.dot(np.arange(k), p[:k])) + alpha_r * float(p[k]))
    cap = (1.0 - alpha) * nodes * (1.0 - float(p[0]))
    return LossCreation(chunks_lost=lost, creation_cap=cap, survivable=cap >= lost)


def extinction_step(f: float) -> float:
    """One round of the critical chunk branching: f -> ((f + 1)/2)^2.

    Per round each chunk copy is duplicated and every copy independently
    destroyed with probability 1/2, so the offspring law is
    {0: 1/4, 1: 1/2, 2: 1/4} and f is the extinction probability so far.
    """
    if not 0.0 <= f <= 1.0:
        raise ConfigurationError(f"extinction probability must be in [0, 1], got {f}")
    return ((f + 1.0) / 2.0) ** 2


def extinction_curve(t_max: int) -> np.ndarray:
    """Extinction probabilities by round, starting from 0 at t=0.

    Strictly increasing toward 1; the survival probability decays like
    4/t (critical branching with offspring variance 1/2).
    """
    if t_max < 0:
        raise ConfigurationError(f"t_max must be >= 0, got {t_max}")
    out = np.empty(t_max + 1)
    f = 0.0
    out[0] = f
    for t in range(1, t_max + 1):
        f = ((f + 1.0) / 2.0) ** 2
        out[t] = f
    return out


def matching_survival_threshold() -> float:
    """Largest churn probability survivable under random server matching.

    Computed as (1 - 1/e) / (2 - 1/e), about 0.3873; strictly below the
    1/2 threshold of a perfect per-round pairing.
    """
    inv_e = math.exp(-1.0)
    return (1.0 - inv_e) / (2.0 - inv_e)


def luck_value(n: int | None = None) -> float:
    """Probability that a requesting peer gets served in a round.

    Asymptotically 1 - 1/e. The finite mode returns the server-side
    diagnostic 1 - (1 - 1/n)^(n-1), the probability that a given node is
    chosen as server by at least one other; it converges to the same
    limit from below.
    """
    if n is None:
        return -math.expm1(-1.0)
    if n < 2:
        raise ConfigurationError(f"finite luck needs n >= 2, got {n}")
    return 1.0 - (1.0 - 1.0 / n) ** (n - 1)


# ---------------------------------------------------------------------------
# mean-field chunk-count chain


def _upward_rates(p: np.ndarray, alpha: float, luck: float, dmat: np.ndarray) -> np.ndarray:
    s = np.minimum(dmat @ p, 1.0)
    return (1.0 - alpha) * luck * s


def mean_field_transition(
    dist: DistributionVector,
    alpha: float,
    luck: float,
    alpha_r: float | None = None,
) -> DistributionVector:
    """One synchronous step of the chunk-count distribution map.

    A peer in state i < k moves to i+1 with probability
    (1 - alpha) * luck * sum_j delta(i, j) * P_j, stays with the rest of
    (1 - alpha), and resets to state 0 with probability alpha; state k
    resets with alpha_r (defaulting to alpha). The map conserves
    probability mass exactly up to float rounding.
    """
    if alpha_r is None:
        alpha_r = alpha
    k = dist.k
    p = dist.p
    dmat = delta_matrix(k)
    t_up = _upward_rates(p, alpha, luck, dmat)
    new = np.empty_like(p)
    stay = np.maximum((1.0 - alpha) - t_up, 0.0)
    new[0] = p[0] * (1.0 - t_up[0]) + alpha * float(p[1:k].sum()) + alpha_r * p[k]
    new[1:k] = p[:-2] * t_up[:-2] + p[1:k] * stay[1:k]
    new[k] = p[k - 1] * t_up[k - 1] + p[k] * (1.0 - alpha_r)
    return DistributionVector(new)


def stationary_equation_residuals(
    dist: DistributionVector, alpha: float, luck: float
) -> np.ndarray:
    """Residuals of the literal printed stationary equations (diagnostic).

    The printed balance for state 0 is not mass-conserving as written, so
    its residual stays visibly non-zero even at the true fixed point of
    the transition map; the i > 0 equations match the map and vanish
    there. Reported for diagnosis only, never used by the solver.
    """
    k = dist.k
    p = dist.p
    dmat = delta_matrix(k)
    s = dmat @ p
    res = np.empty(k + 1)
    res[0] = p[0] - (alpha * p.sum() + (1.0 - alpha) * (1.0 - luck * s[0]))
    for i in range(1, k + 1):
        res[i] = p[i] - (1.0 - alpha) * (
            p[i] * (1.0 - luck * s[i]) + p[i - 1] * luck * s[i - 1]
        )
    return res


@dataclass(frozen=True)
class MeanFieldModel:
    """Fixed point (or last iterate) of the mean-field chunk-count map."""

    k: int
    alpha: float
    alpha_r: float
    luck: float
    dist: DistributionVector
    residual: float
    iterations: int
    converged: bool


def steady_state_solve(
    k: int,
    alpha: float,
    luck: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    damping: float = 0.5,
    initial: DistributionVector | None = None,
    alpha_r: float | None = None,
) -> MeanFieldModel:
    """Damped fixed-point iteration of the mean-field map.

    residual is the max absolute change of one undamped step at the
    returned iterate, so the fixed point is invariant under
    mean_field_transition within tol. Hitting max_iter is reported as
    converged=False with the last iterate, not raised.
    """
    if tol <= 0:
        raise ConfigurationError(f"tol must be > 0, got {tol}")
    if not 0.0 <= damping < 1.0:
        raise ConfigurationError(f"damping must be in [0, 1), got {damping}")
    if luck is None:
        luck = luck_value()
    if alpha_r is None:
        alpha_r = alpha
    dmat = delta_matrix(k)
    p = (initial.p if initial is not None else DistributionVector.uniform(k).p).copy()

    residual = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        t_up = _upward_rates(p, alpha, luck, dmat)
        stay = np.maximum((1.0 - alpha) - t_up, 0.0)
        new = np.empty_like(p)
        new[0] = p[0] * (1.0 - t_up[0]) + alpha * float(p[1:k].sum()) + alpha_r * p[k]
        new[1:k] = p[:-2] * t_up[:-2] + p[1:k] * stay[1:k]
        new[k] = p[k - 1] * t_up[k - 1] + p[k] * (1.0 - alpha_r)
        residual = float(np.abs(new - p).max())
        p = damping * p + (1.0 - damping) * new
        p /= p.sum()  # hold the simplex against float drift
        if residual < tol:
            converged = True
            break
    return MeanFieldModel(
        k=k,
        alpha=alpha,
        alpha_r=alpha_r,
        luck=luck,
        dist=DistributionVector(p),
        residual=residual,
        iterations=iterations,
        converged=converged,
    )

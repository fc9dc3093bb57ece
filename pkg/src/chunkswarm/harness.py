"""Monte Carlo estimation, small-instance oracles and parameter sweeps.

Per-trial seeds are derived from the master seed through a splittable
counter scheme (one spawn key per trial index), so enlarging a run never
perturbs the trials already drawn and results are independent of
execution order. Estimates carry Wilson intervals for proportions and
normal intervals for means.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .analytic import (
    MeanFieldModel,
    bernoulli_model_bounds,
    deterministic_model_bounds,
    steady_state_solve,
)
from .core import ConfigurationError, Scenario, ScenarioConfig
from .engine import (
    Seeding,
    TrialReport,
    check_network_alive,
    initial_state,
    run_matching_round,
    run_trial,
)

Z_95 = 1.959963984540054  # two-sided 95% normal quantile

# direct-sampling oracles refuse instances beyond these budgets
STAIRCASE_GUARD_CELLS = 10**6
BERNOULLI_GUARD_OPS = 10**9


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a 95% confidence interval."""

    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the interval contains the point estimate; guard that against rounding
    return max(0.0, min(centre - half, phat)), min(1.0, max(centre + half, phat))


def proportion_estimate(successes: int, trials: int, seed: int) -> Estimate:
    lo, hi = wilson_interval(successes, trials)
    phat = successes / trials
    return Estimate(
        mean=phat,
        stderr=math.sqrt(phat * (1.0 - phat) / trials),
        ci_low=lo,
        ci_high=hi,
        trials=trials,
        seed=seed,
    )


def mean_estimate(values: np.ndarray, seed: int) -> Estimate:
    values = np.asarray(values, dtype=float)
    trials = values.size
    if trials < 1:
        raise ConfigurationError("mean_estimate needs at least one value")
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return Estimate(
        mean=mean,
        stderr=stderr,
        ci_low=mean - Z_95 * stderr,
        ci_high=mean + Z_95 * stderr,
        trials=trials,
        seed=seed,
    )


def derive_trial_seed(master_seed: int, index: int) -> int:
    """Stable per-trial seed: spawn key (index,) under the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_indexed_trial(args: tuple[ScenarioConfig, Seeding | None, int, int]) -> tuple[int, TrialReport]:
    cfg, seeding, master_seed, index = args
    trial_cfg = replace(cfg, seed=derive_trial_seed(master_seed, index))
    return index, run_trial(trial_cfg, seeding)


def collect_trials(
    cfg: ScenarioConfig,
    seeding: Seeding | None,
    trials: int,
    master_seed: int,
    workers: int | None = None,
) -> list[TrialReport]:
    """Independent trials in index order, optionally across processes.

    The result is identical for any worker count because each trial's
    seed depends only on (master_seed, index).
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    jobs = [(cfg, seeding, master_seed, i) for i in range(trials)]
    workers = 1 if workers is None else min(workers, trials)
    if workers <= 1:
        indexed = map(_run_indexed_trial, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            indexed = list(pool.map(_run_indexed_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    reports: list[TrialReport | None] = [None] * trials
    for index, report in indexed:
        reports[index] = report
    return reports  # type: ignore[return-value]


def estimate_event(
    cfg: ScenarioConfig,
    seeding: Seeding | None,
    event: Callable[[TrialReport], bool],
    trials: int,
    master_seed: int,
    workers: int | None = None,
) -> Estimate:
    """Wilson-interval estimate of the probability of a trial event."""
    reports = collect_trials(cfg, seeding, trials, master_seed, workers)
    successes = sum(1 for r in reports if event(r))
    return proportion_estimate(successes, trials, master_seed)


# named events for the command-line surface
EVENTS: dict[str, Callable[[TrialReport], bool]] = {
    "spread-succeeded": lambda r: bool(r.spread_succeeded),
    "died": lambda r: not r.censored,
}


# ---------------------------------------------------------------------------
# small-instance oracles


@dataclass(frozen=True)
class StaircaseOracleReport:
    """Sampled absence probabilities for the staircase pipeline state.

    per_chunk is the clustered estimate of a single chunk's absence
    probability (mean over samples of the per-sample absent fraction);
    analytic_per_chunk carries n!/n^n and union_bound k times it for
    comparison. Sizes are floored, so the sampled value exceeds n!/n^n
    whenever n does not divide k.
    """

    n: int
    k: int
    any_missing: Estimate
    per_chunk: Estimate
    analytic_per_chunk: float
    union_bound: float


def _absence_estimates(
    absent: np.ndarray, samples: int, seed: int
) -> tuple[Estimate, Estimate]:
    any_missing = proportion_estimate(int(absent.any(axis=1).sum()), samples, seed)
    per_chunk = mean_estimate(absent.mean(axis=1), seed)
    return any_missing, per_chunk


def oracle_staircase_missing(n: int, k: int, samples: int, seed: int) -> StaircaseOracleReport:
    """Directly sample the staircase seeding and count absent chunks.

    Peer i of 1..n holds a uniform random floor((i-1)k/n)-subset,
    independently across peers. Guarded to n*k <= 10^6 cells per sample.
    """
    if n < 1 or k < 1 or samples < 1:
        raise ConfigurationError("need n >= 1, k >= 1, samples >= 1")
    if n * k > STAIRCASE_GUARD_CELLS:
        raise ConfigurationError(
            f"staircase oracle refuses n*k = {n * k} > {STAIRCASE_GUARD_CELLS}; "
            "use the analytic bounds at this size"
        )
    rng = np.random.default_rng(seed)
    present = np.zeros((samples, k), dtype=bool)
    for i in range(1, n + 1):
        size = (i - 1) * k // n
        if size == 0:
            continue
        r = rng.random((samples, k))
        ranks = r.argsort(axis=1).argsort(axis=1)
        present |= ranks < size
    any_missing, per_chunk = _absence_estimates(~present, samples, seed)
    bounds = deterministic_model_bounds(n, k)
    return StaircaseOracleReport(
        n=n,
        k=k,
        any_missing=any_missing,
        per_chunk=per_chunk,
        analytic_per_chunk=bounds.exact_missing_one_chunk,
        union_bound=bounds.union_bound_raw,
    )


@dataclass(frozen=True)
class BernoulliOracleReport:
    """Sampled absence probabilities for the Bernoulli relaxation.

    The model holds chunk j at peer i independently with probability
    i/(n+1), so a chunk is absent with probability n!/(n+1)^n
    (direct_per_chunk). The closed form carried by the bounds report,
    (n+1)!/(n+1)^n, differs from it by a factor n+1; closed_form_mismatch
    flags that discrepancy rather than resolving it.
    """

    n: int
    k: int
    any_missing: Estimate
    per_chunk: Estimate
    direct_per_chunk: float
    closed_form_per_chunk: float
    closed_form_mismatch: bool


def oracle_bernoulli_missing(n: int, k: int, samples: int, seed: int) -> BernoulliOracleReport:
    """Directly sample the Bernoulli model and count absent chunks."""
    if n < 1 or k < 1 or samples < 1:
        raise ConfigurationError("need n >= 1, k >= 1, samples >= 1")
    if n * k * samples > BERNOULLI_GUARD_OPS:
        raise ConfigurationError(
            f"bernoulli oracle refuses n*k*samples = {n * k * samples} > {BERNOULLI_GUARD_OPS}"
        )
    rng = np.random.default_rng(seed)
    present = np.zeros((samples, k), dtype=bool)
    for i in range(1, n + 1):
        present |= rng.random((samples, k)) < i / (n + 1)
    any_missing, per_chunk = _absence_estimates(~present, samples, seed)
    direct = math.exp(math.lgamma(n + 1) - n * math.log(n + 1))  # n!/(n+1)^n
    closed = bernoulli_model_bounds(n, k).bernoulli_y_exact
    return BernoulliOracleReport(
        n=n,
        k=k,
        any_missing=any_missing,
        per_chunk=per_chunk,
        direct_per_chunk=direct,
        closed_form_per_chunk=closed,
        closed_form_mismatch=not math.isclose(direct, closed, rel_tol=1e-9),
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SurvivalSummary:
    """Survival statistics at one churn level.

    Censored trials enter the median as +inf sentinels and are excluded
    from the mean, which is reported over uncensored trials only.
    """

    alpha: float
    trials: int
    deaths: int
    censored: int
    median_survival: float
    mean_survival_uncensored: float | None


@dataclass(frozen=True)
class SweepResult:
    axis: str
    grid: tuple[float, ...]
    rows: tuple
    config_template: ScenarioConfig
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.grid):
            raise ConfigurationError("one row per grid point required")


def _check_grid(grid: Sequence[float]) -> tuple[float, ...]:
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ConfigurationError("sweep grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError("sweep grid must be strictly increasing")
    return grid


def survival_sweep(
    cfg_template: ScenarioConfig,
    alpha_grid: Sequence[float],
    trials: int,
    master_seed: int,
    seeding: Seeding | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Survival-time statistics of matching trials across churn levels."""
    grid = _check_grid(alpha_grid)
    rows = []
    for j, alpha in enumerate(grid):
        cfg = replace(
            cfg_template,
            alpha=alpha,
            alpha_r=max(alpha, cfg_template.alpha_r) if cfg_template.alpha_r is not None else alpha,
        )
        reports = collect_trials(cfg, seeding, trials, derive_trial_seed(master_seed, j), workers)
        times = np.array(
            [math.inf if r.censored else float(r.survival_time) for r in reports]
        )
        uncensored = times[np.isfinite(times)]
        rows.append(
            SurvivalSummary(
                alpha=alpha,
                trials=trials,
                deaths=int(uncensored.size),
                censored=int(times.size - uncensored.size),
                median_survival=float(np.median(times)),
                mean_survival_uncensored=float(uncensored.mean()) if uncensored.size else None,
            )
        )
    return SweepResult(
        axis="alpha",
        grid=grid,
        rows=tuple(rows),
        config_template=cfg_template,
        trials=trials,
        seed=master_seed,
    )


def success_sweep(
    cfg_template: ScenarioConfig,
    alpha_r_grid: Sequence[float],
    trials: int,
    master_seed: int,
    seeding: Seeding | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Spreading success probability across root-departure levels."""
    grid = _check_grid(alpha_r_grid)
    rows = []
    for j, alpha_r in enumerate(grid):
        cfg = replace(cfg_template, alpha_r=max(alpha_r, cfg_template.alpha))
        est = estimate_event(
            cfg,
            seeding,
            EVENTS["spread-succeeded"],
            trials,
            derive_trial_seed(master_seed, j),
            workers,
        )
        rows.append(est)
    return SweepResult(
        axis="alpha_r",
        grid=grid,
        rows=tuple(rows),
        config_template=cfg_template,
        trials=trials,
        seed=master_seed,
    )


def crossing_location(grid: Sequence[float], values: Sequence[float], level: float = 0.5) -> float | None:
    """Linear interpolation of the first downward crossing of a level."""
    for (x0, x1), (v0, v1) in zip(zip(grid, grid[1:]), zip(values, values[1:])):
        if v0 >= level > v1:
            if v0 == v1:
                return x0
            return x0 + (x1 - x0) * (v0 - level) / (v0 - v1)
    return None


# ---------------------------------------------------------------------------
# mean-field versus simulation


@dataclass(frozen=True)
class MeanFieldComparison:
    """Time-averaged simulation histogram against the mean-field fixed point.

    If the simulated network dies before the burn-in completes, died is
    set and no distance is reported.
    """

    tv_distance: float | None
    per_state_delta: tuple[float, ...] | None
    sim_histogram: tuple[float, ...] | None
    model: MeanFieldModel
    died: bool
    death_round: int | None
    burn_in: int
    rounds_averaged: int


def meanfield_vs_simulation(
    k: int,
    alpha: float,
    n: int,
    rounds: int,
    master_seed: int,
    burn_in: int | None = None,
    alpha_r: float | None = None,
    luck: float | None = None,
    seeding: Seeding | None = None,
    tol: float = 1e-12,
) -> MeanFieldComparison:
    """One long matching trajectory, time-averaged after burn-in, compared
    to the stationary mean-field distribution by total-variation distance.
    """
    if n < 2:
        raise ConfigurationError("comparison needs n >= 2")
    if burn_in is None:
        burn_in = 10 * k  # a decade of the k-round minimum download time
    if rounds <= burn_in:
        raise ConfigurationError(f"rounds must exceed burn_in = {burn_in}")
    model = steady_state_solve(k, alpha, luck=luck, tol=tol, alpha_r=alpha_r)
    cfg = ScenarioConfig(
        n=n,
        k=k,
        scenario=Scenario.RANDOM_MATCHING,
        alpha=alpha,
        alpha_r=alpha_r,
        max_rounds=rounds,
        seed=master_seed,
    )
    state = initial_state(cfg, seeding)
    acc = np.zeros(k + 1)
    averaged = 0
    died = False
    death_round = None
    while state.round < rounds:
        run_matching_round(state, cfg)
        if not check_network_alive(state).alive:
            died = True
            death_round = state.round
            break
        if state.round > burn_in:
            acc += np.bincount(state.chunks.sum(axis=1), minlength=k + 1)
            averaged += 1
    if averaged == 0:
        return MeanFieldComparison(
            tv_distance=None,
            per_state_delta=None,
            sim_histogram=None,
            model=model,
            died=died,
            death_round=death_round,
            burn_in=burn_in,
            rounds_averaged=0,
        )
    sim = acc / acc.sum()
    delta_states = sim - model.dist.p
    return MeanFieldComparison(
        tv_distance=float(0.5 * np.abs(delta_states).sum()),
        per_state_delta=tuple(delta_states.tolist()),
        sim_histogram=tuple(sim.tolist()),
        model=model,
        died=died,
        death_round=death_round,
        burn_in=burn_in,
        rounds_averaged=averaged,
    )

"""Figure rendering for report outputs.

Every function writes a PNG next to the delimited data it illustrates
and returns the path. Rendering is strictly batch (Agg backend); the
data files remain the canonical record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytic import SpreadingTrajectory
from .harness import Estimate, MeanFieldComparison, SurvivalSummary


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_spreading_trajectory(traj: SpreadingTrajectory, path: str) -> str:
    t = np.arange(len(traj.expected_roots))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, traj.expected_roots, label="expected roots")
    ax.plot(t, traj.expected_undispatched, label="expected undispatched chunks")
    ax.set_xlabel("round")
    ax.set_ylabel("count")
    ax.set_yscale("log")
    ax2 = ax.twinx()
    ratio = np.array(traj.ratio)
    finite = np.isfinite(ratio)
    ax2.plot(t[finite], ratio[finite], color="tab:red", ls="--", label="roots/undispatched")
    ax2.set_ylabel("ratio", color="tab:red")
    ax.legend(loc="lower left")
    ax.set_title("Spreading trajectory (mean-field)")
    return _finish(fig, path)


def plot_extinction_curve(curve: np.ndarray, path: str) -> str:
    t = np.arange(1, len(curve))
    survival = 1.0 - curve[1:]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.loglog(t, survival, label="survival probability")
    ax.loglog(t, 4.0 / t, ls="--", label="4/t guide")
    ax.set_xlabel("round")
    ax.set_ylabel("probability the line survives")
    ax.set_title("Critical chunk branching")
    ax.legend()
    return _finish(fig, path)


def plot_survival_sweep(rows: list[SurvivalSummary], path: str, threshold: float | None = None) -> str:
    alphas = [r.alpha for r in rows]
    medians = [r.median_survival for r in rows]
    cap = max((m for m in medians if np.isfinite(m)), default=1.0) * 2
    shown = [m if np.isfinite(m) else cap for m in medians]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(alphas, shown, marker="o")
    for a, m, s in zip(alphas, medians, shown):
        if not np.isfinite(m):
            ax.annotate("censored", (a, s), textcoords="offset points", xytext=(0, 5), fontsize=8)
    if threshold is not None:
        ax.axvline(threshold, color="tab:red", ls="--", label=f"threshold {threshold:.4f}")
        ax.legend()
    ax.set_yscale("log")
    ax.set_xlabel("churn probability")
    ax.set_ylabel("median survival time (rounds)")
    ax.set_title("Survival versus churn")
    return _finish(fig, path)


def plot_success_sweep(grid: list[float], rows: list[Estimate], path: str, threshold: float | None = None) -> str:
    means = [r.mean for r in rows]
    lo = [r.ci_low for r in rows]
    hi = [r.ci_high for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(grid, means, marker="o")
    ax.fill_between(grid, lo, hi, alpha=0.25)
    if threshold is not None:
        ax.axvline(threshold, color="tab:red", ls="--", label=f"threshold {threshold:.4f}")
        ax.legend()
    ax.axhline(0.5, color="grey", lw=0.8)
    ax.set_xlabel("root departure probability")
    ax.set_ylabel("spreading success probability")
    ax.set_title("Spreading phase transition")
    return _finish(fig, path)


def plot_compare(result: MeanFieldComparison, path: str) -> str:
    p = result.model.dist.p
    states = np.arange(p.size)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    width = 0.4
    ax.bar(states - width / 2, p, width, label="mean-field fixed point")
    if result.sim_histogram is not None:
        ax.bar(states + width / 2, result.sim_histogram, width, label="simulation time average")
        ax.set_title(f"Chunk-count distribution, TV = {result.tv_distance:.4f}")
    else:
        ax.set_title("Chunk-count distribution (simulation died)")
    ax.set_xlabel("chunks held")
    ax.set_ylabel("fraction of peers")
    ax.legend()
    return _finish(fig, path)


def plot_presence_history(history: list[int], k: int, path: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(range(len(history)), history)
    ax.axhline(k, color="grey", lw=0.8)
    ax.set_xlabel("round")
    ax.set_ylabel("distinct chunks present")
    ax.set_ylim(0, k * 1.05)
    ax.set_title("Chunk presence over one trial")
    return _finish(fig, path)

"""Command-line front end: configuration, orchestration, report emission.

Subcommands: simulate, analytic (spreading | bounds | gf | threshold |
steady-state), sweep, compare. Option values resolve with precedence
flags > config file > built-in defaults, and the fully resolved
configuration is echoed in the run manifest that accompanies every
output artifact.

Exit codes: 0 on success (censoring and non-convergence are data, not
failures), 2 on usage or configuration errors, 1 on internal errors.
CHUNKSWARM_MAX_WORKERS caps trial parallelism; unset means all cores.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .analytic import (
    extinction_curve,
    full_bounds_report,
    luck_value,
    spreading_succeeds,
    spreading_threshold,
    spreading_trajectory,
    stationary_equation_residuals,
    steady_state_solve,
)
from .core import ConfigurationError, Scenario, ScenarioConfig
from .engine import Seeding, SeedingKind, run_trial
from .harness import (
    EVENTS,
    crossing_location,
    estimate_event,
    meanfield_vs_simulation,
    success_sweep,
    survival_sweep,
)

WORKERS_ENV = "CHUNKSWARM_MAX_WORKERS"

SCENARIOS = {s.value: s for s in Scenario}
SEEDINGS = {k.value: k for k in SeedingKind}


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 2."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_histogram(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip() != "")


def _parse_values(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip() != "")


def _parse_grid(text: str) -> tuple[float, ...]:
    """start:stop:step inclusive of endpoints within half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"grid needs step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    return tuple(start + i * step for i in range(count))


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable[[str], Any]
    default: Any = None
    required: bool = False
    flag: bool = False
    choices: tuple[str, ...] | None = None
    help: str = ""

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_COMMON = [
    Opt("config", str, help="flat key=value config file; flags override it"),
    Opt("out", str, help="write the JSON/CSV report here instead of stdout"),
    Opt("force", _parse_bool, default=False, flag=True, help="overwrite existing outputs"),
    Opt("plot", _parse_bool, default=False, flag=True, help="render a PNG figure next to the output"),
]

OPTION_TABLES: dict[tuple[str, ...], list[Opt]] = {
    ("simulate",): _COMMON
    + [
        Opt("scenario", str, required=True, choices=tuple(SCENARIOS), help="protocol to run"),
        Opt("peers", int, default=100, help="number of nodes n"),
        Opt("chunks", int, required=True, help="number of chunks k"),
        Opt("roots", int, default=1, help="initial root count"),
        Opt("alpha", float, default=0.0, help="peer departure probability"),
        Opt("alpha-r", float, help="full-node departure probability (default alpha)"),
        Opt("max-rounds", int, default=10000, help="round horizon"),
        Opt("seed", int, default=0, help="master seed"),
        Opt("seeding", str, choices=tuple(SEEDINGS), help="initial state rule (default per scenario)"),
        Opt("histogram", _parse_histogram, help="k+1 comma-separated peer counts for explicit seeding"),
        Opt("trials", int, default=1, help="trial count; >1 estimates an event probability"),
        Opt("event", str, choices=tuple(EVENTS), help="event to estimate (default per scenario)"),
        Opt("trajectory", str, help="CSV path for the per-round presence trace (single trial)"),
    ],
    ("analytic", "spreading"): _COMMON
    + [
        Opt("roots", int, required=True),
        Opt("chunks", int, required=True),
        Opt("alpha-r", float, required=True),
        Opt("t-max", int, default=200),
        Opt("csv", str, help="CSV path for the full trajectory"),
    ],
    ("analytic", "threshold"): _COMMON
    + [
        Opt("roots", int, required=True),
        Opt("chunks", int, required=True),
    ],
    ("analytic", "bounds"): _COMMON
    + [
        Opt("peers", int, required=True),
        Opt("chunks", int, required=True),
    ],
    ("analytic", "gf"): _COMMON
    + [
        Opt("t-max", int, required=True),
        Opt("csv", str, help="CSV path for the extinction curve"),
    ],
    ("analytic", "steady-state"): _COMMON
    + [
        Opt("chunks", int, required=True),
        Opt("alpha", float, required=True),
        Opt("alpha-r", float),
        Opt("luck", float, help="service probability (default asymptotic 1 - 1/e)"),
        Opt("luck-peers", int, help="use the finite-population service probability for this n"),
        Opt("tol", float, default=1e-12),
        Opt("max-iter", int, default=200000),
        Opt("damping", float, default=0.5),
    ],
    ("sweep",): _COMMON
    + [
        Opt("scenario", str, required=True, choices=("matching", "spreading")),
        Opt("axis", str, choices=("alpha", "alpha-r"), help="parameter to sweep (default per scenario)"),
        Opt("grid", str, help="start:stop:step axis values"),
        Opt("values", _parse_values, help="explicit comma-separated axis values"),
        Opt("trials", int, default=100),
        Opt("peers", int, default=100),
        Opt("chunks", int, required=True),
        Opt("roots", int, default=1),
        Opt("alpha", float, default=0.0),
        Opt("alpha-r", float),
        Opt("max-rounds", int, default=10000),
        Opt("seed", int, default=0),
        Opt("seeding", str, choices=tuple(SEEDINGS)),
    ],
    ("compare",): _COMMON
    + [
        Opt("chunks", int, required=True),
        Opt("alpha", float, required=True),
        Opt("alpha-r", float),
        Opt("peers", int, required=True),
        Opt("rounds", int, required=True, help="total rounds including burn-in"),
        Opt("burn-in", int, help="rounds discarded before averaging (default 10k)"),
        Opt("seed", int, default=0),
        Opt("luck", float),
        Opt("luck-peers", int),
        Opt("tol", float, default=1e-12),
    ],
}


def _fmt(x: Any) -> str:
    """CSV cell formatting; floats carry 17 significant digits."""
    if isinstance(x, float):
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def _json_default(obj: Any) -> Any:
    raise TypeError(f"not JSON serialisable: {obj!r}")


def _json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, default=_json_default, allow_nan=False) + "\n").encode()


def _num_or_none(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return x


def parse_config_file(path: str) -> list[tuple[int, str, str]]:
    """Flat key = value lines, UTF-8; '#' starts a comment."""
    entries = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        entries.append((lineno, key, value))
    return entries


def resolve_options(opts: list[Opt], args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, config file and flags (flags win)."""
    by_name = {o.name: o for o in opts}
    resolved = {o.dest: o.default for o in opts}

    config_path = getattr(args, "config", None)
    if config_path:
        for lineno, key, value in parse_config_file(config_path):
            opt = by_name.get(key)
            if opt is None:
                raise UsageError(f"{config_path}:{lineno}: unknown key {key!r}")
            try:
                parsed = opt.type(value)
            except ValueError as exc:
                raise UsageError(f"{config_path}:{lineno}: bad value for {key!r}: {exc}") from exc
            if opt.choices is not None and str(parsed) not in opt.choices:
                raise UsageError(
                    f"{config_path}:{lineno}: {key!r} must be one of {', '.join(opt.choices)}"
                )
            resolved[opt.dest] = parsed

    for opt in opts:
        value = getattr(args, opt.dest, None)
        if value is not None:
            resolved[opt.dest] = value

    for opt in opts:
        if opt.required and resolved[opt.dest] is None:
            raise UsageError(f"missing required option --{opt.name}")
    return resolved


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chunkswarm",
        description="Peer-to-peer chunk dissemination simulator and analytic swarm-lifespan models",
    )
    parser.add_argument("--version", action="version", version=f"chunkswarm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_options(p: argparse.ArgumentParser, opts: list[Opt]) -> None:
        for opt in opts:
            if opt.flag:
                p.add_argument(f"--{opt.name}", dest=opt.dest, action="store_true", default=None, help=opt.help)
            else:
                p.add_argument(
                    f"--{opt.name}",
                    dest=opt.dest,
                    type=opt.type,
                    default=None,
                    choices=opt.choices,
                    help=opt.help,
                )

    add_options(sub.add_parser("simulate", help="run trials of one scenario"), OPTION_TABLES[("simulate",)])

    analytic = sub.add_parser("analytic", help="closed-form models and solvers")
    asub = analytic.add_subparsers(dest="analytic_command", required=True)
    for name in ("spreading", "threshold", "bounds", "gf", "steady-state"):
        add_options(asub.add_parser(name), OPTION_TABLES[("analytic", name)])

    add_options(sub.add_parser("sweep", help="sweep one parameter over a grid"), OPTION_TABLES[("sweep",)])
    add_options(sub.add_parser("compare", help="mean-field fixed point versus simulation"), OPTION_TABLES[("compare",)])
    return parser


def resolve_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        workers = int(raw)
    except ValueError as exc:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1, got {workers}")
    return workers


# ---------------------------------------------------------------------------
# output plumbing


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="microseconds")


def manifest_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".manifest.json")


class Emitter:
    """Collects the manifest and writes report artifacts consistently."""

    def __init__(self, command: Sequence[str], argv: Sequence[str], resolved: dict[str, Any]) -> None:
        self.started = _utcnow()
        config = {
            k.replace("_", "-"): (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(resolved.items())
            if k not in ("config", "out", "force", "plot", "csv", "trajectory")
        }
        self.manifest = {
            "kind": "manifest",
            "tool": "chunkswarm",
            "tool_version": __version__,
            "command": " ".join(command),
            "argv": list(argv),
            "seed": resolved.get("seed"),
            "config": config,
            "started": self.started,
            "finished": None,
        }
        self.force = bool(resolved.get("force"))
        self.artifacts: list[str] = []

    def check_target(self, path: str) -> None:
        if Path(path).exists() and not self.force:
            raise UsageError(f"refusing to overwrite {path}; pass --force to allow it")

    def note_figure(self, path: str) -> None:
        self.artifacts.append(path)

    def write_json(self, doc: dict, out: str | None) -> None:
        if out is None:
            doc = dict(doc)
            doc["manifest"] = self._finished_manifest()
            sys.stdout.write(_json_bytes(doc).decode())
            if self.artifacts:  # file artifacts still get a manifest file
                self._write_manifest(self.artifacts[0])
            return
        self.check_target(out)
        Path(out).write_bytes(_json_bytes(doc))
        self.artifacts.append(out)
        self._write_manifest(out)

    def write_csv(self, header: list[str], rows: list[list[Any]], path: str) -> None:
        self.check_target(path)
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.artifacts.append(path)

    def _finished_manifest(self) -> dict:
        m = dict(self.manifest)
        m["finished"] = _utcnow()
        m["artifacts"] = list(self.artifacts)
        return m

    def _write_manifest(self, out: str) -> None:
        mpath = manifest_path(out)
        if mpath.exists() and not self.force:
            raise UsageError(f"refusing to overwrite {mpath}; pass --force to allow it")
        mpath.write_bytes(_json_bytes(self._finished_manifest()))


# ---------------------------------------------------------------------------
# subcommand implementations


def _scenario_config(r: dict[str, Any]) -> ScenarioConfig:
    return ScenarioConfig(
        n=r["peers"],
        k=r["chunks"],
        scenario=SCENARIOS[r["scenario"]],
        alpha=r["alpha"],
        alpha_r=r["alpha_r"],
        roots=r["roots"],
        max_rounds=r["max_rounds"],
        seed=r["seed"],
    )


def _seeding(r: dict[str, Any]) -> Seeding | None:
    name = r.get("seeding")
    if name is None:
        return None
    kind = SEEDINGS[name]
    if kind is SeedingKind.EXPLICIT_HISTOGRAM:
        if r.get("histogram") is None:
            raise UsageError("explicit-histogram seeding needs --histogram")
        return Seeding(kind, tuple(r["histogram"]))
    return Seeding(kind)


def _resolve_luck(r: dict[str, Any]) -> float | None:
    if r.get("luck") is not None and r.get("luck_peers") is not None:
        raise UsageError("pass either --luck or --luck-peers, not both")
    if r.get("luck") is not None:
        return r["luck"]
    if r.get("luck_peers") is not None:
        return luck_value(r["luck_peers"])
    return None


def cmd_simulate(r: dict[str, Any], em: Emitter) -> None:
    cfg = _scenario_config(r)
    seeding = _seeding(r)
    if r["trials"] > 1:
        event = r["event"] or ("spread-succeeded" if cfg.scenario is Scenario.SPREADING else "died")
        est = estimate_event(cfg, seeding, EVENTS[event], r["trials"], cfg.seed, resolve_workers())
        doc = {
            "kind": "estimate",
            "scenario": r["scenario"],
            "event": event,
            "mean": est.mean,
            "stderr": est.stderr,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "trials": est.trials,
            "seed": est.seed,
        }
        em.write_json(doc, r["out"])
        return

    record = r["trajectory"] is not None or r["plot"]
    report = run_trial(cfg, seeding, record_presence=record)
    doc = {
        "kind": "trial-report",
        "scenario": r["scenario"],
        "survival_time": report.survival_time,
        "censored": report.censored,
        "spread_succeeded": report.spread_succeeded,
        "downloads_completed": report.downloads_completed,
        "final_histogram": list(report.final_histogram),
        "seed": cfg.seed,
    }
    if r["trajectory"]:
        rows = [[t, p, cfg.k - p] for t, p in enumerate(report.presence_history)]
        em.write_csv(["round", "distinct_present", "missing"], rows, r["trajectory"])
        doc["trajectory_csv"] = r["trajectory"]
    if r["plot"]:
        from . import plotting

        target = Path(r["trajectory"] or r["out"] or "trial").with_suffix(".png")
        em.check_target(str(target))
        doc["figure"] = plotting.plot_presence_history(list(report.presence_history), cfg.k, str(target))
        em.note_figure(doc["figure"])
    em.write_json(doc, r["out"])


def cmd_analytic_spreading(r: dict[str, Any], em: Emitter) -> None:
    traj = spreading_trajectory(r["roots"], r["chunks"], r["alpha_r"], r["t_max"])
    threshold = spreading_threshold(r["roots"], r["chunks"])
    doc = {
        "kind": "spreading-trajectory",
        "roots": r["roots"],
        "chunks": r["chunks"],
        "alpha_r": r["alpha_r"],
        "t_max": r["t_max"],
        "threshold": threshold,
        "succeeds": spreading_succeeds(r["roots"] / r["chunks"], r["alpha_r"]),
        "final_expected_roots": traj.expected_roots[-1],
        "final_expected_undispatched": traj.expected_undispatched[-1],
    }
    if r["csv"]:
        rows = [
            [t, er, ek, (ratio if math.isfinite(ratio) else "inf")]
            for t, (er, ek, ratio) in enumerate(
                zip(traj.expected_roots, traj.expected_undispatched, traj.ratio)
            )
        ]
        em.write_csv(["round", "expected_roots", "expected_undispatched", "ratio"], rows, r["csv"])
        doc["csv"] = r["csv"]
    if r["plot"]:
        from . import plotting

        target = str(Path(r["csv"] or r["out"] or "spreading").with_suffix(".png"))
        em.check_target(target)
        doc["figure"] = plotting.plot_spreading_trajectory(traj, target)
        em.note_figure(doc["figure"])
    em.write_json(doc, r["out"])


def cmd_analytic_threshold(r: dict[str, Any], em: Emitter) -> None:
    em.write_json(
        {
            "kind": "threshold",
            "roots": r["roots"],
            "chunks": r["chunks"],
            "threshold": spreading_threshold(r["roots"], r["chunks"]),
        },
        r["out"],
    )


def cmd_analytic_bounds(r: dict[str, Any], em: Emitter) -> None:
    b = full_bounds_report(r["peers"], r["chunks"])
    doc = {"kind": "bounds"}
    doc.update(dataclasses.asdict(b))
    em.write_json(doc, r["out"])


def cmd_analytic_gf(r: dict[str, Any], em: Emitter) -> None:
    curve = extinction_curve(r["t_max"])
    t_max = r["t_max"]
    final_survival = 1.0 - float(curve[-1])
    doc = {
        "kind": "extinction-curve",
        "t_max": t_max,
        "final_extinction": float(curve[-1]),
        "final_survival": final_survival,
        "t_times_survival_final": t_max * final_survival,
    }
    if r["csv"]:
        rows = [
            [t, float(f), 1.0 - float(f), t * (1.0 - float(f))]
            for t, f in enumerate(curve)
        ]
        em.write_csv(
            ["t", "extinction_probability", "survival_probability", "t_times_survival"],
            rows,
            r["csv"],
        )
        doc["csv"] = r["csv"]
    if r["plot"]:
        from . import plotting

        target = str(Path(r["csv"] or r["out"] or "extinction").with_suffix(".png"))
        em.check_target(target)
        doc["figure"] = plotting.plot_extinction_curve(curve, target)
        em.note_figure(doc["figure"])
    em.write_json(doc, r["out"])


def cmd_analytic_steady_state(r: dict[str, Any], em: Emitter) -> None:
    model = steady_state_solve(
        r["chunks"],
        r["alpha"],
        luck=_resolve_luck(r),
        tol=r["tol"],
        max_iter=r["max_iter"],
        damping=r["damping"],
        alpha_r=r["alpha_r"],
    )
    literal = stationary_equation_residuals(model.dist, model.alpha, model.luck)
    doc = {
        "kind": "steady-state",
        "chunks": model.k,
        "alpha": model.alpha,
        "alpha_r": model.alpha_r,
        "luck": model.luck,
        "converged": model.converged,
        "residual": model.residual,
        "iterations": model.iterations,
        "p": model.dist.p.tolist(),
        "mean_chunks": model.dist.mean_count(),
        "literal_equation_residuals": literal.tolist(),
    }
    em.write_json(doc, r["out"])


def cmd_sweep(r: dict[str, Any], em: Emitter) -> None:
    if r["out"] is None:
        raise UsageError("sweep writes CSV; --out is required")
    if (r["grid"] is None) == (r["values"] is None):
        raise UsageError("pass exactly one of --grid or --values")
    grid = _parse_grid(r["grid"]) if r["grid"] is not None else tuple(r["values"])
    if not grid:
        raise UsageError("sweep grid is empty")
    workers = resolve_workers()
    seeding = _seeding(r)

    if r["scenario"] == "matching":
        axis = r["axis"] or "alpha"
        if axis != "alpha":
            raise UsageError("matching sweeps run over --axis alpha")
        cfg = _scenario_config({**r, "scenario": "matching"})
        result = survival_sweep(cfg, grid, r["trials"], r["seed"], seeding, workers)
        header = ["alpha", "trials", "deaths", "censored", "median_survival", "mean_survival_uncensored"]
        rows = [
            [s.alpha, s.trials, s.deaths, s.censored, s.median_survival, s.mean_survival_uncensored]
            for s in result.rows
        ]
        em.write_csv(header, rows, r["out"])
        doc = {
            "kind": "sweep-summary",
            "scenario": "matching",
            "axis": "alpha",
            "grid": list(grid),
            "rows": len(rows),
            "csv": r["out"],
            "median_survival": [_num_or_none(s.median_survival) for s in result.rows],
            "censored": [s.censored for s in result.rows],
        }
        if r["plot"]:
            from . import plotting
            from .analytic import matching_survival_threshold

            target = str(Path(r["out"]).with_suffix(".png"))
            em.check_target(target)
            doc["figure"] = plotting.plot_survival_sweep(
                list(result.rows), target, matching_survival_threshold()
            )
            em.note_figure(doc["figure"])
    else:
        axis = r["axis"] or "alpha-r"
        if axis != "alpha-r":
            raise UsageError("spreading sweeps run over --axis alpha-r")
        cfg = _scenario_config({**r, "scenario": "spreading", "alpha_r": None})
        result = success_sweep(cfg, grid, r["trials"], r["seed"], seeding, workers)
        header = ["alpha_r", "trials", "successes", "mean", "stderr", "ci_low", "ci_high"]
        rows = [
            [g, e.trials, round(e.mean * e.trials), e.mean, e.stderr, e.ci_low, e.ci_high]
            for g, e in zip(grid, result.rows)
        ]
        em.write_csv(header, rows, r["out"])
        threshold = spreading_threshold(r["roots"], r["chunks"])
        doc = {
            "kind": "sweep-summary",
            "scenario": "spreading",
            "axis": "alpha-r",
            "grid": list(grid),
            "rows": len(rows),
            "csv": r["out"],
            "success_probability": [e.mean for e in result.rows],
            "analytic_threshold": threshold,
            "crossing_50pct": crossing_location(grid, [e.mean for e in result.rows]),
        }
        if r["plot"]:
            from . import plotting

            target = str(Path(r["out"]).with_suffix(".png"))
            em.check_target(target)
            doc["figure"] = plotting.plot_success_sweep(list(grid), list(result.rows), target, threshold)
            em.note_figure(doc["figure"])
    em.write_json(doc, None if r["out"] is None else str(Path(r["out"]).with_suffix(".json")))


def cmd_compare(r: dict[str, Any], em: Emitter) -> None:
    result = meanfield_vs_simulation(
        k=r["chunks"],
        alpha=r["alpha"],
        n=r["peers"],
        rounds=r["rounds"],
        master_seed=r["seed"],
        burn_in=r["burn_in"],
        alpha_r=r["alpha_r"],
        luck=_resolve_luck(r),
        tol=r["tol"],
    )
    doc = {
        "kind": "compare",
        "chunks": r["chunks"],
        "alpha": r["alpha"],
        "alpha_r": result.model.alpha_r,
        "peers": r["peers"],
        "rounds": r["rounds"],
        "burn_in": result.burn_in,
        "rounds_averaged": result.rounds_averaged,
        "died": result.died,
        "death_round": result.death_round,
        "tv_distance": result.tv_distance,
        "solver_converged": result.model.converged,
        "solver_residual": result.model.residual,
        "luck": result.model.luck,
        "mf_p": result.model.dist.p.tolist(),
        "sim_p": list(result.sim_histogram) if result.sim_histogram is not None else None,
    }
    if r["plot"]:
        from . import plotting

        target = str(Path(r["out"] or "compare").with_suffix(".png"))
        em.check_target(target)
        doc["figure"] = plotting.plot_compare(result, target)
        em.note_figure(doc["figure"])
    em.write_json(doc, r["out"])


COMMANDS: dict[tuple[str, ...], Callable[[dict[str, Any], Emitter], None]] = {
    ("simulate",): cmd_simulate,
    ("analytic", "spreading"): cmd_analytic_spreading,
    ("analytic", "threshold"): cmd_analytic_threshold,
    ("analytic", "bounds"): cmd_analytic_bounds,
    ("analytic", "gf"): cmd_analytic_gf,
    ("analytic", "steady-state"): cmd_analytic_steady_state,
    ("sweep",): cmd_sweep,
    ("compare",): cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    command = (args.command,) if args.command != "analytic" else ("analytic", args.analytic_command)
    try:
        resolved = resolve_options(OPTION_TABLES[command], args)
        emitter = Emitter(command, argv, resolved)
        COMMANDS[command](resolved, emitter)
    except (UsageError, ConfigurationError) as exc:
        print(f"chunkswarm: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # internal failure
        print(f"chunkswarm: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

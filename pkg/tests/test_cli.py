"""Command-line surface: flags, config files, outputs, schema validation."""

import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "src/chunkswarm/schemas/chunkswarm.schema.json").read_text()
)
VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def run_cli(args, cwd, workers="1"):
    return subprocess.run(
        [sys.executable, "-m", "chunkswarm", *args],
        cwd=cwd,
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "CHUNKSWARM_MAX_WORKERS": workers},
    )


def check_doc(doc):
    VALIDATOR.validate(doc)
    if "manifest" in doc:
        VALIDATOR.validate(doc["manifest"])


def load_stdout(proc):
    doc = json.loads(proc.stdout)
    check_doc(doc)
    return doc


def test_missing_required_flag_exits_2(tmp_path):
    proc = run_cli(["simulate", "--scenario", "matching"], tmp_path)
    assert proc.returncode == 2
    assert "--chunks" in proc.stderr


def test_unknown_config_key_is_line_numbered(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("roots = 20\nbogus-key = 1\n")
    proc = run_cli(["analytic", "threshold", "--config", str(cfg), "--chunks", "200"], tmp_path)
    assert proc.returncode == 2
    assert f"{cfg}:2" in proc.stderr
    assert "bogus-key" in proc.stderr


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\nt-max = 3\n")
    doc = load_stdout(run_cli(["analytic", "gf", "--config", str(cfg)], tmp_path))
    assert doc["t_max"] == 3
    doc = load_stdout(run_cli(["analytic", "gf", "--config", str(cfg), "--t-max", "1"], tmp_path))
    assert doc["t_max"] == 1
    assert doc["final_extinction"] == 0.25


def test_threshold_command(tmp_path):
    doc = load_stdout(run_cli(["analytic", "threshold", "--roots", "20", "--chunks", "200"], tmp_path))
    assert doc["threshold"] == pytest.approx(0.095163, abs=1e-6)


def test_bounds_command(tmp_path):
    doc = load_stdout(run_cli(["analytic", "bounds", "--peers", "9", "--chunks", "1"], tmp_path))
    assert doc["stirling_bound_holds"] is True
    assert doc["stirling_bound"] >= doc["exact_missing_one_chunk"]
    doc = load_stdout(run_cli(["analytic", "bounds", "--peers", "3", "--chunks", "1"], tmp_path))
    assert doc["stirling_bound_holds"] is False


def test_gf_command_writes_curve_csv(tmp_path):
    out = tmp_path / "gf.csv"
    doc = load_stdout(
        run_cli(["analytic", "gf", "--t-max", "1000", "--csv", str(out)], tmp_path)
    )
    assert doc["t_times_survival_final"] == pytest.approx(3.9616, abs=1e-3)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,extinction_probability,survival_probability,t_times_survival"
    assert len(lines) == 1002
    last = lines[-1].split(",")
    assert float(last[3]) == pytest.approx(3.961632022398298, rel=1e-12)


def test_steady_state_command(tmp_path):
    doc = load_stdout(
        run_cli(["analytic", "steady-state", "--chunks", "1", "--alpha", "0.05"], tmp_path)
    )
    assert doc["converged"] is True
    assert doc["p"][0] == pytest.approx(0.0833, abs=1e-3)
    assert len(doc["literal_equation_residuals"]) == 2


def test_spreading_trajectory_command(tmp_path):
    csv = tmp_path / "traj.csv"
    doc = load_stdout(
        run_cli(
            ["analytic", "spreading", "--roots", "20", "--chunks", "200",
             "--alpha-r", "0.05", "--t-max", "40", "--csv", str(csv)],
            tmp_path,
        )
    )
    assert doc["succeeds"] is True
    rows = csv.read_text().splitlines()
    assert rows[0] == "round,expected_roots,expected_undispatched,ratio"
    assert len(rows) == 42
    assert float(rows[1].split(",")[1]) == 20.0


def test_simulate_single_trial_with_trajectory(tmp_path):
    traj = tmp_path / "run.csv"
    doc = load_stdout(
        run_cli(
            ["simulate", "--scenario", "matching", "--peers", "40", "--chunks", "4",
             "--alpha", "0.5", "--max-rounds", "500", "--seed", "3",
             "--trajectory", str(traj)],
            tmp_path,
        )
    )
    assert doc["kind"] == "trial-report"
    assert doc["censored"] is False
    assert sum(doc["final_histogram"]) == 40
    lines = traj.read_text().splitlines()
    assert lines[0] == "round,distinct_present,missing"
    assert len(lines) == doc["survival_time"] + 2  # header + rounds 0..T


def test_simulate_estimate_mode(tmp_path):
    doc = load_stdout(
        run_cli(
            ["simulate", "--scenario", "spreading", "--roots", "20", "--chunks", "200",
             "--alpha-r", "0.05", "--trials", "100", "--seed", "7"],
            tmp_path,
            workers="2",
        )
    )
    assert doc["kind"] == "estimate"
    assert doc["event"] == "spread-succeeded"
    assert doc["mean"] > 0.9
    assert doc["trials"] == 100


def test_sweep_row_count_and_summary(tmp_path):
    out = tmp_path / "sweep.csv"
    proc = run_cli(
        ["sweep", "--scenario", "matching", "--grid", "0.0:0.6:0.05", "--trials", "3",
         "--peers", "16", "--chunks", "2", "--max-rounds", "30", "--seed", "1",
         "--out", str(out)],
        tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    lines = out.read_text().splitlines()
    assert len(lines) == 14  # header + 13 grid points
    assert lines[0] == "alpha,trials,deaths,censored,median_survival,mean_survival_uncensored"
    summary = json.loads(out.with_suffix(".json").read_text())
    check_doc(summary)
    assert summary["rows"] == 13
    manifest = json.loads(out.with_suffix("").with_name("sweep.manifest.json").read_text())
    check_doc(manifest)
    assert manifest["config"]["seed"] == 1


def test_sweep_empty_grid_exits_2(tmp_path):
    proc = run_cli(
        ["sweep", "--scenario", "matching", "--values", ",", "--chunks", "2",
         "--out", str(tmp_path / "s.csv")],
        tmp_path,
    )
    assert proc.returncode == 2


def test_sweep_refuses_overwrite_without_force(tmp_path):
    out = tmp_path / "sweep.csv"
    args = ["sweep", "--scenario", "matching", "--values", "0.5", "--trials", "2",
            "--peers", "10", "--chunks", "2", "--max-rounds", "20", "--seed", "1",
            "--out", str(out)]
    assert run_cli(args, tmp_path).returncode == 0
    proc = run_cli(args, tmp_path)
    assert proc.returncode == 2
    assert "refusing to overwrite" in proc.stderr
    assert run_cli(args + ["--force"], tmp_path).returncode == 0


def test_spreading_sweep_reports_crossing(tmp_path):
    out = tmp_path / "phase.csv"
    proc = run_cli(
        ["sweep", "--scenario", "spreading", "--grid", "0.05:0.15:0.05", "--trials", "40",
         "--roots", "20", "--chunks", "200", "--seed", "11", "--out", str(out)],
        tmp_path,
        workers="2",
    )
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(out.with_suffix(".json").read_text())
    check_doc(summary)
    assert summary["analytic_threshold"] == pytest.approx(0.095163, abs=1e-6)
    assert summary["success_probability"][0] > 0.9
    assert summary["success_probability"][-1] < 0.1


def test_compare_command(tmp_path):
    out = tmp_path / "cmp.json"
    proc = run_cli(
        ["compare", "--chunks", "2", "--alpha", "0.05", "--peers", "200",
         "--rounds", "200", "--seed", "5", "--out", str(out)],
        tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(out.read_text())
    check_doc(doc)
    assert doc["died"] is False
    assert doc["tv_distance"] < 0.1
    assert doc["solver_converged"] is True
    assert len(doc["mf_p"]) == 3


def test_plot_outputs_are_written(tmp_path):
    csv = tmp_path / "gf.csv"
    doc = load_stdout(
        run_cli(["analytic", "gf", "--t-max", "200", "--csv", str(csv), "--plot"], tmp_path)
    )
    figure = Path(doc["figure"])
    assert figure.exists()
    assert figure.suffix == ".png"
    assert figure.stat().st_size > 1000


def test_simulate_explicit_histogram_seeding(tmp_path):
    doc = load_stdout(
        run_cli(
            ["simulate", "--scenario", "matching", "--peers", "6", "--chunks", "2",
             "--alpha", "0.0", "--max-rounds", "5", "--seed", "2",
             "--seeding", "explicit-histogram", "--histogram", "3,2,1"],
            tmp_path,
        )
    )
    assert doc["censored"] is True
    assert sum(doc["final_histogram"]) == 6
    # histogram flag is required with that seeding
    proc = run_cli(
        ["simulate", "--scenario", "matching", "--peers", "6", "--chunks", "2",
         "--seeding", "explicit-histogram"],
        tmp_path,
    )
    assert proc.returncode == 2
    assert "--histogram" in proc.stderr


def test_internal_error_paths_exit_2_on_bad_values(tmp_path):
    proc = run_cli(
        ["simulate", "--scenario", "matching", "--peers", "1", "--chunks", "2"], tmp_path
    )
    assert proc.returncode == 2
    assert "at least 2 peers" in proc.stderr


def test_version_flag(tmp_path):
    proc = run_cli(["--version"], tmp_path)
    assert proc.returncode == 0
    assert "chunkswarm" in proc.stdout

"""End-to-end checks for the command-line front end.

Each test drives cli.main() in process and inspects the one-line summary,
the exit status, and the CSV/JSON artifacts. A single subprocess test
covers the installed console script itself.
"""

import json
import os
import shutil
import subprocess

import pytest

from flagint import cli
from flagint.atoms import atom_to_json, signum_atom_at_scale


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    # a stray seed override would silently rename every artifact below
    monkeypatch.delenv("FLAGINT_SEED", raising=False)


def run_cli(capsys, *argv):
    status = cli.main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def read_artifacts(out_dir, experiment, seed=0):
    base = os.path.join(str(out_dir), f"{experiment}-{seed}")
    with open(base + ".csv", "r", encoding="utf-8", newline="") as fh:
        csv_text = fh.read()
    with open(base + ".json", "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return csv_text, payload


# ---------------------------------------------------------------------------
# check


def test_check_formula_two_satisfied(tmp_path, capsys):
    status, out, err = run_cli(
        capsys, "check", "--alpha", "9/10", "--beta", "3/10", "--q", "2",
        "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == "formula-two: SATISFIED"
    assert err.startswith("wrote ")
    csv_text, payload = read_artifacts(tmp_path, "check")
    assert "formula-two,true,,SATISFIED," in csv_text
    assert payload["metadata"]["derived"] == {"a": "1/2", "b": "1/2"}


def test_check_reports_both_formulas_when_p_given(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "check", "--alpha", "9/10", "--beta", "3/10",
        "--p", "1", "--q", "2", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == "formula-one: SATISFIED; formula-two: SATISFIED"
    _, payload = read_artifacts(tmp_path, "check")
    assert payload["row_count"] == 2


def test_check_critical_pair_fails_strict_condition(tmp_path, capsys):
    # alpha/n == beta/m satisfies the weak form but not the strict one
    status, out, _ = run_cli(
        capsys, "check", "--alpha", "1/2", "--beta", "1/2",
        "--p", "1", "--q", "2", "--out", str(tmp_path),
    )
    assert status == 2
    assert out.strip() == "formula-one: SATISFIED; formula-two: VIOLATED"


def test_check_requires_q(tmp_path, capsys):
    status, _, err = run_cli(
        capsys, "check", "--alpha", "9/10", "--beta", "3/10",
        "--out", str(tmp_path),
    )
    assert status == 1
    assert err.strip() == "usage error: check needs q (and optionally p)"
    assert list(tmp_path.iterdir()) == []


def test_check_rejects_beta_at_endpoint(tmp_path, capsys):
    status, _, err = run_cli(
        capsys, "check", "--alpha", "9/10", "--beta", "1", "--q", "2",
        "--out", str(tmp_path),
    )
    assert status == 1
    assert err.strip() == "error: beta must lie in (0, m)=(0,1), got 1"
    assert list(tmp_path.iterdir()) == []


# ---------------------------------------------------------------------------
# kernel


def test_kernel_point_value_and_artifacts(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "kernel", "--x", "2", "--y", "3", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == "kernel value 0.2672612419124244"
    csv_text, payload = read_artifacts(tmp_path, "kernel")
    assert csv_text == (
        "x,y,value,err,label,case\r\n"
        "2.0,3.0,0.2672612419124244,0.0,kernel,\r\n"
    )
    echo = payload["metadata"]["run_config"]
    assert echo["alpha"] == "1/2"
    assert echo["experiment"] == "kernel"
    assert echo["out"] == str(tmp_path)


def test_kernel_missing_coordinate_is_usage_error(tmp_path, capsys):
    status, _, err = run_cli(capsys, "kernel", "--y", "3", "--out", str(tmp_path))
    assert status == 1
    assert err.strip() == "usage error: missing required field 'x' for 'kernel'"


def test_unrecognized_flag_maps_to_exit_one(tmp_path, capsys):
    status, _, err = run_cli(
        capsys, "kernel", "--x", "2", "--y", "3", "--frequency", "9",
    )
    assert status == 1
    assert err.startswith("usage error: ")
    assert "unrecognized" in err


# ---------------------------------------------------------------------------
# config file and environment precedence


def test_config_file_supplies_fields(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "kernel", "x": [2], "y": [3]}))
    status, out, _ = run_cli(
        capsys, "kernel", "--config", str(cfg), "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == "kernel value 0.2672612419124244"


def test_explicit_flag_beats_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "kernel", "x": [2], "y": [3]}))
    status, out, _ = run_cli(
        capsys, "kernel", "--config", str(cfg), "--x", "3",
        "--out", str(tmp_path),
    )
    assert status == 0
    # |x|^{-1/2} (|x|^2+|y|)^{-1/2} at (3, 3) is exactly 1/6
    assert out.strip() == "kernel value 0.16666666666666666"


def test_config_file_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "kernel", "wavelength": 5}))
    status, _, err = run_cli(capsys, "kernel", "--config", str(cfg))
    assert status == 1
    assert err.strip() == (
        "usage error: unknown config key 'wavelength' for experiment 'kernel'"
    )


def test_config_file_rejects_experiment_mismatch(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "check"}))
    status, _, err = run_cli(capsys, "kernel", "--config", str(cfg))
    assert status == 1
    assert err.strip() == (
        "usage error: config file declares experiment 'check', "
        "command line says 'kernel'"
    )


def test_config_file_must_hold_an_object(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text("[1, 2]")
    status, _, err = run_cli(capsys, "kernel", "--config", str(cfg))
    assert status == 1
    assert err.strip() == "usage error: config file must hold a JSON object"


def test_seed_env_var_names_artifacts(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLAGINT_SEED", "77")
    status, _, _ = run_cli(
        capsys, "kernel", "--x", "2", "--y", "3", "--out", str(tmp_path),
    )
    assert status == 0
    _, payload = read_artifacts(tmp_path, "kernel", seed=77)
    assert payload["metadata"]["seed"] == 77


def test_seed_flag_beats_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLAGINT_SEED", "77")
    status, _, _ = run_cli(
        capsys, "kernel", "--x", "2", "--y", "3", "--seed", "5",
        "--out", str(tmp_path),
    )
    assert status == 0
    _, payload = read_artifacts(tmp_path, "kernel", seed=5)
    assert payload["metadata"]["seed"] == 5
    assert not (tmp_path / "kernel-77.csv").exists()


def test_seed_env_var_rejects_garbage(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLAGINT_SEED", "xyz")
    status, _, err = run_cli(
        capsys, "kernel", "--x", "2", "--y", "3", "--out", str(tmp_path),
    )
    assert status == 1
    assert err.strip() == "usage error: FLAGINT_SEED must be an integer, got 'xyz'"


def test_jobs_must_be_positive(tmp_path, capsys):
    status, _, err = run_cli(
        capsys, "counterexample", "--radii", "10", "--jobs", "0",
        "--out", str(tmp_path),
    )
    assert status == 1
    assert err.strip() == "usage error: jobs must be >= 1"


# ---------------------------------------------------------------------------
# apply


def test_apply_interior_point_is_unresolved_at_default_cutoff(tmp_path, capsys):
    # the core estimate exceeds the target there, so the run degrades to
    # a flagged row plus exit code 1 instead of a hard failure
    status, out, _ = run_cli(
        capsys, "apply", "--x", "0.5", "--y", "0.25", "--out", str(tmp_path),
    )
    assert status == 1
    assert out.strip() == (
        "operator value 11.418799431244237 +/- 0.02486624605925176 UNRESOLVED"
    )
    csv_text, _ = read_artifacts(tmp_path, "apply")
    assert csv_text.endswith(
        "0.5,0.25,11.418799431244237,0.02486624605925176,"
        "UNRESOLVED,accuracy-error\r\n"
    )


def test_apply_exterior_point_passes(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "apply", "--x", "10", "--y", "0", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.startswith("operator value ")
    assert "UNRESOLVED" not in out
    csv_text, _ = read_artifacts(tmp_path, "apply")
    assert ",apply,\r\n" in csv_text


# ---------------------------------------------------------------------------
# atom-validate


def test_atom_validate_default_signum(tmp_path, capsys):
    status, out, _ = run_cli(capsys, "atom-validate", "--out", str(tmp_path))
    assert status == 0
    assert out.strip() == "atom VALID (support True, bound True, mean True)"


def test_atom_validate_strict_normalization_fails(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "atom-validate", "--normalization", "strict",
        "--out", str(tmp_path),
    )
    assert status == 2
    assert out.strip() == "atom INVALID (support False, bound False, mean True)"
    # artifacts are still written for failed validations
    _, payload = read_artifacts(tmp_path, "atom-validate")
    assert payload["metadata"]["report"]["bound_ok"] is False


def test_atom_validate_reads_json_file(tmp_path, capsys):
    atom_file = tmp_path / "atom.json"
    atom_file.write_text(atom_to_json(signum_atom_at_scale(1, 1, 1)))
    status, out, _ = run_cli(
        capsys, "atom-validate", "--atom-json", str(atom_file),
        "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == "atom VALID (support True, bound True, mean True)"


# ---------------------------------------------------------------------------
# scan experiments at reduced scale


def test_shells_too_small_a_window_fails_cleanly(tmp_path, capsys):
    # k_max 5 leaves three usable levels past the burn-in; the fit needs four
    status, out, _ = run_cli(
        capsys, "shells", "--k-max", "5", "--l-max", "2", "--jobs", "2",
        "--out", str(tmp_path),
    )
    assert status == 2
    assert "k-slope unavailable (k window too small for a fit)" in out
    assert out.strip().endswith("(FAIL)")
    _, payload = read_artifacts(tmp_path, "shells")
    assert payload["metadata"]["k_fit"] is None
    assert "only 3 usable k-levels" in payload["metadata"]["k_fit_error"]


def test_dilate_identity_holds_at_small_scale(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "dilate", "--payload", "indicator", "--deltas", "0.5,2",
        "--lams", "2", "--jobs", "2", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.startswith("dilate: delta secant ")
    assert out.strip().endswith("(PASS)")
    _, payload = read_artifacts(tmp_path, "dilate")
    assert payload["metadata"]["unresolved_rows"] == 0
    assert abs(payload["metadata"]["delta_secant"]) < 1e-10


def test_counterexample_critical_masses_grow(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "counterexample", "--radii", "10,100", "--jobs", "2",
        "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == (
        "counterexample (critical): increasing True, decade fit ok True (PASS)"
    )


def test_counterexample_noncritical_masses_saturate(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "counterexample", "--alpha", "9/10", "--beta", "3/10",
        "--radii", "10,100,1000", "--jobs", "2", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.startswith("counterexample (noncritical): last-decade increment fraction ")
    assert out.strip().endswith("(PASS)")
    _, payload = read_artifacts(tmp_path, "counterexample")
    assert payload["metadata"]["last_increment_fraction"] < 0.05


def test_frontier_two_by_two_is_diagonal(tmp_path, capsys):
    status, out, _ = run_cli(
        capsys, "frontier", "--alphas", "1/2,9/10", "--betas", "1/2,3/10",
        "--jobs", "4", "--out", str(tmp_path),
    )
    assert status == 0
    assert out.strip() == (
        "frontier: 4 resolved cells, 0 unresolved, 0 off-diagonal (PASS)"
    )
    _, payload = read_artifacts(tmp_path, "frontier")
    echo = payload["metadata"]["run_config"]
    assert echo["alphas"] == ["1/2", "9/10"]
    assert echo["betas"] == ["1/2", "3/10"]


def test_hls_default_run_is_dominated(tmp_path, capsys):
    status, out, _ = run_cli(capsys, "hls", "--out", str(tmp_path))
    assert status == 0
    assert out.startswith("hls: left ")
    assert out.strip().endswith("(PASS)")
    csv_text, payload = read_artifacts(tmp_path, "hls")
    assert ",DOMINATED,\r\n" in csv_text
    report = payload["metadata"]["report"]
    assert report["a"] == "1/2" and report["b"] == "1/2"
    assert report["ok"] is True


# ---------------------------------------------------------------------------
# console script


def test_console_script_runs_check(tmp_path):
    exe = shutil.which("flagint")
    assert exe is not None, "console script should be on PATH after install"
    env = {k: v for k, v in os.environ.items() if k != "FLAGINT_SEED"}
    proc = subprocess.run(
        [exe, "check", "--alpha", "9/10", "--beta", "3/10", "--q", "2"],
        cwd=str(tmp_path), env=env, capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "formula-two: SATISFIED"
    assert (tmp_path / "check-0.csv").exists()

"""End-to-end checks of the command-line surface.

Everything runs in process through ``main(argv)``: exit codes, the three
output formats, report files, figure rendering, and the config-merge
rules.  Heavy knobs are turned down (--grid 512) so the whole file stays
fast; accuracy assertions here are correspondingly loose -- the tight
numerical checks live in the solver test files.
"""

import json
import os

import numpy as np
import pytest

from warptone.cli import main
from warptone.report import parse_record

J01_SQ = 5.783185962946785  # square of the first zero of J_0


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# one-shot tone command


def test_tone_table_stdout(capsys):
    code, out, err = run_cli(["tone", "--b", "2.0", "--grid", "512"], capsys)
    assert code == 0
    assert err == ""
    assert "scenario: cli-tone" in out
    assert "task 1: tone" in out
    assert "lambda* =" in out


def test_tone_json_payload(capsys):
    code, out, _ = run_cli(
        ["tone", "--b", "2.0", "--grid", "512", "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["wall_time"] is None
    (entry,) = payload["results"]
    assert entry["task"] == "tone"
    assert entry["ok"] is True
    # euclidean disk of radius 2: lambda = j_{0,1}^2 / 4
    assert abs(entry["result"]["lambda"] - J01_SQ / 4.0) < 1e-3
    assert len(entry["result"]["profile_t"]) == len(entry["result"]["profile_u"])


def test_tone_csv_schema(capsys):
    code, out, _ = run_cli(
        ["tone", "--b", "2.0", "--grid", "512", "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "a,b,mode_k,mode_j,lambda,err"
    fields = lines[1].split(",")
    assert fields[:4] == ["0.0", "2.0", "0", "0"]
    assert abs(float(fields[4]) - J01_SQ / 4.0) < 1e-3


def test_constant_fiber_leaves_tone_bit_identical(capsys):
    """A constant-psi submersion must reproduce the base tone exactly."""
    base = ["tone", "--b", "2.0", "--grid", "512", "--format", "json"]
    _, out_base, _ = run_cli(base, capsys)
    _, out_warp, _ = run_cli(base + ["--psi", "3.5", "--m", "2"], capsys)
    lam_base = json.loads(out_base)["results"][0]["result"]["lambda"]
    lam_warp = json.loads(out_warp)["results"][0]["result"]["lambda"]
    assert lam_warp == lam_base


def test_out_file_suppresses_stdout(tmp_path, capsys):
    dest = tmp_path / "report.txt"
    code, out, _ = run_cli(
        ["tone", "--b", "2.0", "--grid", "512", "--out", str(dest)], capsys)
    assert code == 0
    assert out == ""
    text = dest.read_text()
    assert "scenario: cli-tone" in text
    assert "lambda* =" in text


def test_json_reports_byte_identical_across_runs(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        code, _, _ = run_cli(["tone", "--b", "2.0", "--grid", "512",
                              "--format", "json", "--out", str(p)], capsys)
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_plot_dir_writes_png_and_lists_paths(tmp_path, capsys):
    figdir = tmp_path / "figs"
    code, out, _ = run_cli(["tone", "--b", "2.0", "--grid", "512",
                            "--plot-dir", str(figdir)], capsys)
    assert code == 0
    png = figdir / "cli-tone_1_tone.png"
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert f"figure: {png}" in out


# ---------------------------------------------------------------------------
# scenario subcommand


def test_scenario_builtin_runs_and_serializes(tmp_path, capsys):
    dest = tmp_path / "run.json"
    code, _, _ = run_cli(["scenario", "baider_minimal",
                          "--format", "json", "--out", str(dest)], capsys)
    assert code == 0
    record = parse_record(dest.read_text())
    kinds = [entry["task"] for entry in record.results]
    assert kinds == ["certify", "certify", "compare", "ess"]
    assert all(entry["ok"] for entry in record.results)
    h_cert = record.results[0]["result"]
    assert h_cert["verdict"] == "certified-to-horizon"
    assert abs(h_cert["bound"] - 5.0625) < 1e-6
    # the small-radius sweep stays finite and must respect the certificate
    ess = record.results[3]["result"]
    assert ess["diverged"] is False
    assert ess["bottom"] >= h_cert["bound"] - 1e-6


def test_scenario_builtin_table_verdicts(tmp_path, capsys):
    dest = tmp_path / "run.txt"
    code, _, _ = run_cli(["scenario", "baider_minimal", "--out", str(dest)], capsys)
    assert code == 0
    text = dest.read_text()
    assert "certified-to-horizon" in text
    assert "5.0625" in text
    assert "essential bottom ~=" in text


def test_scenario_unknown_name_is_validation_error(capsys):
    code, out, err = run_cli(["scenario", "no-such-thing"], capsys)
    assert code == 2
    assert out == ""
    assert "error:" in err
    assert "euclidean" in err  # message lists the builtins


def test_scenario_from_spec_file(tmp_path, capsys):
    spec = {
        "name": "filecase",
        "model": {"f": "euclidean"},
        "tasks": [{"kind": "tone", "params": {"b": 1.0, "grids": [256, 512]}}],
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    code, out, _ = run_cli(["scenario", str(path), "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["scenario"]["name"] == "filecase"
    assert abs(payload["results"][0]["result"]["lambda"] - J01_SQ) < 5e-3


def test_scenario_rejects_malformed_json_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run_cli(["scenario", str(path)], capsys)
    assert code == 2
    assert "valid JSON" in err


# ---------------------------------------------------------------------------
# parse-profile subcommand


def test_parse_profile_shows_derivatives(capsys):
    code, out, _ = run_cli(["parse-profile", "sinh(t)"], capsys)
    assert code == 0
    assert "expression:  sinh(t)" in out
    assert "cosh(t)" in out          # first derivative
    assert out.count("sinh(t)") >= 2  # expression and second derivative


def test_parse_profile_evaluates_at_point(capsys):
    code, out, _ = run_cli(["parse-profile", "sinh(t)", "--at", "1.0"], capsys)
    assert code == 0
    assert repr(float(np.sinh(1.0))) in out
    assert repr(float(np.cosh(1.0))) in out
    assert "log form" in out


def test_parse_profile_syntax_error_exits_2(capsys):
    code, _, err = run_cli(["parse-profile", "t + "], capsys)
    assert code == 2
    assert "error:" in err


# ---------------------------------------------------------------------------
# validation and failure paths


def test_grid_too_small_is_validation_error(capsys):
    code, _, err = run_cli(["tone", "--b", "1.0", "--grid", "8"], capsys)
    assert code == 2
    assert "at least 16" in err


def test_argparse_rejects_missing_required_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tone"])  # --b is required
    assert exc.value.code == 2


def test_runtime_failure_exits_3_and_is_embedded(tmp_path, capsys):
    # G = -1 on a euclidean base: the comparison solution hits a conjugate
    # point before the horizon, which is a task failure, not a config error.
    dest = tmp_path / "fail.csv"
    code, _, _ = run_cli(["compare", "--g", "-1", "--horizon", "4.0",
                          "--format", "csv", "--out", str(dest)], capsys)
    assert code == 3
    text = dest.read_text()
    assert text.startswith("# task compare failed:")
    assert "ConjugatePointError" in text


# ---------------------------------------------------------------------------
# config-file merging


def test_config_model_block_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "model.json"
    cfg.write_text(json.dumps({"model": {"f": "hyperbolic"}}))
    args = ["tone", "--config", str(cfg), "--b", "1.0", "--grid", "512",
            "--format", "json"]

    _, out, _ = run_cli(args, capsys)
    payload = json.loads(out)
    assert payload["scenario"]["model"]["f"] == "hyperbolic"
    lam_hyp = payload["results"][0]["result"]["lambda"]

    _, out, _ = run_cli(args + ["--f", "euclidean"], capsys)
    payload = json.loads(out)
    assert payload["scenario"]["model"]["f"] == "euclidean"
    lam_euc = payload["results"][0]["result"]["lambda"]

    assert abs(lam_euc - J01_SQ) < 5e-3
    assert lam_hyp > lam_euc + 0.1  # curvature -1 raises the small-ball tone


def test_config_accepts_bare_model_dict(tmp_path, capsys):
    cfg = tmp_path / "bare.json"
    cfg.write_text(json.dumps({"f": "euclidean", "n": 3}))
    code, out, _ = run_cli(["tone", "--config", str(cfg), "--b", "1.0",
                            "--grid", "512", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["scenario"]["model"]["n"] == 3


# ---------------------------------------------------------------------------
# remaining subcommands, quick passes


def test_ess_csv_rows(capsys):
    code, out, _ = run_cli(["ess", "--r-values", "8.0", "--max-steps", "2",
                            "--grid", "512", "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "R,R_cut,lambda,err"
    assert len(lines) >= 3  # at least two truncation points behind the header
    first = lines[1].split(",")
    assert float(first[0]) == 8.0
    assert float(first[1]) == 23.0  # R + l0


def test_verify_identities_csv(capsys):
    code, out, _ = run_cli(["verify-identities", "--psi", "exp(-t)", "--m", "1",
                            "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "check,max_residual,argmax_t,pass"
    assert len(lines) == 6  # three identity rows plus the two sign probes
    assert any("sign-plus" in ln for ln in lines)
    assert any("sign-minus" in ln for ln in lines)
    for ln in lines[1:4]:
        assert ln.rstrip().endswith("true")


def test_brooks_table(capsys):
    code, out, _ = run_cli(["brooks", "--f", "hyperbolic", "--r-max", "30"], capsys)
    assert code == 0
    assert "mu_hat" in out
    assert "sigma_ess nonempty (Brooks)" in out

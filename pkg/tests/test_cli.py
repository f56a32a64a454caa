import json

import pytest

from apspread.cli import EXIT_CONFIG, EXIT_INVARIANT, main


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


CONST = {"coefficients": {"a": 1.0, "b": 0.0, "c": 1.0}}
DRIFT_BAD = {"coefficients": {"a": 1.0, "b": 3.0, "c": 1.0}}


def run(tmp_path, task, cfg, *extra):
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / f"out_{task}"
    code = main([task, "--config", str(path), "--out", str(out), "--workers", "1", *extra])
    return code, out


def test_speed_task(tmp_path):
    code, out = run(tmp_path, "speed", CONST)
    assert code == 0
    summ = json.loads((out / "summary.json").read_text())
    assert summ["result"]["omega"] == pytest.approx(2.0, abs=1e-6)
    # every default is echoed
    assert summ["config"]["solver"]["ppw"] == 128 and summ["config"]["L"] == 1.0
    assert (out / "speed_quotient.csv").exists()


def test_validate_reports_and_exits_zero(tmp_path, capsys):
    code, out = run(tmp_path, "validate", DRIFT_BAD)
    assert code == 0
    text = capsys.readouterr().out
    assert "FAIL  spreading" in text and "9" in text
    summ = json.loads((out / "summary.json").read_text())
    assert summ["result"]["all_passed"] is False


def test_invariant_exit_code(tmp_path):
    code, _ = run(tmp_path, "speed", DRIFT_BAD)
    assert code == EXIT_INVARIANT


@pytest.mark.parametrize("cfg", [{}, {"coefficients": {"a": "oops"}}, {**CONST, "solver": {"nope": 1}},
                                 {**CONST, "e": 2}, {**CONST, "L": -1.0}])
def test_config_errors(tmp_path, cfg):
    code, _ = run(tmp_path, "speed", cfg)
    assert code == EXIT_CONFIG


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["speed", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_deterministic_rerun(tmp_path):
    cfg = {"coefficients": {"a": {"constant": 2.0, "terms": [{"frequency": 1.0, "cos_amp": 1.0, "sin_amp": 0.0}]},
                            "c": 1.0}, "p_grid": [0.0, 0.5, 1.0]}
    _, out1 = run(tmp_path, "lambda", cfg)
    first = (out1 / "summary.json").read_text()
    lam1 = (out1 / "lambda.csv").read_text()
    _, out2 = run(tmp_path, "lambda", cfg)
    assert (out2 / "summary.json").read_text() == first
    assert (out2 / "lambda.csv").read_text() == lam1


def test_mean_task(tmp_path):
    cfg = {"functions": {"f": {"constant": 2.0, "terms": [{"frequency": 1.0, "cos_amp": 1.0, "sin_amp": 0.0}]}}}
    code, out = run(tmp_path, "mean", cfg)
    assert code == 0
    res = json.loads((out / "summary.json").read_text())["result"]["f"]
    assert res["mean"] == 2.0 and res["harmonic_mean"] == pytest.approx(3 ** 0.5, abs=1e-9)


def test_limits_via_cli(tmp_path):
    cfg = {"coefficients": {"a": {"constant": 2.0, "terms": [{"frequency": 1.0, "cos_amp": 1.0, "sin_amp": 0.0}]},
                            "c": 1.0}, "L": "zero"}
    code, out = run(tmp_path, "speed", cfg)
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["result"]["omega"] == pytest.approx(2 * 3 ** 0.25, abs=1e-7)


def test_simulate_task(tmp_path):
    cfg = {**CONST, "sim": {"X": 100.0, "nx": 1001, "dt": 0.02, "T": 30.0, "sample_every": 25}}
    code, out = run(tmp_path, "simulate", cfg)
    assert code == 0
    res = json.loads((out / "summary.json").read_text())["result"]
    assert res["usable"] and res["speed_right"] == pytest.approx(2.0, rel=0.05)


def test_ctilde_effect_needs_perturbation(tmp_path):
    code, _ = run(tmp_path, "ctilde-effect", CONST)
    assert code == EXIT_CONFIG


def test_lambda_task_allows_zero_infimum(tmp_path):
    cfg = {"coefficients": {"a": 1.0, "c": {"constant": 1.0, "terms": [{"frequency": 1.0, "cos_amp": 1.0,
                                                                        "sin_amp": 0.0}]}}, "p_grid": [0.0]}
    code, out = run(tmp_path, "lambda", cfg)
    assert code == 0
    code, _ = run(tmp_path, "speed", cfg)
    assert code == EXIT_INVARIANT

import json
import shutil
import subprocess

import pytest

from wmass.cli import ExperimentConfig, convergence_study, main, run
from wmass.errors import ConfigError
from wmass.fields import make_family

F_SCHW = {"family": "f_schwarzschild", "n": 3, "params": {"m": 1.0, "weight": "inverse_r"}}
FLAT = {"family": "flat", "n": 3, "params": {}}
FLAT_W = {"family": "flat_with_weight", "n": 3, "params": {"weight": "inverse_r"}}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(tmp_path, task, doc, *extra):
    out = tmp_path / f"{task}.json"
    code = main([task, "--config", _write(tmp_path, doc), "--out", str(out), *extra])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def test_mass_on_flat_space(tmp_path):
    code, rep = _run(tmp_path, "mass", FLAT)
    assert code == 0
    assert abs(rep["results"]["weighted"]["value"]) < 1e-10
    assert all(a["passed"] for a in rep["assertions"])


def test_mass_with_expected_value(tmp_path):
    doc = {"schema": 1, "task": "mass", "spec": FLAT_W, "task_params": {"expected": -0.5}}
    code, rep = _run(tmp_path, "mass", doc)
    assert code == 0
    assert rep["results"]["weighted"]["value"] == pytest.approx(-0.5, abs=1e-4)


def test_wrong_expectation_fails(tmp_path):
    doc = {"spec": FLAT_W, "task_params": {"expected": 0.0}}
    code, rep = _run(tmp_path, "mass", doc)
    assert code == 1
    assert not all(a["passed"] for a in rep["assertions"])


def test_divergent_mass_exits_nonconverged(tmp_path):
    spec = {"family": "f_schwarzschild", "n": 3,
            "params": {"m": 1.0, "weight": {"type": "power", "a": 1.0, "k": 0.6}}}
    code, rep = _run(tmp_path, "mass", spec)
    assert code == 3
    assert rep is not None and not rep["results"]["weighted"]["converged"]


def test_penrose_on_f_schwarzschild(tmp_path):
    code, rep = _run(tmp_path, "penrose", F_SCHW, "--bracket", "0.2:8")
    assert code == 0
    assert rep["results"]["ratio"] == pytest.approx(1.0, abs=1e-3)
    for key in ("rho_star", "A_f", "m_f", "rhs", "ratio", "certified_outer_minimising",
                "sf_min_on_grid"):
        assert key in rep["results"]


def test_penrose_needs_bracket(tmp_path):
    assert main(["penrose", "--config", _write(tmp_path, F_SCHW)]) == 2


def test_penrose_dimension_limit(tmp_path):
    spec = {"family": "schwarzschild", "n": 8, "params": {"m": 1.0}}
    assert main(["penrose", "--config", _write(tmp_path, spec), "--bracket", "0.2:4"]) == 2


def test_hawking_needs_three_dimensions(tmp_path):
    spec = {"family": "schwarzschild", "n": 4, "params": {"m": 1.0}}
    assert main(["hawking", "--config", _write(tmp_path, spec), "--rho", "1"]) == 2


def test_hawking_at_horizon(tmp_path):
    code, rep = _run(tmp_path, "hawking", F_SCHW, "--rho", "0.5")
    assert code == 0
    assert rep["results"]["hawking_f"] == pytest.approx(1.0, abs=1e-3)


def test_michel_task(tmp_path):
    doc = {"spec": FLAT, "task_params": {"count": 3}}
    code, rep = _run(tmp_path, "michel", doc)
    assert code == 0
    assert rep["results"]["max_pointwise_residual"] < 1e-8


def test_michel_needs_flat(tmp_path):
    assert main(["michel", "--config", _write(tmp_path, F_SCHW)]) == 2


def test_static_check_expectations(tmp_path):
    doc = {"spec": F_SCHW, "task_params": {"potential": "schwarzschild", "expect_static": True}}
    assert _run(tmp_path, "static-check", doc)[0] == 0
    doc = {"spec": FLAT_W, "task_params": {"potential": "one", "expect_static": False}}
    code, rep = _run(tmp_path, "static-check", doc)
    assert code == 0 and rep["results"]["sf_sup"] > 1e-3


def test_check_conformal_writes_csv(tmp_path):
    csv = tmp_path / "res.csv"
    code, rep = _run(tmp_path, "check-conformal", F_SCHW, "--csv", str(csv),
                     "--grid", "annulus:2:20:16")
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0].split(",")[-3:] == ["residual_scalar", "residual_H", "residual_area"]
    assert len(lines) == 17


def test_probe_task(tmp_path):
    doc = {"spec": FLAT_W, "task_params": {"points": [[1.0, 0.0, 0.0]]}}
    code, rep = _run(tmp_path, "probe", doc)
    assert code == 0
    assert rep["results"]["records"][0]["conf_scal"] == pytest.approx(-0.5, abs=1e-12)


@pytest.mark.parametrize("parameter", ["q", "h_fd", "rho0"])
def test_convergence_tasks(tmp_path, parameter):
    spec = F_SCHW if parameter != "q" else {"family": "schwarzschild", "n": 3,
                                           "params": {"m": 1.0}}
    code, rep = _run(tmp_path, "convergence", spec, "--parameter", parameter)
    assert code == 0, rep["assertions"]


def test_convergence_order_for_fd_jets():
    cfg = ExperimentConfig.from_dict(F_SCHW, "convergence")
    rows = convergence_study(cfg, make_family("f_schwarzschild", m=1.0, weight="inverse_r"),
                             "h_fd", [0.04, 0.02, 0.01, 0.005])
    assert all(1.8 <= r[3] <= 2.2 for r in rows[1:])


def test_schwarzschild_mass_error_does_not_grow_with_order():
    cfg = ExperimentConfig.from_dict(
        {"family": "schwarzschild", "n": 3, "params": {"m": 1.0}}, "convergence")
    rows = convergence_study(cfg, make_family("schwarzschild", m=1.0), "q", [8, 16, 24])
    assert rows[-1][1] == pytest.approx(1.0, abs=1e-8)


def test_reports_are_deterministic(tmp_path):
    doc = {"spec": FLAT, "task_params": {"count": 2}}
    a = _run(tmp_path, "michel", doc, "--seed", "3")[1]
    b = _run(tmp_path, "michel", doc, "--seed", "3")[1]
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


@pytest.mark.parametrize("doc", [
    [1, 2],
    {"schema": 2, "spec": FLAT},
    {"task": "mass"},
    {"spec": FLAT, "numerics": {"bogus": 1}},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        run(ExperimentConfig.from_dict(doc, None if isinstance(doc, dict) and "task" in doc
                                       else "mass"))


def test_unreadable_config(tmp_path):
    assert main(["mass", "--config", str(tmp_path / "missing.json")]) == 2


def test_bad_family_parameters(tmp_path):
    spec = {"family": "schwarzschild", "n": 3, "params": {"m": -1.0}}
    assert main(["mass", "--config", _write(tmp_path, spec)]) == 2


@pytest.mark.skipif(shutil.which("wmass") is None, reason="console script not installed")
def test_console_script(tmp_path):
    path = _write(tmp_path, FLAT)
    proc = subprocess.run(["wmass", "mass", "--config", path], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["config"]["task"] == "mass"

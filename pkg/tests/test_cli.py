import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from quasiherm import cli, fockmodel, matops
from quasiherm.brachistochrone import EP_STUDY_COLUMNS


def run_cli(tmp_path, cfg, *extra, name="cfg.json"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return cli.main(["--config", str(path), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_spectrum_json(tmp_path, capsys):
    code = run_cli(tmp_path, {"model": "twolevel", "r": 1, "s": 1, "theta": 0.5236, "command": "spectrum"})
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["E_minus"] == pytest.approx(0.0, abs=1e-5)
    assert doc["E_plus"] == pytest.approx(1.7320508, abs=1e-5)


def test_positional_command_overrides(tmp_path, capsys):
    code = run_cli(tmp_path, {"model": "twolevel", "theta": 0.3, "command": "ep-scan"}, "spectrum")
    assert code == 0 and "E_plus" in json.loads(capsys.readouterr().out)


def test_metric_check_at_ep_exits_2(tmp_path, capsys):
    code = run_cli(tmp_path, {"model": "twolevel", "theta": 1.5708, "command": "metric-check"})
    err = capsys.readouterr().err
    assert code == 2 and "positive-definite" in err


def test_metric_check_oscillator_window_names_gate(tmp_path, capsys):
    code = run_cli(tmp_path, {"model": "oscillator", "z": 0.4, "command": "metric-check"})
    assert code == 2 and "metric-domain" in capsys.readouterr().err


def test_metric_check_pass(tmp_path, capsys):
    code = run_cli(tmp_path, {"model": "oscillator", "z": 0.9, "N": 40, "command": "metric-check"})
    doc = json.loads(capsys.readouterr().out)
    assert code == 0 and doc["certified"] and doc["block"] == 20


@pytest.mark.parametrize("text", ["{bad", "[1, 2]", '{"command": "spectrum"}',
                                  '{"model": "twolevel", "command": "spectrum", "foo": 1}',
                                  '{"model": "twolevel", "command": "spectrum", "omega": 1}',
                                  '{"model": "twolevel", "command": "spectrum", "r": "1"}'])
def test_schema_errors_exit_3(tmp_path, text):
    assert run_cli(tmp_path, text) == 3


def test_missing_config_exit_3(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.json")]) == 3


def test_transition_appends_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    cfg = {"model": "twolevel", "theta": math.pi / 6, "command": "transition",
           "observable": "sigma_x", "n": 0, "m": 1}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    doc = json.loads(capsys.readouterr().out)
    assert "non_observable_operator" in doc["caveat_flags"]
    cfg["observable"] = "Sigma_z"
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    rows = read_csv(out)
    assert rows[0] == cli.TRANSITION_COLUMNS
    assert len(rows) == 3
    assert rows[1][cli.TRANSITION_COLUMNS.index("flags")] == "non_observable_operator"
    assert rows[2][cli.TRANSITION_COLUMNS.index("flags")] == ""


def test_transition_metric_independence_block(tmp_path, capsys):
    cfg = {"model": "oscillator", "z": 0.9, "N": 40, "command": "transition",
           "observable": "O(z)", "n": 0, "m": 2, "poly_coeffs": [1.0, 0.1]}
    assert run_cli(tmp_path, cfg) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metric_independence"]["independent"]


def test_transition_unknown_observable(tmp_path):
    cfg = {"model": "twolevel", "command": "transition", "observable": "spin"}
    assert run_cli(tmp_path, cfg) == 3


def test_ep_scan_columns(tmp_path):
    out = tmp_path / "ep.csv"
    cfg = {"model": "twolevel", "command": "ep-scan",
           "theta_grid": {"start": 0.0, "stop": math.pi / 2, "count": 7}}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    rows = read_csv(out)
    assert rows[0] == cli.EP_SCAN_COLUMNS
    assert [r[-1] for r in rows[1:]] == ["false"] * 6 + ["true"]


def test_brachistochrone_columns(tmp_path):
    out = tmp_path / "b.csv"
    cfg = {"model": "twolevel", "command": "brachistochrone",
           "theta_grid": {"start": 0.2, "stop": 1.5, "count": 4}}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == EP_STUDY_COLUMNS
    k = EP_STUDY_COLUMNS.index("tau_times_gap")
    for r in rows[1:]:
        assert float(r[k]) == pytest.approx(math.pi, abs=1e-5)


def test_brachistochrone_broken_regime_exit_2(tmp_path, capsys):
    cfg = {"model": "twolevel", "r": 2, "theta": 1.2, "command": "brachistochrone"}
    assert run_cli(tmp_path, cfg) == 2


def test_z_sweep_marks_window(tmp_path):
    out = tmp_path / "z.csv"
    cfg = {"model": "oscillator", "command": "sweep", "over": "metric-check",
           "sweep": [{"param": "z", "start": -0.99, "stop": 0.99, "count": 199}]}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    rows = read_csv(out)
    assert rows[0][:2] == ["z", "status"]
    zm, zp = fockmodel.spurious_singularities(fockmodel.OscParams())
    assert len(rows) == 200
    for r in rows[1:]:
        z = float(r[0])
        assert (r[1] == "IllDefinedMetric") == (zm < z < zp)
    raw = out.read_bytes()
    assert b"\r" not in raw


def test_theta_sweep_flags_near_ep(tmp_path):
    out = tmp_path / "th.csv"
    cfg = {"model": "twolevel", "command": "sweep", "over": "ep-scan",
           "sweep": [{"param": "theta", "start": 1.4, "stop": math.pi / 2 - 1e-7, "count": 5}]}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    status = [r[1] for r in read_csv(out)[1:]]
    assert status == ["ok"] * 4 + ["near_defective"]


def test_two_parameter_sweep_never_aborts(tmp_path):
    out = tmp_path / "g.csv"
    cfg = {"model": "twolevel", "command": "sweep", "over": "metric-check",
           "sweep": [{"param": "theta", "start": 0.0, "stop": 1.5, "count": 4},
                     {"param": "gamma", "start": 0.0, "stop": 1.2, "count": 3}]}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    rows = read_csv(out)
    assert len(rows) == 13
    assert "positive-definite" in {r[2] for r in rows[1:]}


def test_empty_sweep_header_only(tmp_path):
    out = tmp_path / "e.csv"
    cfg = {"model": "twolevel", "command": "sweep", "over": "ep-scan",
           "sweep": [{"param": "theta", "start": 0.0, "stop": 1.0, "count": 0}]}
    assert run_cli(tmp_path, cfg, "--output", str(out), "--format", "csv") == 0
    assert out.read_text().count("\n") == 1


def test_sweep_bad_parameter(tmp_path):
    cfg = {"model": "twolevel", "command": "sweep", "over": "ep-scan",
           "sweep": [{"param": "omega", "start": 0.0, "stop": 1.0, "count": 2}]}
    assert run_cli(tmp_path, cfg) == 3


def test_full_precision_and_determinism(tmp_path):
    cfg = {"model": "twolevel", "command": "ep-scan",
           "theta_grid": {"start": 0.1, "stop": 1.0, "count": 5}}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli(tmp_path, cfg, "--output", str(a), "--format", "csv")
    run_cli(tmp_path, cfg, "--output", str(b), "--format", "csv")
    assert a.read_bytes() == b.read_bytes()
    row = read_csv(a)[2]
    theta = float(row[2])
    assert theta == np.linspace(0.1, 1.0, 5)[1]


def test_tolerance_override_env_and_config(tmp_path, capsys, monkeypatch):
    cfg = {"model": "twolevel", "theta": 0.5, "command": "metric-check"}
    run_cli(tmp_path, cfg)
    assert json.loads(capsys.readouterr().out)["tol"] == 1e-10
    monkeypatch.setenv("QUASIH_TOL", "1e-7")
    run_cli(tmp_path, cfg)
    assert json.loads(capsys.readouterr().out)["tol"] == 1e-7
    cfg["tolerances"] = {"tol": 1e-4}
    run_cli(tmp_path, cfg)
    assert json.loads(capsys.readouterr().out)["tol"] == 1e-4


def test_user_matrix_model(tmp_path, capsys):
    H = np.array([[1, 1], [0.5, 2]], dtype=complex)
    # Θ = diag(1, 2) intertwines H and H^H: ΘH = [[1,1],[1,4]] is Hermitian
    cfg = {"model": "user-matrix", "command": "observables", "H": matops.matrix_to_json(H),
           "metric": matops.matrix_to_json(np.diag([1.0, 2.0])),
           "observables": {"Z": matops.matrix_to_json(matops.SIGMA_Z)}}
    assert run_cli(tmp_path, cfg) == 0
    rows = {r["observable"]: r for r in json.loads(capsys.readouterr().out)["observables"]}
    assert rows["H"]["admissible"] and rows["Z"]["admissible"]
    cfg["command"] = "spectrum"
    assert run_cli(tmp_path, cfg) == 0
    ev = json.loads(capsys.readouterr().out)["eigenvalues"]
    assert [e["E_re"] for e in ev] == pytest.approx(sorted(np.linalg.eigvals(H).real))


def test_module_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"model": "twolevel", "command": "spectrum"}))
    proc = subprocess.run([sys.executable, "-m", "quasiherm", "--config", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "E_plus" in proc.stdout

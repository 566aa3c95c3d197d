import json
import subprocess
import sys

import numpy as np
import pytest

from quadobs.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, run
from quadobs.harness import read_pe_csv, read_trace_csv, save_scenario, scenario_to_dict, vehicle_scenario


def test_analyze(capsys):
    assert run(["analyze", "vehicle"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "m = 3" in out and "extended dimension = 9" in out
    assert "zero-input Kalman rank = 3 of 9" in out
    assert "satisfied" in out


def test_check_pe_to_file(tmp_path):
    out = tmp_path / "pe.csv"
    assert run(["check-pe", "vehicle", "--out", str(out)]) == EXIT_OK
    reports = read_pe_csv(out)
    assert {r.condition_id for r in reports} >= {"gramian-def3", "prop3", "prop4"}
    assert all(r.passed for r in reports if r.condition_id in ("prop3", "prop4", "gramian-def3"))


def test_check_pe_overrides(tmp_path, capsys):
    out = tmp_path / "pe.csv"
    code = run(["check-pe", "vehicle", "--horizon", "6", "--window", "2", "--kappa", "4", "--out", str(out)])
    assert code == EXIT_OK
    assert "dropped" in capsys.readouterr().err
    prop2 = [r for r in read_pe_csv(out) if r.condition_id == "prop2"]
    assert [r.window_start for r in prop2] == [0.0, 2.0, 4.0]
    assert all(r.delta == 2.0 for r in prop2)


def test_simulate(tmp_path):
    out = tmp_path / "trace.csv"
    assert run(["simulate", "vehicle", "--horizon", "1", "--step", "0.002", "--out", str(out)]) == EXIT_OK
    header, data = read_trace_csv(out)
    assert header[0] == "t" and header[-1] == "err_z"
    assert data.shape == (501, 29)


def test_simulate_theta_override(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["simulate", "vehicle", "--horizon", "2", "--out", str(a)])
    run(["simulate", "vehicle", "--horizon", "2", "--theta", "1", "--out", str(b)])
    assert read_trace_csv(a)[1][-1, -2] != read_trace_csv(b)[1][-1, -2]


def test_unknown_key_exit_code(tmp_path, capsys):
    doc = scenario_to_dict(vehicle_scenario(horizon=1.0))
    doc["extra"] = 1
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert run(["analyze", str(path)]) == EXIT_CONFIG
    assert "extra" in capsys.readouterr().err


def test_assumption_exit_code(tmp_path):
    doc = scenario_to_dict(vehicle_scenario(horizon=1.0))
    doc["system"]["A"] = np.eye(6).tolist()
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert run(["analyze", str(path)]) == EXIT_CONFIG


def test_missing_file_exit_code(tmp_path):
    assert run(["analyze", str(tmp_path / "nope.json")]) == EXIT_IO


def test_unwritable_output(tmp_path):
    assert run(["analyze", "vehicle", "--out", str(tmp_path / "no" / "dir" / "x.txt")]) == EXIT_IO


def test_numerical_failure_exit_code(tmp_path):
    sc = vehicle_scenario(horizon=1.0)
    doc = scenario_to_dict(sc)
    doc["observer"]["M0"] = 1e-3
    doc["observer"]["V"] = 0.0
    doc["observer"]["theta"] = 0.0
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    # V = 0 with theta = 0 is rejected up front
    assert run(["simulate", str(path)]) == EXIT_CONFIG
    doc["observer"]["V"] = 1e300
    path.write_text(json.dumps(doc))
    assert run(["simulate", str(path)]) == EXIT_NUMERIC


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "quadobs.cli", "analyze", "vehicle"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "m = 3" in proc.stdout


def test_bad_verb():
    with pytest.raises(SystemExit):
        run(["plot", "vehicle"])

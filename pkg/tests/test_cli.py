import json
import subprocess
import sys

import numpy as np
import pytest

from radreact.cli import dispatch
from radreact.io import read_series, sha256_file


def run(tmp_path, *args):
    return dispatch(["--quiet", "--out-dir", str(tmp_path), *args])


def manifest(tmp_path, stem):
    return json.loads((tmp_path / f"{stem}.manifest.json").read_text())


def test_trajectory_al_runaway(tmp_path):
    code = run(tmp_path, "trajectory", "--equation", "al", "--pulse", "gaussian:t0=5,sigma=0.5,f0=1e-3",
               "--tspan", "0:100")
    assert code == 0
    m = manifest(tmp_path, "trajectory")
    assert m["extra"]["runaway"] is True
    csv = tmp_path / "trajectory.csv"
    assert m["outputs"][str(csv)] == sha256_file(csv)
    header, cols = read_series(csv)
    assert header[:3] == ["t", "x", "v"]


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    assert run(tmp_path, "trajectory", "--bogus") == 3
    assert "usage" in capsys.readouterr().err.lower()


def test_constraint_violation_exit_code(tmp_path):
    code = run(tmp_path, "trajectory", "--equation", "cutoff", "--omega-cutoff", "2", "--pulse",
               "gaussian:t0=5,sigma=1,f0=1e-3", "--tspan", "0:20")
    assert code == 1
    m = manifest(tmp_path, "trajectory")
    assert m["status"] == "failed" and "ConstraintViolation" in m["error"]


def test_recurrence_is_configuration_error(tmp_path):
    code = run(tmp_path, "microbath", "--n-osc", "200", "--omega-max", "20", "--tmax", "80", "--n-traj", "2")
    assert code == 3
    assert manifest(tmp_path, "microbath")["exit_code"] == 3


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[trajectory]\nequation = fo\ntspan = 0:50\npulse = gaussian:t0=5,sigma=1,f0=1e-3\n")
    assert run(tmp_path, "--config", str(cfg), "trajectory", "--tspan", "0:20") == 0
    echo = manifest(tmp_path, "trajectory")["config"]
    assert echo["equation"] == "fo"
    assert echo["tspan"] == [0.0, 20.0]


def test_seeded_runs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--kB", "1", "brownian", "--n-traj", "20", "--tmax", "5", "--temperature", "1", "--per-trajectory"]
    assert run(a, "--seed", "4", *args) == 0
    assert run(b, "--seed", "4", *args) == 0
    assert sha256_file(a / "brownian.trajectories.csv") == sha256_file(b / "brownian.trajectories.csv")
    sa = json.loads((a / "brownian.summary.json").read_text())
    sb = json.loads((b / "brownian.summary.json").read_text())
    assert sa == sb and sa["kT_over_m"] == 1.0
    assert run(tmp_path / "c", "--seed", "5", *args) == 0
    assert sha256_file(a / "brownian.trajectories.csv") != sha256_file(tmp_path / "c" / "brownian.trajectories.csv")


@pytest.mark.parametrize("args", [
    ["spectrum", "--bath", "blackbody", "--omega", "0:5:11"],
    ["response", "--model", "fo", "--K", "1", "--omega", "0.1:3:10"],
    ["correlate", "--kind", "force", "--bath", "ohmic:zeta=1", "--temperature", "1", "--lags", "0.1:1:4"],
    ["radiate", "--pulse", "gaussian:t0=5,sigma=1,f0=1e-3"],
    ["relativistic", "--E", "1e-6", "--gap", "2", "--entry-speed", "0.01", "--ramp", "20"],
])
def test_subcommands_succeed(tmp_path, args):
    assert run(tmp_path, *args) == 0
    m = manifest(tmp_path, args[0])
    assert m["status"] == "ok" and m["outputs"]


def test_cgs_units(tmp_path):
    code = run(tmp_path, "--units", "cgs", "trajectory", "--equation", "fo",
               "--pulse", "gaussian:t0=1e-22,sigma=1e-23,f0=1e-20", "--tspan", "0:1e-21")
    assert code == 0
    _, cols = read_series(tmp_path / "trajectory.csv")
    t = cols[0]
    assert t[-1] == pytest.approx(1e-21, rel=1e-9)


def test_verify_only(tmp_path, capsys):
    assert dispatch(["--out-dir", str(tmp_path), "verify", "--only", "1", "3"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "stieltjes" in out
    m = manifest(tmp_path, "verify")
    assert sorted(k.split(":")[0] for k in m["checks"]) == ["1", "3"]


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "radreact", "--out-dir", str(tmp_path), "verify", "--only", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "[PASS]" in r.stdout

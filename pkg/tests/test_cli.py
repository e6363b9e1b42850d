import io
import json
import subprocess
import sys

import pytest

from branchscope import cli, engine, solve_malthus
from branchscope.model import catalogue


def call(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("BRANCHSCOPE_SEED", raising=False)


def test_solve_prints_block_and_json():
    code, text = call("solve", "--model", "correlated")
    assert code == 0
    block, _, js = text.partition("{")
    kv = dict(line.split("=", 1) for line in block.strip().splitlines())
    data = json.loads("{" + js)
    assert set(data) == {"alpha", "beta", "c_star", "growth_constant", "slope"}
    assert float(kv["c_star"]) == data["c_star"] == pytest.approx(4 / 3)


def test_solve_with_horizon_and_config(tmp_path):
    path = tmp_path / "m.toml"
    path.write_text('[model]\nfamily = "exp"\nrate = 2.0\n[model.offspring]\nk = 3\n[run]\nt = 1\n')
    code, text = call("solve", "--config", str(path), "--t", "3")
    assert code == 0
    data = json.loads(text[text.index("{"):])
    assert data["alpha"] == pytest.approx(4.0) and data["ell_t"] == pytest.approx(2.0)


def test_simulate_matches_library():
    code, text = call("simulate", "--model", "exp", "--t", "4", "--seed", "12", "--window", "2", "--cap", "100000")
    assert code == 0
    data = json.loads(text)
    m = catalogue()["exp"]
    r = engine.run(m, solve_malthus(m), engine.SimulationConfig(horizon=4.0, window=2.0, seed=12, edge_cap=100000))
    assert data["n_alive"] == r.n_alive and data["z_t"] == r.z_t
    assert data["pendant_atoms"] == r.pendant_atoms.tolist()
    assert data["m_interior"] == r.m_interior


def test_simulate_seed_from_env(monkeypatch):
    monkeypatch.setenv("BRANCHSCOPE_SEED", "12")
    a = json.loads(call("simulate", "--t", "4")[1])
    monkeypatch.delenv("BRANCHSCOPE_SEED")
    b = json.loads(call("simulate", "--t", "4", "--seed", "12")[1])
    c = json.loads(call("simulate", "--t", "4")[1])
    assert a == b and a != c


def test_ensemble_writes_outputs(tmp_path):
    code, text = call("ensemble", "--model", "exp", "--t", "4", "--replicates", "120", "--seed", "3",
                      "--out", str(tmp_path), "--threads", "2")
    assert code == 0, text
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["replicates"]["requested"] == 120
    atoms = (tmp_path / "atoms.csv").read_text().splitlines()
    maxima = (tmp_path / "maxima.csv").read_text().splitlines()
    assert atoms[0] == "replicate,kind,position" and len(atoms) > 1
    assert maxima[0] == "replicate,status,z_t,mp,mi" and len(maxima) == 121


def test_ensemble_too_few_survivors_fails(tmp_path):
    code, _ = call("ensemble", "--t", "4", "--replicates", "100", "--cap", "5", "--out", str(tmp_path))
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["frobnicate"], ["simulate", "--model", "nope"], ["simulate", "--t", "-1"],
    ["check", "--only", "99"], ["ensemble", "--config", "/nonexistent/c.toml"],
    ["simulate", "--seed", "-4"], ["simulate", "--threads", "0"],
])
def test_usage_errors_exit_2(argv):
    assert call(*argv)[0] == 2


def test_bad_config_exit_2(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[model]\nfamily = \n")
    assert call("simulate", "--config", str(path))[0] == 2
    path.write_text('[model]\nfamily = "exp"\n[run]\nt = 1\nmodle = 3\n')
    assert call("simulate", "--config", str(path))[0] == 2


def test_check_selected_criteria_pass():
    code, text = call("check", "--only", "1", "--only", "3")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("PASS  1") and lines[1].startswith("PASS  3")


def test_check_fault_injection_fails():
    code, text = call("check", "--only", "1", "--perturb-alpha", "1e-6")
    assert code == 1
    assert text.startswith("FAIL  1")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "branchscope", "solve"], capture_output=True, text=True)
    assert proc.returncode == 0 and "alpha=1" in proc.stdout

import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from endowment_hjb.cli import main
from endowment_hjb.serialization import read_csv, sha256

CONFIG = Path(__file__).parent.parent / "configs" / "pension.yaml"


def write_cfg(tmp_path, **edits):
    cfg = yaml.safe_load(CONFIG.read_text())
    cfg["grid"].update(nt=30, nz=40)
    cfg["sim"].update(n_paths=1500, n_steps=16)
    for dotted, value in edits.items():
        node = cfg
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node[key]
        if value is None:
            del node[leaf]
        else:
            node[leaf] = value
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


@pytest.fixture
def solved(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out-dir", str(out), "solve"]) == 0
    return out


def test_solve_outputs(solved):
    manifest = json.loads((solved / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        assert sha256(solved / name) == digest
    header, body = read_csv(solved / "surface.csv")
    assert header == ["t", "z", "u", "pi"]
    # policy at t = 0 decreases toward the Merton ratio for large z
    t0 = body[body[:, 0] == 0.0]
    big = t0[t0[:, 1] > 5.0, 3]
    assert big[-1] < big[0] and abs(big[-1] - 0.5) < abs(big[0] - 0.5)


def test_missing_gamma_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **{"utility.gamma": None})
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "solve"]) == 2
    assert "utility.gamma" in capsys.readouterr().err


def test_gamma_zero_rejected(tmp_path):
    cfg = write_cfg(tmp_path, **{"utility.gamma": 0.0})
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "solve"]) == 2


def test_unknown_grid_key(tmp_path):
    cfg = write_cfg(tmp_path, **{"grid.bogus": 1})
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "solve"]) == 2


def test_solver_error_exit_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **{"scheme.tol_value": 0.0})
    rc = main(["--config", str(cfg), "--out-dir", str(tmp_path), "--tol-policy", "0",
               "--max-policy-iters", "1", "solve"])
    assert rc == 3
    assert "time index" in capsys.readouterr().err


def test_policy_eval_and_export(solved, capsys, tmp_path):
    surf = str(solved / "surface.npz")
    assert main(["policy", "eval", "--surface", surf, "--at", "20,3,1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.5)
    assert main(["policy", "eval", "--surface", surf, "--at", "0,-1,1"]) == 2
    csv = tmp_path / "p.csv"
    assert main(["policy", "export", "--surface", surf, "--csv", str(csv)]) == 0
    assert read_csv(csv)[0] == ["t", "z", "pi"]


def test_asymptotics_report(solved, tmp_path):
    csv = tmp_path / "a.csv"
    assert main(["asymptotics", "report", "--surface", str(solved / "surface.npz"),
                 "--csv", str(csv)]) == 0
    header, body = read_csv(csv)
    assert header == ["t", "z", "u", "lower", "upper", "ratio"]
    assert body[-1, 5] == pytest.approx(1.0)


def test_mc_value_json(solved, capsys):
    argv = ["--seed", "9", "mc", "value", "--surface", str(solved / "surface.npz"),
            "--at", "0,1,1", "--paths", "800", "--steps", "8"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    rec = json.loads(first)
    assert set(rec) == {"mean", "std_error", "paths", "seed", "floored_fraction"}
    assert rec["paths"] == 800 and rec["seed"] == 9
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_rho_sweep_empty(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "rho-sweep", "--rhos", ""]) == 0
    assert (tmp_path / "rho_sweep.csv").read_text() == "rho,t,z,pi\n"


def test_rho_sweep_high_correlation(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "rho-sweep",
                 "--rhos", "0.95"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert list(manifest["pi_at_0_1"].values())[0] < 0.5


def test_validate_coarse_grid_fails(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    rc = main(["--config", str(cfg), "--out-dir", str(tmp_path), "--grid-nt", "10",
               "--grid-nz", "10", "validate", "--skip-mc"])
    assert rc == 4
    report = json.loads((tmp_path / "validate.json").read_text())
    sandwich = report["checks"][0]
    assert sandwich["name"] == "sandwich" and not sandwich["passed"]
    assert sandwich["metrics"]["violations"] > 0


def test_validate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(["--config", str(cfg), "--out-dir", str(out), "--seed", "3", "validate"])
        outs.append(out)
    assert (outs[0] / "validate.json").read_bytes() == (outs[1] / "validate.json").read_bytes()


def test_entry_point_subprocess(tmp_path):
    r = subprocess.run([sys.executable, "-m", "endowment_hjb.cli", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "rho-sweep" in r.stdout
    r = subprocess.run([sys.executable, "-m", "endowment_hjb.cli", "--config",
                        str(tmp_path / "missing.yaml"), "solve"], capture_output=True, text=True)
    assert r.returncode == 2

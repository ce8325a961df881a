import json
import os
import subprocess
import sys

import numpy as np
import pytest

from monodens.cli import main
from monodens.harness import sample_density


@pytest.fixture(scope="module")
def points(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "points.csv"
    x = sample_density("g4", 400, np.random.default_rng(0))
    np.savetxt(path, x, delimiter=",", header="x1,x2", comments="", fmt="%.10f")
    return str(path)


def run(args, env=None):
    e = dict(os.environ)
    e.pop("MONODENS_SEED", None)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "monodens.cli", *args], capture_output=True, env=e, check=True).stdout


def test_ci_json_output(points, capsys):
    assert main(["ci", "--input", points, "--x0", "0.5,0.5", "--draws", "200"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lower"] <= out["upper"] and out["J"] == [11, 11]
    assert out["schema"].startswith("monodens.")


def test_seed_from_environment(points):
    args = ["ci", "--input", points, "--x0", "0.3,0.6", "--draws", "150"]
    assert run(args, {"MONODENS_SEED": "5"}) == run(args + ["--seed", "5"])
    assert run(args, {"MONODENS_SEED": "5"}) != run(args, {"MONODENS_SEED": "6"})


def test_config_file_matches_flags(points, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 0.1, "draws": 150, "map": "minmax"}))
    a = run(["ci", "--input", points, "--x0", "0.5,0.5", "--config", str(cfg)])
    b = run(["ci", "--input", points, "--x0", "0.5,0.5", "--gamma", "0.1", "--draws", "150", "--map", "minmax"])
    assert a == b


def test_project_roundtrip(tmp_path, capsys):
    src = tmp_path / "theta.csv"
    src.write_text("0.1,0.4\n0.3,0.2\n")
    assert main(["project", "--input", str(src), "--normalize"]) == 0
    out = json.loads(capsys.readouterr().out)
    fit = np.array(out["projection"])
    assert fit.sum() == pytest.approx(1.0)
    assert np.all(np.diff(fit, axis=0) <= 1e-12) and np.all(np.diff(fit, axis=1) <= 1e-12)


def test_errors_return_code(tmp_path, capsys):
    assert main(["ci", "--input", str(tmp_path / "missing.csv"), "--x0", "0.5,0.5"]) == 2
    assert main(["ci", "--input", str(tmp_path / "missing.csv"), "--x0", "0.5"]) == 2


def test_recalibrate_without_entry_fails(points, capsys):
    assert main(["ci", "--input", points, "--x0", "0.5,0.5", "--gamma", "0.1", "--recalibrate"]) == 2
    assert "monodens zb" in capsys.readouterr().err

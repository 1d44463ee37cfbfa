import csv
import json
import subprocess
import sys

import pytest

from mems_branch.cli import BRANCH_HEADER, ConfigError, load_config, main, parse_value


def run(*argv):
    return main([str(a) for a in argv])


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value("1e-8") == 1e-8
    assert parse_value("true") is True
    assert parse_value("none") is None
    assert list(parse_value("10, 30, 100")) == [10, 30, 100]
    assert parse_value("csv,json") == ["csv", "json"]
    assert parse_value("graded") == "graded"


def test_formulas(capsys):
    assert run("formulas", "--N", 8) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["lambda_star"] == pytest.approx(40 / 9, rel=1e-15)
    assert data["hardy_stable"] is True


def test_branch_outputs_are_deterministic(tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run("branch", "--N", 2, "--alpha", 0, "--n", 200, "--out", out) == 0
        texts.append({name: (out / name).read_bytes() for name in ("branch.csv", "branch.json", "branch.svg")})
    assert texts[0] == texts[1]
    rows = list(csv.reader(texts[0]["branch.csv"].decode().splitlines()))
    assert tuple(rows[0]) == BRANCH_HEADER
    summary = json.loads(texts[0]["branch.json"])
    assert len(summary["folds"]) >= 2
    assert summary["termination"] in ("second_fold", "mu2_crossed_zero")
    svg = texts[0]["branch.svg"].decode()
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert "stroke-dasharray" in svg


def test_config_file_and_errors(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("# disk\nN = 3\ngrid.n = 64\nlimit.rtest = 10, 30\n")
    cfg = load_config(good)
    assert cfg == {"N": 3, "grid.n": 64, "limit.rtest": [10.0, 30.0]}

    bad = tmp_path / "bad.cfg"
    bad.write_text("N = 2\nbogus.key = 1\n")
    with pytest.raises(ConfigError) as info:
        load_config(bad)
    assert info.value.where.endswith("bad.cfg:2")
    assert run("formulas", "--config", bad) == 2
    assert "bad.cfg:2" in capsys.readouterr().err

    assert run("formulas", "--N", 0) == 2
    assert run("formulas", "--set", "grid.kind=chebyshev") == 2
    assert run("branch", "--set", "continuation.ds0=1.0") == 2


def test_numerical_failure_exit_code(capsys):
    assert run("spectrum", "--N", 2, "--n", 100, "--lambda", 5.0) == 3
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["subcommand"] == "spectrum"
    assert "error" in rec


def test_spectrum_at_zero(capsys):
    assert run("spectrum", "--N", 3, "--n", 400) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["mu1"] == pytest.approx(9.8696, rel=1e-4)
    assert data["morse_index"] == 0


def test_limit_command(tmp_path):
    assert run("limit", "--N", 3, "--out", tmp_path) == 0
    data = json.loads((tmp_path / "limit.json").read_text())
    assert data["certificate"] == "unstable"
    assert (tmp_path / "limit_profile.csv").exists()


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("MEMS_BRANCH_THREADS", "zero")
    assert run("formulas") == 2
    assert "MEMS_BRANCH_THREADS" in capsys.readouterr().err


def test_diag_on_branch_csv(tmp_path):
    out = tmp_path / "b"
    common = ["--N", 8, "--n", 300, "--out", out]
    assert run("branch", *common) == 0
    assert run("diag", *common, "--branch-csv", out / "branch.csv") == 0
    data = json.loads((out / "diag.json").read_text())
    assert data["bound_constant_liminf"] > 0.01


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mems_branch", "formulas", "--N", "9", "--alpha", "0"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["N"] == 9

from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from dyonlab.cli import EXIT_CHECKS, EXIT_CONVERGENCE, EXIT_OK, EXIT_USAGE, main
from dyonlab.io import RunManifest, read_profile_csv, write_profile_csv


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.fixture(scope="module")
def solved_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    code = main(["solve", "--beta", "1", "--C", "0.3", "--out", str(d / "p.csv"),
                 "--manifest", str(d / "m.json"), "--plot-data", str(d / "plot")])
    return code, d


@pytest.mark.slow
def test_solve_writes_outputs(solved_run):
    code, d = solved_run
    assert code == EXIT_OK
    m = RunManifest.read(str(d / "m.json"))
    assert m.accepted and m.params["C"] == 0.3 and m.oracle_supnorm is None
    assert len(read_profile_csv(str(d / "p.csv"))["rho"]) == m.grid["n_nodes"]
    assert (d / "plot" / "tail.dat").exists()


@pytest.mark.slow
def test_rerun_is_byte_identical(solved_run, tmp_path):
    _, d = solved_run
    assert main(["solve", "--beta", "1", "--C", "0.3", "--out", str(tmp_path / "q.csv")]) == EXIT_OK
    assert (tmp_path / "q.csv").read_bytes() == (d / "p.csv").read_bytes()


@pytest.mark.slow
def test_verify_round_trip(solved_run, tmp_path, capsys):
    _, d = solved_run
    capsys.readouterr()
    assert main(["verify", str(d / "p.csv"), "--manifest", str(d / "m.json")]) == EXIT_OK
    doc = _json_out(capsys)
    assert doc["overall"] == "pass" and doc["params"]["beta"] == 1.0
    out = tmp_path / "r.json"
    assert main(["verify", str(d / "p.csv"), "--beta", "1", "--C", "0.3", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["overall"] == "pass"


@pytest.mark.slow
def test_verify_flags_broken_profile(solved_run, tmp_path, capsys):
    _, d = solved_run
    t = read_profile_csv(str(d / "p.csv"))
    t["J"] = -t["J"]
    from dyonlab.io import profiles_from_table

    path = tmp_path / "bad.csv"
    write_profile_csv(str(path), *profiles_from_table(t))
    assert main(["verify", str(path), "--manifest", str(d / "m.json")]) == EXIT_CHECKS
    assert "check failed: J non-decreasing" in capsys.readouterr().err


def test_verify_rejects_malformed_csv(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("")
    assert main(["verify", str(path)]) == EXIT_USAGE
    assert "empty file" in capsys.readouterr().err


@pytest.mark.parametrize("argv,msg", [
    (["solve", "--C", "1.2"], "C must satisfy"),
    (["solve", "--beta", "-1"], "beta must satisfy"),
    (["solve", "--beta", "1", "--oracle-check"], "beta = 0"),
    (["solve", "--relax", "0"], "relax"),
    (["sweep", "--beta", "1", "--C", "0", "--jobs", "0"], "--jobs"),
])
def test_bad_inputs_exit_1(argv, msg, capsys):
    assert main(argv) == EXIT_USAGE
    assert msg in capsys.readouterr().err


def test_bad_flags_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve", "--nonsense"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--beta", "a,b", "--C", "0"])
    assert info.value.code == EXIT_USAGE


def test_convergence_failure_exits_2(tmp_path, monkeypatch, capsys):
    import dyonlab.cli as cli
    from dyonlab.errors import ConvergenceError

    def boom(params, opts):
        raise ConvergenceError("no convergence", history=[(1, 1.0)])

    monkeypatch.setattr(cli, "solve_dyon", boom)
    assert main(["solve", "--beta", "1"]) == EXIT_CONVERGENCE
    assert main(["sweep", "--beta", "1", "--C", "0", "--out", str(tmp_path / "s.csv")]) == EXIT_CONVERGENCE
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert rows[0]["status"] == "failed"


def test_oracle_command(tmp_path, capsys):
    path = tmp_path / "o.csv"
    assert main(["oracle", "--C", "0.6", "--out", str(path)]) == EXIT_OK
    doc = _json_out(capsys)
    assert doc["q_e"] == pytest.approx(0.75) and doc["c_star"] == pytest.approx(0.16)
    assert doc["a_star"] == pytest.approx(-0.64 / 6)
    assert read_profile_csv(str(path))["rho"][-1] == pytest.approx(25 / 0.8)


@pytest.mark.slow
def test_monopole_oracle_check(tmp_path, capsys):
    m = tmp_path / "m.json"
    assert main(["monopole", "--beta", "0", "--oracle-check", "--manifest", str(m)]) == EXIT_OK
    doc = _json_out(capsys)
    assert doc["oracle_supnorm"] <= 1e-4 and doc["c_star"] == 0.0
    assert RunManifest.read(str(m)).oracle_supnorm == doc["oracle_supnorm"]


@pytest.mark.slow
def test_sweep_table(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--beta", "1,2", "--C", "0,0.3", "--jobs", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(open(out)))
    assert [(float(r["beta"]), float(r["C"])) for r in rows] == [(1, 0), (1, 0.3), (2, 0), (2, 0.3)]
    assert all(r["status"] == "ok" for r in rows)
    assert all(abs(float(r["q_m"]) - 0.5) < 1e-3 for r in rows)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "dyonlab", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("dyonlab ")

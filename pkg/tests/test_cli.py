import csv
import io
import json
import math
import subprocess
import sys

import pytest

from eloforge.cli import main
from eloforge.dynamics import Move, Transcript


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_exit(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        main(list(argv))
    out, err = capsys.readouterr()
    return info.value.code, out, err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    json.loads(lines[0][len("# config: "):])
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_table1(capsys):
    code, out, _ = run(capsys, "table1", "--k", "1e6")
    assert code == 0
    table = {r["sigma"]: r for r in rows(out)}
    assert float(table["logistic"]["n2_closed_form"]) == pytest.approx(0.5 * math.log(1e6))
    assert float(table["erf"]["n2_closed_form"]) == pytest.approx(1.858, abs=1e-3)
    assert float(table["alg:p=1"]["n2_closed_form"]) == pytest.approx(707.1, abs=0.1)
    for r in table.values():
        assert abs(float(r["n2_estimate"]) - float(r["n2_closed_form"])) < 3 or r["sigma"].startswith("alg")


def test_ladder_certify(capsys):
    code, out, _ = run(capsys, "ladder", "--sigma", "logistic", "--games", "1000000", "--certify")
    assert code == 0
    cert = rows(out)
    assert len(cert) == 4
    assert all(float(r["margin"]) >= 0 and r["holds"] == "true" for r in cert)


def test_ladder_routes_without_threshold(capsys):
    code, out, err = run(capsys, "ladder", "--sigma", "alg:p=2", "--games", "100")
    assert code == 0
    assert "repeated wins" in err
    assert rows(out)[0]["inside"] == "true"


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--sigma", "logistic", "--n2-wins", "100")
    assert code == 0
    [r] = rows(out)
    assert float(r["low"]) <= float(r["rating"]) <= float(r["high"])


def test_search(capsys, tmp_path):
    emit = tmp_path / "best.json"
    code, out, _ = run(capsys, "search", "-n", "2", "-k", "2", "--emit", str(emit))
    assert code == 0
    vals = {r["quantity"]: r["value"] for r in rows(out)}
    assert float(vals["optimum"]) == pytest.approx(0.76894, abs=1e-5)
    assert vals["violations"] == "0"
    assert len(Transcript.load(emit).moves) == 2


def test_bounds_modes(capsys):
    code, out, _ = run(capsys, "bounds", "--sigma", "logistic", "--rating", "2")
    assert code == 0
    assert float(rows(out)[0]["phi_lower_bound"]) == pytest.approx(1.0, rel=1e-9)
    code, out, _ = run(capsys, "bounds", "--sigma", "logistic", "--games", "1e6", "--constants")
    assert code == 0
    assert float(rows(out)[0]["phi_constant"]) == pytest.approx(17.155, abs=1e-3)
    code, out, _ = run(capsys, "bounds", "--sigma", "logistic", "--tails", "0,1,2")
    assert code == 0
    assert float(rows(out)[1]["cumulative"]) == pytest.approx(math.e, rel=1e-9)


def test_validate_pot(capsys, tmp_path):
    code, out, _ = run(capsys, "validate-pot", "--sigma", "erf")
    assert code == 0
    assert all(r["passed"] == "true" for r in rows(out))


def test_certify_path(capsys, tmp_path):
    moves = (Move(0, 1), Move(1, 0), Move(0, 1), Move(2, 0, 0.3), Move(0, 1), Move(0, 2))
    src = tmp_path / "in.json"
    Transcript(3, moves, (), "logistic").save(src)
    emit = tmp_path / "out.json"
    code, out, _ = run(capsys, "certify-path", "--in", str(src), "--rating", "0.5",
                       "--emit", str(emit))
    assert code == 0
    rep = json.loads(out)
    assert rep["certified"] and rep["upsets"] == 0
    assert rep["config"]["rating"] == 0.5
    assert Transcript.load(emit).n == 3


@pytest.mark.parametrize("argv,flag", [
    (["simulate", "--sigma", "cauchy", "--n2-wins", "5"], "--sigma"),
    (["simulate", "--sigma", "logistic", "--n2-wins", "-3"], "--n2-wins"),
    (["ladder", "--sigma", "logistic", "--games", "2.5"], "--games"),
    (["search", "-n", "9", "-k", "2"], "-n"),
    (["bounds", "--sigma", "logistic", "--rating", "0"], "--rating"),
    (["validate-pot", "--sigma", "logistic", "--points", "10"], "grid"),
    (["bounds", "--sigma", "logistic"], "--games"),
])
def test_usage_errors_exit_1(capsys, argv, flag):
    code, _, err = run_exit(capsys, *argv)
    assert code == 1
    assert flag in err
    assert len(err.strip().splitlines()[-1]) > 0


def test_malformed_transcript(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run_exit(capsys, "certify-path", "--in", str(bad), "--rating", "1")
    assert code == 1
    assert "--in" in err
    code, _, err = run_exit(capsys, "certify-path", "--in", str(tmp_path / "missing.json"),
                            "--rating", "1")
    assert code == 1 and "--in" in err


def test_failed_assumption_exits_2(capsys, tmp_path):
    table = tmp_path / "flat.csv"
    # too flat: sigma(2 - 2z) < 1/z fails
    import numpy as np
    z = np.linspace(-60, 60, 2001)
    s = 1 / (1 + np.exp(-z / 100))
    table.write_text("z,sigma\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(z, s)))
    code, out, _ = run(capsys, "validate-pot", "--sigma", f"csv:{table}")
    assert code == 2
    assert {r["assumption"]: r["passed"] for r in rows(out)}["bounded_drop"] == "false"


def test_quad_tol_env(capsys, monkeypatch):
    monkeypatch.setenv("ELOFORGE_QUAD_TOL", "1e-8")
    code, out, _ = run(capsys, "simulate", "--sigma", "logistic", "--n2-wins", "10")
    assert code == 0
    assert '"quad_tol": 1e-08' in out.splitlines()[0]
    monkeypatch.setenv("ELOFORGE_QUAD_TOL", "tight")
    code, _, err = run_exit(capsys, "simulate", "--sigma", "logistic", "--n2-wins", "10")
    assert code == 1 and "ELOFORGE_QUAD_TOL" in err


@pytest.mark.parametrize("argv", [
    ["table1", "--k", "1000"],
    ["ladder", "--sigma", "logistic", "--games", "5000", "--certify"],
    ["search", "-n", "3", "-k", "5"],
    ["bounds", "--sigma", "erf", "--games", "1e4", "--constants"],
])
def test_outputs_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(argv + ["--out", str(a), "--seed", "3"]) == 0
    assert main(argv + ["--out", str(b), "--seed", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("sub", ["validate-pot", "simulate", "ladder", "search", "bounds",
                                 "certify-path", "table1"])
def test_help_lists_every_flag(capsys, sub):
    code, out, _ = run_exit(capsys, sub, "--help")
    assert code == 0
    assert "--out" in out and "--quad-tol" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "eloforge", "simulate", "--sigma", "logistic",
                          "--n2-wins", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "0.5" in res.stdout

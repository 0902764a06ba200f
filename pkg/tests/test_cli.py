from __future__ import annotations

import csv
import json

import pytest

from meanrisk.cli import main
from meanrisk.instgen import read_instance


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen(tmp_path, capsys):
    path = tmp_path / "a.mri"
    code, out, _ = run(capsys, "gen", "--rows", "10", "--cols", "10", "--seed", "1", "--epsilon", "0.05", "--out", str(path))
    assert code == 0 and "180 interdictable arcs" in out
    assert read_instance(path).network.n_vars == 180
    again = tmp_path / "b.mri"
    run(capsys, "gen", "--rows", "10", "--cols", "10", "--seed", "1", "--epsilon", "0.05", "--out", str(again))
    assert path.read_bytes() == again.read_bytes()


def test_gen_correlated(tmp_path, capsys):
    path = tmp_path / "c.mri"
    code, _, _ = run(capsys, "gen", "--rows", "3", "--cols", "4", "--correlated", "--factors", "20",
                     "--budget-rule", "mean-cost:8", "--out", str(path))
    assert code == 0
    assert "covariance factor 17 20 20" in path.read_text()


def test_gen_argument_errors(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--rows", "1", "--cols", "3", "--out", str(tmp_path / "x"))
    assert code == 2 and "rows must be >= 2" in err
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--rows", "3", "--cols", "3", "--budget-rule", "bogus", "--out", "x"])
    assert exc.value.code == 2


def test_solve_two_points(tmp_path, capsys):
    out_json, trace = tmp_path / "s.json", tmp_path / "t.csv"
    code, out, _ = run(capsys, "solve", "--instance", "data/two_points.mri", "--trace", str(trace), "--out", str(out_json))
    assert code == 0 and "value: 3.236068" in out
    rec = json.loads(out_json.read_text())
    assert rec["iterations"] <= 6 and rec["x_support"] == [2]
    assert trace.read_text().startswith("iteration,t,f,mr,sign\n")


def test_solve_two_arcs(capsys):
    code, out, _ = run(capsys, "solve", "--instance", "data/two_arcs.mri")
    assert code == 0 and "interdict: arc 2" in out and "value: 1.000000" in out


def test_solve_errors(tmp_path, capsys):
    assert run(capsys, "solve", "--instance", "data/two_points.mri", "--max-iters", "0")[0] == 2
    assert run(capsys, "solve", "--instance", str(tmp_path / "missing.mri"))[0] == 3
    bad = tmp_path / "bad.mri"
    bad.write_text("meanrisk-instance 1\nkind explicit\n")
    code, _, err = run(capsys, "solve", "--instance", str(bad))
    assert code == 3 and "line" in err


def test_exact(tmp_path, capsys):
    out_json = tmp_path / "e.json"
    code, out, _ = run(capsys, "exact", "--instance", "data/two_points.mri", "--out", str(out_json))
    assert code == 0 and "value: 3.162278" in out
    rec = json.loads(out_json.read_text())
    assert rec["optimality_gap"] == pytest.approx((1 + 5**0.5 - 10**0.5) / 10**0.5)


def test_exact_guard(tmp_path, capsys):
    path = tmp_path / "big.mri"
    run(capsys, "gen", "--rows", "30", "--cols", "30", "--out", str(path))
    code, _, err = run(capsys, "exact", "--instance", str(path))
    assert code == 4 and "meanrisk solve" in err


def test_frontier(tmp_path, capsys):
    inst, out_csv = tmp_path / "g.mri", tmp_path / "f.csv"
    run(capsys, "gen", "--rows", "3", "--cols", "3", "--seed", "2", "--out", str(inst))
    code, _, _ = run(capsys, "frontier", "--instance", str(inst), "--epsilons", "0.5,0.1", "--budget-steps", "4", "--out", str(out_csv))
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 10
    assert float(rows[0]["epsilon"]) == 0.1
    zero = next(r for r in rows if float(r["epsilon"]) == 0.5 and float(r["budget_fraction"]) == 0.0)
    assert float(zero["scaled"]) == 100.0


def test_frontier_needs_interdiction(capsys):
    assert run(capsys, "frontier", "--instance", "data/two_points.mri")[0] == 2

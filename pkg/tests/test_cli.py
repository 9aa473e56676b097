import csv
import json

import numpy as np
import pytest

from qubo_eig.cli import main
from qubo_eig.experiments import TRACE_HEADER, load_results
from qubo_eig.matgen import marchenko_pastur, mesh_pair, random_spd, write_matrix_market
from qubo_eig.oracle import generalized_oracle, jacobi_oracle

FAST = ["--reads", "16", "--sweeps", "300"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_solve_diag(tmp_path):
    code, out = run(tmp_path, "solve", "--diag", "1,2,3", "--bits", "4", *FAST)
    assert code == 0
    s = summary(out)
    assert s["eigenvalue"] == pytest.approx(1.0, abs=1e-8)
    assert s["converged"] and s["variant"] == "smallest"
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRACE_HEADER
    iters = [int(r[0]) for r in rows[1:]]
    assert iters == sorted(set(iters))


def test_solve_mp_matches_oracle(tmp_path):
    code, out = run(tmp_path, "solve", "--ensemble", "mp", "--n", "10", "--ratio", "0.3", "--seed", "1")
    assert code == 0
    w = jacobi_oracle(marchenko_pastur(10, 0.3, 1))[0][0]
    assert abs(summary(out)["eigenvalue"] - w) <= 1e-8


def test_solve_mtx_traces_byte_identical(tmp_path):
    K, M = mesh_pair(3, 3)
    path = tmp_path / "mesh.mtx"
    write_matrix_market(path, K + M)
    args = ["solve", "--mtx", str(path), "--bits", "2", "--seed", "7", "--timing", "work", *FAST]
    assert run(tmp_path, *args, name="a")[0] == 0
    assert run(tmp_path, *args, name="b")[0] == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_solve_largest_and_ising(tmp_path):
    code, out = run(tmp_path, "solve", "--diag", "1,2,3", "--largest", *FAST, name="l")
    assert code == 0 and summary(out)["eigenvalue"] == pytest.approx(3.0, abs=1e-8)
    code, out = run(tmp_path, "solve", "--diag", "1,2", "--ising", *FAST, name="i")
    assert code == 0 and summary(out)["eigenvalue"] == pytest.approx(1.0, abs=1e-8)


def test_solve_oracle_stop(tmp_path):
    code, out = run(tmp_path, "solve", "--ensemble", "mp", "--n", "6", "--stop", "oracle", *FAST)
    assert code == 0 and summary(out)["eval_err"] <= 1e-8


def test_solve_gen_identity_b_matches_solve(tmp_path):
    A = marchenko_pastur(6, 0.3, 2)
    pa, pb = tmp_path / "a.mtx", tmp_path / "b.mtx"
    write_matrix_market(pa, A)
    write_matrix_market(pb, np.eye(6))
    assert run(tmp_path, "solve-gen", "--a-mtx", str(pa), "--b-mtx", str(pb), *FAST, name="g")[0] == 0
    assert run(tmp_path, "solve", "--mtx", str(pa), *FAST, name="s")[0] == 0
    g, s = summary(tmp_path / "g"), summary(tmp_path / "s")
    assert g["eigenvalue"] == pytest.approx(s["eigenvalue"], abs=1e-8)
    assert g["variant"] == "generalized"


def test_solve_gen_diag_pair(tmp_path):
    code, out = run(tmp_path, "solve-gen", "--a-diag", "2,6", "--b-diag", "1,2", *FAST)
    assert code == 0 and summary(out)["eigenvalue"] == pytest.approx(2.0, abs=1e-8)


def test_solve_gen_random_spd_pair(tmp_path):
    code, out = run(tmp_path, "solve-gen", "--pair", "spd", "--n", "20", "--seed", "3")
    assert code == 0
    X = np.random.default_rng(3).standard_normal((20, 20))
    w = generalized_oracle(0.5 * (X + X.T), random_spd(20, 4))[0][0]
    assert abs(summary(out)["eigenvalue"] - w) <= 1e-8


def test_solve_gen_indefinite_b(tmp_path, capsys):
    code, _ = run(tmp_path, "solve-gen", "--a-diag", "1,2", "--b-diag", "1,-1")
    assert code == 1
    assert "B" in capsys.readouterr().err


def test_bad_matrix_file(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1\n2 1 5\n")
    code, _ = run(tmp_path, "solve", "--mtx", str(bad))
    assert code == 1 and "bad.mtx" in capsys.readouterr().err
    code, _ = run(tmp_path, "solve", "--mtx", str(tmp_path / "missing.mtx"))
    assert code == 1


def test_non_convergence_exit_code(tmp_path):
    code, out = run(tmp_path, "solve", "--ensemble", "mp", "--n", "6", "--max-iterations", "3", *FAST)
    assert code == 3
    assert summary(out)["converged"] is False


def test_experiment_params_small(tmp_path):
    code, out = run(tmp_path, "experiment", "params", "--sizes", "4", "--bits-list", "2",
                    "--seeds", "2", *FAST)
    assert code == 0
    rows, summ = load_results(out)
    assert len(rows) == 2 * 2 * 2  # responses x alphas x seeds
    assert len(summ) == 4
    assert all(r["status"] == "ok" for r in rows)
    assert all(float(r["eval_err"]) <= 1e-8 for r in rows)


def test_experiment_gap_and_degenerate_small(tmp_path):
    code, out = run(tmp_path, "experiment", "gap", "--sizes", "5", "--bits-list", "4",
                    "--gaps", "0,1", "--seeds", "2", *FAST, name="gap")
    assert code == 0
    rows, _ = load_results(out)
    assert {r["gap"] for r in rows} == {"0.0", "1.0"}
    code, out = run(tmp_path, "experiment", "degenerate", "--sizes", "5", "--bits-list", "4",
                    "--seeds", "2", *FAST, name="deg")
    assert code == 0
    rows, _ = load_results(out)
    assert all(float(r["overlap"]) <= 1e-6 for r in rows)


def test_experiment_bits_sweep_writes_traces(tmp_path):
    code, out = run(tmp_path, "experiment", "bits-sweep", "--n", "6", "--bits-list", "2,4",
                    "--seeds", "1", "--timing", "work", *FAST)
    assert code == 0
    assert sorted(p.name for p in (out / "traces").iterdir()) == ["trace_b2_s0.csv", "trace_b4_s0.csv"]


def test_load_results_detects_tampering(tmp_path):
    code, out = run(tmp_path, "experiment", "gap", "--sizes", "4", "--bits-list", "2",
                    "--gaps", "1", "--seeds", "2", *FAST)
    assert code == 0
    path = out / "summary.csv"
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    fields = lines[1].split(",")
    k = header.index("mean_iterations")
    fields[k] = str(float(fields[k]) + 1)
    path.write_text("\n".join([lines[0], ",".join(fields)]) + "\n")
    with pytest.raises(ValueError, match="mean_iterations"):
        load_results(out)

import csv
import subprocess
import sys

import numpy as np
import pytest
import yaml

from motifgl.cli import main
from motifgl.generators import GraphModel, empirical_covariance, generate, sample_gmrf
from motifgl.graph import Graph, laplacian, read_edge_list, write_edge_list
from motifgl.harness import read_matrix, write_matrix


def cycle_file(path, n):
    write_edge_list(Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)]), path)
    return str(path)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_census_stdout(tmp_path, capsys):
    assert main(["census", cycle_file(tmp_path / "c.edges", 6)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "canonical_key,density"
    # one ball class (a path of three nodes) covering every node
    assert len(out) == 2 and out[1].split(",")[1] == "1"


def test_theorem1_to_file(tmp_path, capsys):
    a = cycle_file(tmp_path / "a.edges", 8)
    b = cycle_file(tmp_path / "b.edges", 12)
    assert main(["--out", str(tmp_path / "res"), "theorem1", a, b]) == 0
    table = dict(rows(tmp_path / "res" / "theorem1.csv")[1:])
    assert float(table["census_distance"]) == 0
    assert set(table) >= {"tr", "heat", "sqrt", "sq", "br"}


def test_solve_from_covariance(tmp_path, capsys):
    g = generate(GraphModel("small_world", {"n": 10, "neighbors": 4, "p_rw": 0.1}, seed=1))
    C = empirical_covariance(sample_gmrf(laplacian(g), 200, seed=2))
    write_matrix(tmp_path / "C.csv", C)
    ref = cycle_file(tmp_path / "ref.edges", 14)
    cfg = tmp_path / "solver.yaml"
    cfg.write_text(yaml.safe_dump({"beta": 2.0, "max_iters": 40, "gamma": 5.0}))
    code = main(["solve", "--covariance", str(tmp_path / "C.csv"), "--reference", ref,
                 "-g", "tr", "-g", "heat", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 0
    S = read_matrix(tmp_path / "o" / "estimate.csv")
    assert S.shape == (10, 10)
    np.testing.assert_allclose(S.sum(axis=1), 0, atol=1e-10)
    est = read_edge_list(tmp_path / "o" / "estimate.edges")
    assert est.n == 10
    obj = [float(r[1]) for r in rows(tmp_path / "o" / "objective.csv")[1:]]
    assert len(obj) <= 41 and np.all(np.diff(obj) <= 1e-9 * np.abs(obj[:-1]))


def test_solve_from_signals_unconstrained(tmp_path):
    X = sample_gmrf(laplacian(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])), 30, seed=0).X
    write_matrix(tmp_path / "x.csv", X)
    assert main(["solve", "--signals", str(tmp_path / "x.csv"), "--out", str(tmp_path / "o")]) == 0
    assert read_matrix(tmp_path / "o" / "estimate.csv").shape == (4, 4)


def test_experiment_and_gridsearch(tmp_path, capsys):
    spec = {
        "name": "cli",
        "graph_model": {"kind": "lattice", "params": {"n": 8, "neighbors": 2}},
        "reference_model": {"kind": "lattice", "params": {"n": 12, "neighbors": 2}},
        "sweep": {"param": "samples", "values": [40]},
        "realizations": 3,
        "methods": [
            {"label": "Pinv", "kind": "pinv"},
            {"label": "Unc", "kind": "unc", "config": {"beta": 2.0, "max_iters": 20}},
        ],
    }
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(spec))
    out = tmp_path / "out"
    assert main(["experiment", "--config", str(path), "--out", str(out), "-R", "2", "--seed", "5"]) == 0
    raw = rows(out / "cli" / "raw.csv")
    assert len(raw) == 1 + 2 * 2
    snap = yaml.safe_load((out / "cli" / "config.snapshot").read_text())
    assert snap["base_seed"] == 5 and snap["realizations"] == 2
    assert main(["--config", str(path), "--out", str(out), "gridsearch", "--method", "Unc",
                 "--grid", "beta=1,4", "-R", "1"]) == 0
    grid = rows(out / "gridsearch.csv")
    assert grid[0] == ["beta", "mean_error"] and len(grid) == 3


def test_errors_exit_nonzero(tmp_path, capsys):
    (tmp_path / "bad.edges").write_text("0 1\n")
    assert main(["census", str(tmp_path / "bad.edges")]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "motifgl.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("census", "theorem1", "solve", "experiment", "gridsearch"):
        assert cmd in res.stdout

import itertools

import pytest

import memsat


def test_formula_round_trip():
    f = memsat.Formula(3, [[1, -2], [2, 3], [-1, -3]])
    assert f.num_variables == 3
    assert f.num_clauses == 3
    g = memsat.parse_dimacs(f.to_dimacs())
    assert g.clauses() == f.clauses()


def test_bad_input_raises():
    with pytest.raises(ValueError):
        memsat.parse_dimacs("p cnf 2 1\n1 3 0\n")
    with pytest.raises(ValueError):
        memsat.Formula(2, [[1, 0]])


def test_count_unsat_matches_python():
    f = memsat.generate("random", 12, 4.0, seed=3)
    clauses = f.clauses()
    for bits in itertools.islice(itertools.product([False, True], repeat=12), 0, 4096, 97):
        expected = sum(not any((lit > 0) == bits[abs(lit) - 1] for lit in c) for c in clauses)
        assert f.count_unsat(list(bits)) == expected


def test_generators():
    f = memsat.generate("delta", 200, 5.0, seed=1)
    assert f.num_clauses == 1000
    assert f.num_literals == 3000
    assert memsat.xor_satisfiable("random", 30, 4.0) is None
    assert memsat.xor_satisfiable("xorsat", 100, 0.5, seed=1) is True


def test_solve_small_instance():
    f = memsat.generate("random", 20, 3.0, seed=2)
    r = memsat.solve(f, max_steps=50000, seed=1)
    assert r["bound_violations"] == 0
    assert f.count_unsat(r["assignment"]) == r["unsat_count"]
    assert r["unsat_count"] == memsat.brute_force_optimum(f)
    trace = r["trace"]
    assert trace["unsat_count"] == sorted(trace["unsat_count"], reverse=True)


def test_params_are_exposed():
    p = memsat.DmmParams()
    p.alpha = 1.5
    assert p.to_dict()["alpha"] == "1.5"


def test_walksat_reaches_optimum_on_tiny_formula():
    f = memsat.Formula(2, [[1], [-1], [1, 2]])
    r = memsat.walksat(f, max_flips=1000, seed=4)
    assert r["unsat_count"] == memsat.brute_force_optimum(f) == 1


def test_run_experiment(tmp_path):
    recs = memsat.run_experiment(
        {"n": "40,80", "solvers": "dmm,walksat", "threshold": "0.05", "repeats": "1", "reproducible": "true"},
        str(tmp_path),
    )
    assert len(recs) == 4
    assert (tmp_path / "records.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    assert all(r["best_unsat_fraction"] == r["best_unsat_count"] / r["num_clauses"] for r in recs)

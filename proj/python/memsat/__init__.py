"""Memcomputing Max-SAT solver bindings."""

from ._memsat import (
    DmmParams,
    Formula,
    FormulaError,
    ParseError,
    __version__,
    brute_force_optimum,
    generate,
    parse_dimacs,
    read_dimacs,
    run_experiment,
    solve,
    walksat,
    xor_satisfiable,
)


def unsat_fraction(formula, assignment):
    return formula.count_unsat(assignment) / formula.num_clauses


__all__ = [
    "DmmParams",
    "Formula",
    "FormulaError",
    "ParseError",
    "__version__",
    "brute_force_optimum",
    "generate",
    "parse_dimacs",
    "read_dimacs",
    "run_experiment",
    "solve",
    "unsat_fraction",
    "walksat",
    "xor_satisfiable",
]

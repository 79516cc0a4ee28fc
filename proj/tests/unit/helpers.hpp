#pragma once

#include <cstdint>
#include <vector>

#include "memsat/formula.hpp"
#include "memsat/rng.hpp"

namespace testutil {

using namespace memsat;

// (¬x1 ∨ x2) ∧ (¬x2 ∨ ¬x3 ∨ x4) ∧ (x1 ∨ ¬x2 ∨ x3 ∨ ¬x4) ∧ (¬x1 ∨ x4) ∧ (x1 ∨ x2 ∨ ¬x4)
inline CnfFormula example_phi() {
  auto c = [](std::initializer_list<int> lits) {
    Clause cl;
    for (int l : lits) cl.literals.push_back(Literal::from_dimacs(l));
    return cl;
  };
  return CnfFormula(4, {c({-1, 2}), c({-2, -3, 4}), c({1, -2, 3, -4}), c({-1, 4}), c({1, 2, -4})});
}

inline Clause make_clause(std::initializer_list<int> lits, std::uint64_t weight = 1, bool hard = false) {
  Clause cl;
  for (int l : lits) cl.literals.push_back(Literal::from_dimacs(l));
  cl.weight = weight;
  cl.hard = hard;
  return cl;
}

inline Assignment from_bits(std::uint64_t bits, std::uint32_t n) {
  Assignment a(n);
  for (std::uint32_t i = 0; i < n; ++i) a[i] = (bits >> i) & 1;
  return a;
}

// Straightforward evaluator kept separate from the library's.
inline std::uint64_t naive_unsat(const CnfFormula& f, const Assignment& a) {
  std::uint64_t bad = 0;
  for (const Clause& c : f.clauses()) {
    bool sat = false;
    for (const Literal& l : c.literals) sat = sat || (l.negated ? !a[l.var] : a[l.var]);
    bad += !sat;
  }
  return bad;
}

// Random mixed-width formula, optionally weighted with hard clauses.
inline CnfFormula random_formula(Rng& rng, std::uint32_t n, std::size_t m, bool weighted) {
  std::vector<Clause> clauses;
  for (std::size_t j = 0; j < m; ++j) {
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.below(std::min<std::uint32_t>(n, 4)));
    std::vector<std::uint32_t> vars(n);
    for (std::uint32_t i = 0; i < n; ++i) vars[i] = i;
    rng.shuffle(vars);
    Clause c;
    for (std::uint32_t t = 0; t < k; ++t) c.literals.push_back({vars[t], rng.coin()});
    if (weighted) {
      c.hard = rng.below(5) == 0;
      c.weight = c.hard ? 1 : 1 + rng.below(9);
    }
    clauses.push_back(std::move(c));
  }
  return CnfFormula(n, std::move(clauses));
}

}  // namespace testutil

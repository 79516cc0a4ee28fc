#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "memsat/baseline.hpp"
#include "memsat/gen.hpp"

using namespace memsat;
using testutil::from_bits;
using testutil::make_clause;

TEST_CASE("weighted break: absent variable, unweighted count, recount") {
  const CnfFormula f(3, {make_clause({1, 2}), make_clause({-1})});
  CHECK(weighted_break(f, {true, false, false}, 2) == 0);
  // x1=T alone satisfies (x1 ∨ x2)
  CHECK(weighted_break(f, {true, false, false}, 0) == 1);

  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t n = 3 + static_cast<std::uint32_t>(rng.below(18));
    const CnfFormula g = testutil::random_formula(rng, n, 5 + rng.below(40), i % 2 == 0);
    Assignment a = from_bits(rng.next(), n);
    const auto var = static_cast<std::uint32_t>(rng.below(n));
    std::uint64_t broken = 0;
    Assignment flipped = a;
    flipped[var] = !flipped[var];
    for (std::size_t c = 0; c < g.num_clauses(); ++c)
      if (clause_satisfied(g.clause(c), a) && !clause_satisfied(g.clause(c), flipped))
        broken += g.effective_weight(c);
    CHECK(weighted_break(g, a, var) == broken);
  }
}

TEST_CASE("incremental bookkeeping matches recomputation") {
  Rng rng(10);
  for (bool cc : {false, true}) {
    const auto f = std::make_shared<const CnfFormula>(testutil::random_formula(rng, 20, 90, true));
    LsConfig cfg;
    cfg.cc_enabled = cc;
    cfg.seed = 3;
    LocalSearch ls(f, cfg);
    for (int i = 0; i < 2000 && !ls.unsat_clauses().empty(); ++i) {
      ls.step();
      if (i % 37 == 0) {
        const Assignment a = ls.assignment();
        CHECK(ls.current() == count_unsat(*f, a));
        std::vector<std::uint32_t> expect;
        for (std::size_t c = 0; c < f->num_clauses(); ++c)
          if (!clause_satisfied(f->clause(c), a)) expect.push_back(static_cast<std::uint32_t>(c));
        std::vector<std::uint32_t> got = ls.unsat_clauses();
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
        for (std::uint32_t v = 0; v < 20; ++v) CHECK(ls.break_weight(v) == weighted_break(*f, a, v));
      }
    }
  }
}

TEST_CASE("configuration checking eligibility") {
  // x1 shares a clause with x2; x3 is unrelated to x1
  const auto f = std::make_shared<const CnfFormula>(
      CnfFormula(4, {make_clause({1, 2}), make_clause({3, 4}), make_clause({-1, -2})}));
  LsConfig cfg;
  cfg.cc_enabled = true;
  LocalSearch ls(f, cfg);
  for (std::uint32_t v = 0; v < 4; ++v) CHECK(ls.eligible(v));
  ls.flip(0);
  CHECK_FALSE(ls.eligible(0));
  CHECK(ls.eligible(1));
  ls.flip(2);
  CHECK_FALSE(ls.eligible(0));
  CHECK_FALSE(ls.eligible(2));
  CHECK(ls.eligible(3));
  ls.flip(1);
  CHECK(ls.eligible(0));
  CHECK_FALSE(ls.eligible(1));

  LsConfig plain;
  LocalSearch free(f, plain);
  free.flip(0);
  CHECK(free.eligible(0));
}

TEST_CASE("greedy break-zero flips satisfy the picked clause") {
  const auto f = std::make_shared<const CnfFormula>(generate_cnf({Family::random_e3sat, 40, 3.0, 4}));
  LsConfig cfg;
  cfg.noise = 0.0;
  cfg.seed = 8;
  LocalSearch ls(f, cfg);
  for (int i = 0; i < 500 && !ls.unsat_clauses().empty(); ++i) {
    const Assignment before = ls.assignment();
    const std::uint32_t v = ls.step();
    const bool break_zero = weighted_break(*f, before, v) == 0;
    if (break_zero) CHECK(count_unsat(*f, ls.assignment()).count < count_unsat(*f, before).count);
  }
}

TEST_CASE("single clause is solved in at most one flip") {
  const auto f = std::make_shared<const CnfFormula>(CnfFormula(3, {make_clause({1, -2, 3})}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LsConfig cfg;
    cfg.seed = seed;
    const LsResult r = walksat(f, cfg);
    CHECK(r.best_unsat.count == 0);
    CHECK(r.flips <= 1);
    CHECK(r.status == SolveStatus::threshold_met);
  }
}

TEST_CASE("cc never blocks on a single clause") {
  const auto f = std::make_shared<const CnfFormula>(CnfFormula(3, {make_clause({-1, -2, -3})}));
  LsConfig cfg;
  cfg.seed = 4;
  const LsResult a = walksat(f, cfg);
  const LsResult b = walksat_cc(f, cfg);
  CHECK(a.best == b.best);
  CHECK(a.flips == b.flips);
}

TEST_CASE("example formula reaches its optimum") {
  const auto f = std::make_shared<const CnfFormula>(testutil::example_phi());
  const std::uint64_t opt = brute_force_optimum(*f).min_unsat_weight;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LsConfig cfg;
    cfg.seed = seed;
    cfg.max_flips = 1000;
    CHECK(walksat(f, cfg).best_unsat.weight == opt);
  }
}

TEST_CASE("trace is monotone and runs are deterministic") {
  const auto f = std::make_shared<const CnfFormula>(generate_cnf({Family::random_e3sat, 100, 5.0, 3}));
  LsConfig cfg;
  cfg.seed = 5;
  cfg.max_flips = 20000;
  const LsResult a = walksat(f, cfg), b = walksat(f, cfg);
  for (std::size_t i = 1; i < a.trace.samples.size(); ++i)
    CHECK(a.trace.samples[i].best_unsat_count <= a.trace.samples[i - 1].best_unsat_count);
  CHECK(a.best == b.best);
  CHECK(a.flips == b.flips);
  CHECK(count_unsat(*f, a.best) == a.best_unsat);
  CHECK(a.trace.samples.back().machine_time == static_cast<double>(a.flips));
}

TEST_CASE("weighted run never prefers soft weight over a hard clause") {
  const auto f = std::make_shared<const CnfFormula>(CnfFormula(
      2, {make_clause({1}, 1, true), make_clause({-1}, 5), make_clause({-1, 2}, 3), make_clause({-2}, 2)}));
  LsConfig cfg;
  cfg.max_flips = 2000;
  const LsResult r = walksat(f, cfg);
  CHECK(r.best[0]);
  CHECK(r.best_unsat.weight == brute_force_optimum(*f).min_unsat_weight);
}

TEST_CASE("delta n=400 needs more flips than n=200") {
  auto flips_to = [](std::uint32_t n, std::uint64_t seed) {
    const auto f = std::make_shared<const CnfFormula>(generate_cnf({Family::delta_e3sat, n, 5.0, seed}));
    LsConfig cfg;
    cfg.noise = 0.05;
    cfg.threshold = 0.015;
    cfg.seed = seed;
    cfg.max_flips = 20'000'000;
    return walksat(f, cfg).flips;
  };
  std::vector<std::uint64_t> small, large;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    small.push_back(flips_to(200, s));
    large.push_back(flips_to(400, s));
  }
  std::sort(small.begin(), small.end());
  std::sort(large.begin(), large.end());
  CHECK(large[2] > small[2]);
}

TEST_CASE("config validation") {
  LsConfig c;
  c.noise = 1.5;
  CHECK_THROWS(c.validate());
  LsConfig d;
  d.max_flips = 0;
  CHECK_THROWS(d.validate());
}

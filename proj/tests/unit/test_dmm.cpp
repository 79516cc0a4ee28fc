#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "memsat/dmm.hpp"
#include "memsat/gen.hpp"

using namespace memsat;
using testutil::make_clause;

namespace {

// Direct transcription of the flow equations, one literal at a time.
DmmDerivative reference_flow(const DmmState& s, const Circuit& c) {
  const DmmParams& p = c.params();
  DmmDerivative d;
  d.dv.assign(c.num_variables(), 0.0);
  d.dxs.assign(c.num_gates(), 0.0);
  d.dxl.assign(c.num_gates(), 0.0);
  for (std::size_t m = 0; m < c.num_gates(); ++m) {
    const auto vars = c.gate_vars(m);
    const auto q = c.gate_polarity(m);
    auto term = [&](std::size_t j) { return (1.0 - q[j] * s.v[vars[j]]) / 2.0; };
    std::size_t arg = 0;
    for (std::size_t j = 1; j < vars.size(); ++j)
      if (term(j) < term(arg) || (term(j) == term(arg) && vars[j] < vars[arg])) arg = j;
    const double cm = term(arg);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      double others = 1.0;
      bool any = false;
      for (std::size_t j = 0; j < vars.size(); ++j)
        if (j != i) {
          others = any ? std::min(others, term(j)) : term(j);
          any = true;
        }
      const double g = 0.5 * q[i] * others;
      const double r = i == arg ? 0.5 * (q[i] - s.v[vars[i]]) : 0.0;
      d.dv[vars[i]] += c.current_scale(m) *
                       (s.xl[m] * s.xs[m] * g + (1.0 + p.zeta * s.xl[m]) * (1.0 - s.xs[m]) * r);
    }
    d.dxs[m] = p.beta * (s.xs[m] + p.epsilon) * (cm - p.gamma);
    d.dxl[m] = p.alpha * (cm - p.delta);
  }
  return d;
}

DmmState random_state(const Circuit& c, Rng& rng) {
  DmmState s;
  for (std::size_t i = 0; i < c.num_variables(); ++i) s.v.push_back(rng.uniform(-1, 1));
  for (std::size_t m = 0; m < c.num_gates(); ++m) {
    s.xs.push_back(rng.uniform());
    s.xl.push_back(1.0 + 50.0 * rng.uniform());
  }
  return s;
}

}  // namespace

TEST_CASE("circuit of the example formula") {
  const Circuit c = build_circuit(testutil::example_phi());
  CHECK(c.num_variables() == 4);
  CHECK(c.num_gates() == 5);
  CHECK(c.num_terminals() == 14);
  // x1 appears in gates 0, 2, 3, 4; x3 only in 1 and 2
  CHECK(std::vector<std::uint32_t>(c.var_gates(0).begin(), c.var_gates(0).end()) ==
        std::vector<std::uint32_t>{0, 2, 3, 4});
  CHECK(std::vector<std::uint32_t>(c.var_gates(2).begin(), c.var_gates(2).end()) ==
        std::vector<std::uint32_t>{1, 2});
  for (std::size_t m = 0; m < 5; ++m) CHECK(c.current_scale(m) == 1.0);
  CHECK(c.gate_polarity(0)[0] == -1.0);
  CHECK(c.gate_polarity(0)[1] == 1.0);
}

TEST_CASE("hard gate current exceeds its soft neighbourhood") {
  const CnfFormula f(4, {make_clause({1, 2}, 1, true), make_clause({1, 3}, 2), make_clause({-2, 4}, 3),
                         make_clause({4}, 7)});
  const Circuit c = build_circuit(f);
  CHECK(c.is_hard(0));
  CHECK(c.current_scale(0) == 6.0);
  CHECK(c.current_scale(1) == 2.0);
  CHECK(c.current_scale(3) == 7.0);
  CHECK(c.check_current_scales() == -1);
}

TEST_CASE("clause satisfaction values") {
  const CnfFormula f(3, {make_clause({1, 2, 3}), make_clause({-1, 2})});
  const Circuit c = build_circuit(f);
  const std::vector<double> a{1, -1, -1}, b{-1, -1, -1}, h{0.5, -0.5, 0};
  CHECK(clause_satisfaction(c, 0, a) == 0.0);
  CHECK(clause_satisfaction(c, 0, b) == 1.0);
  CHECK(clause_satisfaction(c, 1, h) == doctest::Approx(0.75));
}

TEST_CASE("flow field matches the reference transcription") {
  Rng rng(4);
  for (int i = 0; i < 40; ++i) {
    const CnfFormula f = i % 2 ? testutil::random_formula(rng, 10, 30, i % 4 == 1)
                               : generate_cnf({Family::random_e3sat, 12, 4.0, rng.next()});
    const Circuit c = build_circuit(f);
    const DmmState s = random_state(c, rng);
    const DmmDerivative got = flow_field(s, c);
    const DmmDerivative want = reference_flow(s, c);
    for (std::size_t k = 0; k < want.dv.size(); ++k) CHECK(got.dv[k] == doctest::Approx(want.dv[k]));
    for (std::size_t k = 0; k < want.dxs.size(); ++k) {
      CHECK(got.dxs[k] == doctest::Approx(want.dxs[k]));
      CHECK(got.dxl[k] == doctest::Approx(want.dxl[k]));
    }
  }
}

TEST_CASE("ties on the argmin go to the lowest variable") {
  // (x3 ∨ x1) with both voltages equal: rigidity lands on x1
  const CnfFormula f(3, {make_clause({3, 1})});
  const Circuit c = build_circuit(f);
  DmmState s{{-0.5, 0.0, -0.5}, {0.0}, {1.0}, 0.0};
  const DmmDerivative d = flow_field(s, c);
  CHECK(d.dv[0] > 0.0);
  CHECK(d.dv[2] == 0.0);
}

TEST_CASE("satisfied state with xs at zero is an equilibrium") {
  const CnfFormula phi = testutil::example_phi();
  const Circuit c = build_circuit(phi);
  DmmState s{{-1, -1, -1, -1}, std::vector<double>(5, 0.0), std::vector<double>(5, 1.0), 0.0};
  const DmmDerivative d = flow_field(s, c);
  for (double x : d.dv) CHECK(x == 0.0);
  for (std::size_t m = 0; m < 5; ++m) CHECK(clause_satisfaction(c, m, s.v) == 0.0);
  CHECK(count_unsat(phi, readout(s)).count == 0);
}

TEST_CASE("unit clause pushes towards its rail") {
  const Circuit c = build_circuit(CnfFormula(1, {make_clause({1})}));
  DmmState s{{-1.0}, {c.params().epsilon}, {1.0}, 0.0};
  const DmmDerivative d = flow_field(s, c);
  CHECK(d.dv[0] > 0.0);
  const Circuit neg = build_circuit(CnfFormula(1, {make_clause({-1})}));
  s.v[0] = 1.0;
  CHECK(flow_field(s, neg).dv[0] < 0.0);
}

TEST_CASE("doubling weights doubles voltage currents") {
  Rng rng(8);
  std::vector<Clause> base, twice;
  const CnfFormula f = testutil::random_formula(rng, 8, 20, false);
  for (const Clause& c : f.clauses()) {
    base.push_back(c);
    base.back().weight = 1 + rng.below(4);
    twice.push_back(base.back());
    twice.back().weight *= 2;
  }
  const Circuit a = build_circuit(CnfFormula(8, base)), b = build_circuit(CnfFormula(8, twice));
  const DmmState s = random_state(a, rng);
  const DmmDerivative da = flow_field(s, a), db = flow_field(s, b);
  for (std::size_t i = 0; i < da.dv.size(); ++i) CHECK(db.dv[i] == doctest::Approx(2.0 * da.dv[i]));
}

TEST_CASE("unweighted flow equals unit-weight flow") {
  Rng rng(12);
  const CnfFormula f = testutil::random_formula(rng, 9, 25, false);
  std::vector<Clause> explicit_w(f.clauses());
  const Circuit a = build_circuit(f), b = build_circuit(CnfFormula(9, explicit_w));
  const DmmState s = random_state(a, rng);
  CHECK(flow_field(s, a).dv == flow_field(s, b).dv);
}

TEST_CASE("inconsistent hard gate wins over consistent soft neighbours") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    // hard (x1 ∨ x2 ∨ x3) fully violated; soft clauses each satisfied by a fourth variable at its rail
    std::vector<Clause> cl{make_clause({1, 2, 3}, 1, true)};
    for (int j = 0; j < 6; ++j) {
      const int a = 1 + static_cast<int>(rng.below(3));
      cl.push_back(make_clause({rng.coin() ? a : -a, 4 + j}, 1 + rng.below(5)));
    }
    const CnfFormula f(9, cl);
    const Circuit c = build_circuit(f);
    DmmState s;
    s.v = {-1, -1, -1, 1, 1, 1, 1, 1, 1};
    for (std::size_t m = 0; m < c.num_gates(); ++m) {
      s.xs.push_back(rng.uniform());
      s.xl.push_back(1.0 + 10 * rng.uniform());
    }
    REQUIRE(clause_satisfaction(c, 0, s.v) == 1.0);
    const DmmDerivative d = flow_field(s, c);
    // every terminal of the hard gate moves toward true; the rigidity term
    // only acts on x1, the gradient term on all three
    CHECK(d.dv[0] > 0.0);
    CHECK(d.dv[1] >= 0.0);
    CHECK(d.dv[2] >= 0.0);
  }
}

TEST_CASE("flow cost scales with literal count") {
  const Circuit a = build_circuit(generate_cnf({Family::random_e3sat, 200, 4.0, 1}));
  const Circuit b = build_circuit(generate_cnf({Family::random_e3sat, 400, 4.0, 1}));
  DmmDerivative d;
  const auto sa = flow_field(init_state(a, 1), a, d);
  const auto sb = flow_field(init_state(b, 1), b, d);
  CHECK(sa.literal_visits == 2400);
  CHECK(sb.literal_visits == 2 * sa.literal_visits);
}

TEST_CASE("non-finite voltages are reported with a gate") {
  const Circuit c = build_circuit(testutil::example_phi());
  DmmState s = init_state(c, 3);
  s.v[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(flow_field(s, c), FlowError);
}

TEST_CASE("readout") {
  CHECK(readout(std::vector<double>{1.0, -1.0}) == Assignment{true, false});
  CHECK(readout(std::vector<double>{0.01, -0.01, 0.0}) == Assignment{true, false, true});
}

TEST_CASE("init state is deterministic and in bounds") {
  const Circuit c = build_circuit(generate_cnf({Family::random_e3sat, 30, 4.0, 2}));
  CHECK(init_state(c, 5).v == init_state(c, 5).v);
  CHECK(init_state(c, 5).v != init_state(c, 6).v);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const DmmState s = init_state(c, seed);
    REQUIRE(state_in_bounds(s, c));
    CHECK(s.xl == std::vector<double>(c.num_gates(), 1.0));
  }
}

TEST_CASE("clamping") {
  const Circuit c = build_circuit(testutil::example_phi());
  DmmState s{{1.5, -3.0, 0.2, 1.0}, {-0.1, 2.0, 0.5, 0.5, 0.5}, {0.0, 1e12, 2.0, 1.0, 1.0}, 0.0};
  CHECK_FALSE(state_in_bounds(s, c));
  clamp_state(s, c);
  CHECK(s.v[0] == 1.0);
  CHECK(s.v[1] == -1.0);
  CHECK(s.xs[0] == 0.0);
  CHECK(s.xs[1] == 1.0);
  CHECK(s.xl[0] == 1.0);
  CHECK(s.xl[1] == c.xl_max());
  CHECK(state_in_bounds(s, c));
}

TEST_CASE("state dumps") {
  const Circuit c = build_circuit(testutil::example_phi());
  DmmState s = init_state(c, 9);
  s.t = 3.25;
  std::stringstream bin;
  write_state_binary(bin, s);
  const DmmState back = read_state_binary(bin);
  CHECK(back.v == s.v);
  CHECK(back.xs == s.xs);
  CHECK(back.xl == s.xl);
  CHECK(back.t == s.t);

  std::stringstream csv;
  write_state_csv(csv, s);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "block,index,value");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 4 + 5 + 5 + 1);
}

TEST_CASE("params validation and key-values") {
  DmmParams p;
  p.gamma = 1.5;
  CHECK_THROWS(p.validate());
  DmmParams q;
  q.alpha = 2.5;
  const DmmParams r = DmmParams::from_kv(q.to_kv());
  CHECK(r.alpha == 2.5);
  CHECK(r.beta == q.beta);
}

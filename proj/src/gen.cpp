#include "memsat/gen.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "memsat/config.hpp"
#include "memsat/rng.hpp"

namespace memsat {

std::string to_string(Family f) {
  switch (f) {
    case Family::random_e3sat: return "random_e3sat";
    case Family::hyper_e3sat: return "hyper_e3sat";
    case Family::delta_e3sat: return "delta_e3sat";
    case Family::xorsat: return "xorsat";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "random_e3sat" || s == "random") return Family::random_e3sat;
  if (s == "hyper_e3sat" || s == "hyper") return Family::hyper_e3sat;
  if (s == "delta_e3sat" || s == "delta") return Family::delta_e3sat;
  if (s == "xorsat" || s == "xor") return Family::xorsat;
  throw std::invalid_argument("unknown family '" + s + "'");
}

void XorSystem::validate() const {
  for (std::size_t e = 0; e < equations.size(); ++e) {
    const auto& v = equations[e].vars;
    for (auto x : v)
      if (x >= num_variables)
        throw FormulaError("equation " + std::to_string(e) + " references variable " +
                           std::to_string(x + 1) + " > " + std::to_string(num_variables));
    if (v[0] == v[1] || v[0] == v[2] || v[1] == v[2])
      throw FormulaError("equation " + std::to_string(e) + " repeats a variable");
  }
}

bool XorSystem::satisfied_by(const Assignment& a) const { return count_violated(a) == 0; }

std::size_t XorSystem::count_violated(const Assignment& a) const {
  if (a.size() != num_variables) throw std::invalid_argument("assignment length mismatch");
  std::size_t bad = 0;
  for (const auto& eq : equations) {
    const bool parity = a[eq.vars[0]] ^ a[eq.vars[1]] ^ a[eq.vars[2]];
    bad += parity != eq.rhs ? 1 : 0;
  }
  return bad;
}

std::size_t GenSpec::num_clauses() const {
  return static_cast<std::size_t>(std::llround(density * static_cast<double>(n)));
}

std::size_t GenSpec::num_xor_equations() const {
  switch (family) {
    case Family::xorsat: return num_clauses();
    case Family::hyper_e3sat:
    case Family::delta_e3sat: return num_clauses() / 4;
    case Family::random_e3sat: return 0;
  }
  return 0;
}

void GenSpec::validate() const {
  if (n < 3) throw std::invalid_argument("n must be at least 3, got " + std::to_string(n));
  if (!(density > 0.0) || !std::isfinite(density))
    throw std::invalid_argument("density must be positive");
  if (family == Family::delta_e3sat && n < 4)
    throw std::invalid_argument("delta instances need n >= 4");
  if (family == Family::hyper_e3sat || family == Family::delta_e3sat) {
    const std::size_t m = num_clauses();
    if (m == 0 || m % 4 != 0)
      throw std::invalid_argument("round(density * n) = " + std::to_string(m) +
                                  " is not a positive multiple of 4");
  } else if (num_clauses() == 0) {
    throw std::invalid_argument("density * n rounds to zero clauses");
  }
}

std::string GenSpec::descriptor() const {
  std::ostringstream s;
  s << to_string(family) << "_n" << n << "_r" << format_double(density) << "_s" << seed;
  if (rhs == XorRhs::ones && family != Family::random_e3sat) s << "_b1";
  return s.str();
}

std::map<std::string, std::string> GenSpec::to_kv() const {
  return {{"family", to_string(family)},
          {"n", std::to_string(n)},
          {"density", format_double(density)},
          {"seed", std::to_string(seed)},
          {"rhs", rhs == XorRhs::ones ? "ones" : "random"}};
}

GenSpec GenSpec::from_kv(const std::map<std::string, std::string>& kv) {
  GenSpec spec;
  spec.family = family_from_string(kv_string(kv, "family", "random_e3sat"));
  spec.n = static_cast<std::uint32_t>(kv_u64(kv, "n", 0));
  spec.density = kv_double(kv, "density", 0.0);
  spec.seed = kv_u64(kv, "seed", 0);
  const std::string rhs = kv_string(kv, "rhs", "random");
  if (rhs == "ones") spec.rhs = XorRhs::ones;
  else if (rhs == "random") spec.rhs = XorRhs::random;
  else throw std::invalid_argument("rhs must be 'random' or 'ones'");
  return spec;
}

namespace {

std::array<std::uint32_t, 3> draw_three_distinct(Rng& rng, std::uint32_t n) {
  std::array<std::uint32_t, 3> v{};
  v[0] = static_cast<std::uint32_t>(rng.below(n));
  do v[1] = static_cast<std::uint32_t>(rng.below(n));
  while (v[1] == v[0]);
  do v[2] = static_cast<std::uint32_t>(rng.below(n));
  while (v[2] == v[0] || v[2] == v[1]);
  return v;
}

void assign_rhs(Rng& rng, XorSystem& sys, XorRhs rhs) {
  for (auto& eq : sys.equations) eq.rhs = rhs == XorRhs::ones ? true : rng.coin();
}

}  // namespace

CnfFormula gen_random_e3sat(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t m = spec.num_clauses();
  std::vector<Clause> clauses;
  clauses.reserve(m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto vars = draw_three_distinct(rng, spec.n);
    Clause cl;
    for (auto v : vars) cl.literals.push_back(Literal{v, rng.coin()});
    clauses.push_back(std::move(cl));
  }
  return CnfFormula(spec.n, std::move(clauses));
}

XorSystem gen_xorsat(std::uint32_t n, std::size_t num_equations, std::uint64_t seed, XorRhs rhs) {
  if (n < 3) throw std::invalid_argument("n must be at least 3, got " + std::to_string(n));
  Rng rng(seed);
  XorSystem sys{n, {}};
  sys.equations.reserve(num_equations);
  for (std::size_t e = 0; e < num_equations; ++e) {
    XorEquation eq;
    eq.vars = draw_three_distinct(rng, n);
    eq.rhs = rhs == XorRhs::ones ? true : rng.coin();
    sys.equations.push_back(eq);
  }
  return sys;
}

XorSystem gen_xorsat(const GenSpec& spec) {
  if (spec.n < 3) throw std::invalid_argument("n must be at least 3, got " + std::to_string(spec.n));
  return gen_xorsat(spec.n, spec.num_clauses(), spec.seed, spec.rhs);
}

XorSystem gen_delta_xorsat(std::uint32_t n, std::size_t num_equations, std::uint64_t seed,
                           XorRhs rhs) {
  if (n < 4) throw std::invalid_argument("delta XORSAT needs n >= 4, got " + std::to_string(n));
  Rng rng(seed);
  const std::size_t slots_total = 3 * num_equations;

  // Which variables get the extra occurrence is itself random.
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t base = slots_total / n;
  const std::size_t extra = slots_total % n;
  std::vector<std::uint32_t> slots;
  slots.reserve(slots_total);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < base + (i < extra ? 1 : 0); ++k) slots.push_back(order[i]);
  rng.shuffle(slots);

  // Repair repeated variables inside a triple by swapping with slots of other
  // triples. A swap is taken only if it leaves the other triple valid, so every
  // triple before the current one stays valid.
  const std::size_t max_attempts = 100 * num_equations;
  std::size_t attempts = 0;
  auto in_triple_except = [&](std::size_t triple, std::size_t skip, std::uint32_t value) {
    for (std::size_t p = 3 * triple; p < 3 * triple + 3; ++p)
      if (p != skip && slots[p] == value) return true;
    return false;
  };
  for (std::size_t t = 0; t < num_equations; ++t) {
    for (;;) {
      const std::size_t b = 3 * t;
      std::size_t bad = slots_total;
      if (slots[b + 1] == slots[b]) bad = b + 1;
      else if (slots[b + 2] == slots[b] || slots[b + 2] == slots[b + 1]) bad = b + 2;
      if (bad == slots_total) break;
      if (num_equations < 2 || attempts++ >= max_attempts)
        throw std::runtime_error("delta XORSAT repair failed for n=" + std::to_string(n) +
                                 ", m=" + std::to_string(num_equations));
      std::size_t other = rng.below(slots_total - 3);
      if (other >= b) other += 3;
      const std::size_t ot = other / 3;
      if (!in_triple_except(t, bad, slots[other]) && !in_triple_except(ot, other, slots[bad]))
        std::swap(slots[bad], slots[other]);
    }
  }

  XorSystem sys{n, {}};
  sys.equations.resize(num_equations);
  for (std::size_t t = 0; t < num_equations; ++t)
    sys.equations[t].vars = {slots[3 * t], slots[3 * t + 1], slots[3 * t + 2]};
  assign_rhs(rng, sys, rhs);
  return sys;
}

XorSystem gen_delta_xorsat(const GenSpec& spec) {
  return gen_delta_xorsat(spec.n, spec.num_clauses(), spec.seed, spec.rhs);
}

CnfFormula xor_to_cnf(const XorSystem& sys) {
  sys.validate();
  // Negation patterns (x, y, z) of the four clauses. For rhs = 1 these are the
  // even-negation patterns; rhs = 0 flips x in each.
  static constexpr bool kOdd[4][3] = {
      {false, false, false}, {false, true, true}, {true, true, false}, {true, false, true}};
  std::vector<Clause> clauses;
  clauses.reserve(4 * sys.equations.size());
  for (const auto& eq : sys.equations) {
    for (const auto& pattern : kOdd) {
      Clause cl;
      for (int k = 0; k < 3; ++k) {
        bool neg = pattern[k];
        if (k == 0 && !eq.rhs) neg = !neg;
        cl.literals.push_back(Literal{eq.vars[k], neg});
      }
      clauses.push_back(std::move(cl));
    }
  }
  return CnfFormula(sys.num_variables, std::move(clauses));
}

std::optional<XorSystem> generate_xor(const GenSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::random_e3sat: return std::nullopt;
    case Family::xorsat: return gen_xorsat(spec);
    case Family::hyper_e3sat:
      return gen_xorsat(spec.n, spec.num_xor_equations(), spec.seed, spec.rhs);
    case Family::delta_e3sat:
      return gen_delta_xorsat(spec.n, spec.num_xor_equations(), spec.seed, spec.rhs);
  }
  return std::nullopt;
}

CnfFormula generate_cnf(const GenSpec& spec) {
  if (spec.family == Family::random_e3sat) return gen_random_e3sat(spec);
  return xor_to_cnf(*generate_xor(spec));
}

Gf2Result gf2_solve(const XorSystem& sys) {
  sys.validate();
  const std::size_t n = sys.num_variables;
  const std::size_t m = sys.equations.size();
  const std::size_t rhs_bit = n;
  const std::size_t id_base = n + 1;
  const std::size_t words = (n + 1 + m + 63) / 64;

  // Row layout: [coefficients | rhs | identity over equations].
  std::vector<std::uint64_t> rows(m * words, 0);
  auto row = [&](std::size_t r) { return rows.data() + r * words; };
  auto set = [](std::uint64_t* r, std::size_t bit) { r[bit / 64] |= 1ULL << (bit % 64); };
  auto test = [](const std::uint64_t* r, std::size_t bit) { return (r[bit / 64] >> (bit % 64)) & 1; };
  for (std::size_t e = 0; e < m; ++e) {
    const auto& eq = sys.equations[e];
    for (auto v : eq.vars) set(row(e), v);
    if (eq.rhs) set(row(e), rhs_bit);
    set(row(e), id_base + e);
  }

  std::vector<std::size_t> pivot_col;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < n && rank < m; ++col) {
    std::size_t p = rank;
    while (p < m && !test(row(p), col)) ++p;
    if (p == m) continue;
    if (p != rank) std::swap_ranges(row(p), row(p) + words, row(rank));
    for (std::size_t r = 0; r < m; ++r) {
      if (r != rank && test(row(r), col)) {
        std::uint64_t* dst = row(r);
        const std::uint64_t* src = row(rank);
        for (std::size_t w = col / 64; w < words; ++w) dst[w] ^= src[w];
      }
    }
    pivot_col.push_back(col);
    ++rank;
  }

  Gf2Result result;
  for (std::size_t r = rank; r < m; ++r) {
    if (test(row(r), rhs_bit)) {
      for (std::size_t e = 0; e < m; ++e)
        if (test(row(r), id_base + e)) result.certificate.push_back(e);
      return result;
    }
  }
  result.sat = true;
  result.solution.assign(n, false);
  for (std::size_t r = 0; r < rank; ++r) result.solution[pivot_col[r]] = test(row(r), rhs_bit);
  return result;
}

Optimum brute_force_optimum(const CnfFormula& formula) {
  const std::uint32_t n = formula.num_variables();
  if (n > kBruteForceMaxVars)
    throw std::invalid_argument("brute force limited to " + std::to_string(kBruteForceMaxVars) +
                                " variables, got " + std::to_string(n));
  const std::size_t m = formula.num_clauses();
  std::vector<std::vector<std::pair<std::uint32_t, bool>>> occ(n);
  for (std::size_t c = 0; c < m; ++c)
    for (const auto& lit : formula.clause(c).literals)
      occ[lit.var].emplace_back(static_cast<std::uint32_t>(c), lit.negated);

  Assignment a(n, false);
  std::vector<std::uint32_t> true_count(m, 0);
  std::uint64_t weight = 0;
  for (std::size_t c = 0; c < m; ++c) {
    for (const auto& lit : formula.clause(c).literals) true_count[c] += lit.negated ? 1 : 0;
    if (true_count[c] == 0) weight += formula.effective_weight(c);
  }

  Optimum best{weight, a};
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t i = 1; i < total && best.min_unsat_weight > 0; ++i) {
    const auto v = static_cast<std::uint32_t>(std::countr_zero(i));
    a[v] = !a[v];
    for (const auto& [c, negated] : occ[v]) {
      if (a[v] != negated) {
        if (true_count[c]++ == 0) weight -= formula.effective_weight(c);
      } else {
        if (--true_count[c] == 0) weight += formula.effective_weight(c);
      }
    }
    if (weight < best.min_unsat_weight) {
      best.min_unsat_weight = weight;
      best.witness = a;
    }
  }
  return best;
}

void write_xor(std::ostream& out, const XorSystem& sys) {
  out << "p xor " << sys.num_variables << ' ' << sys.equations.size() << '\n';
  for (const auto& eq : sys.equations)
    out << eq.vars[0] + 1 << ' ' << eq.vars[1] + 1 << ' ' << eq.vars[2] + 1 << ' '
        << (eq.rhs ? 1 : 0) << '\n';
}

XorSystem parse_xor(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  XorSystem sys;
  std::size_t declared = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == 'c') continue;
    std::istringstream ls(line);
    if (!have_header) {
      std::string p, kind;
      if (!(ls >> p >> kind >> sys.num_variables >> declared) || p != "p" || kind != "xor")
        throw ParseError(number, "expected 'p xor n m'");
      have_header = true;
      continue;
    }
    long long i = 0, j = 0, k = 0, b = 0;
    if (!(ls >> i >> j >> k >> b) || i < 1 || j < 1 || k < 1 || (b != 0 && b != 1) ||
        i > sys.num_variables || j > sys.num_variables || k > sys.num_variables)
      throw ParseError(number, "malformed equation line");
    sys.equations.push_back(XorEquation{
        {static_cast<std::uint32_t>(i - 1), static_cast<std::uint32_t>(j - 1),
         static_cast<std::uint32_t>(k - 1)},
        b == 1});
  }
  if (!have_header) throw ParseError(number, "missing 'p xor' header");
  if (sys.equations.size() != declared)
    throw ParseError(number, "expected " + std::to_string(declared) + " equations, found " +
                                 std::to_string(sys.equations.size()));
  try {
    sys.validate();
  } catch (const FormulaError& e) {
    throw ParseError(number, e.what());
  }
  return sys;
}

}  // namespace memsat

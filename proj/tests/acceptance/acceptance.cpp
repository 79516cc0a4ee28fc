// Acceptance run: one PASS/FAIL line per criterion.
//
//   memsat_acceptance [--out DIR] [--only 1,2,...] [--workers N] [--known-fail 6,...]
//
// Exit status is the number of failed criteria not listed in --known-fail.
// Known failures still print FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memsat/baseline.hpp"
#include "memsat/bench.hpp"
#include "memsat/dmm.hpp"
#include "memsat/formula.hpp"
#include "memsat/gen.hpp"
#include "memsat/integrator.hpp"

using namespace memsat;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Runs that feed the bounded-orbit check.
struct OrbitLedger {
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::size_t non_finite = 0;
  std::size_t errors = 0;

  void add(const SolveResult& r) {
    ++runs;
    violations += r.bound_violations;
    auto finite = [](const std::vector<double>& xs) {
      return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
    };
    const DmmState& s = r.final_state;
    if (!finite(s.v) || !finite(s.xs) || !finite(s.xl) || !std::isfinite(s.t)) ++non_finite;
  }
  void add(const BenchRecord& r) {
    if (r.solver != SolverId::dmm) return;
    ++runs;
    violations += r.bound_violations;
    if (r.status == "failed") ++errors;
  }
};

OrbitLedger g_orbits;

Assignment bits(std::uint64_t b, std::uint32_t n) {
  Assignment a(n);
  for (std::uint32_t i = 0; i < n; ++i) a[i] = (b >> i) & 1;
  return a;
}

// Exhaustive minimum of the effective unsat weight, written without the library oracle.
std::uint64_t enumerate_optimum(const CnfFormula& f) {
  std::uint64_t best = ~0ull;
  for (std::uint64_t b = 0; b < (1ull << f.num_variables()); ++b) {
    const Assignment a = bits(b, f.num_variables());
    std::uint64_t w = 0;
    for (std::size_t c = 0; c < f.num_clauses(); ++c)
      if (!clause_satisfied(f.clause(c), a)) w += f.effective_weight(c);
    best = std::min(best, w);
  }
  return best;
}

bool brute_xor_sat(const XorSystem& sys) {
  for (std::uint64_t b = 0; b < (1ull << sys.num_variables); ++b) {
    bool ok = true;
    for (const auto& eq : sys.equations) {
      const bool lhs = ((b >> eq.vars[0]) ^ (b >> eq.vars[1]) ^ (b >> eq.vars[2])) & 1;
      if (lhs != eq.rhs) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size();
  return k % 2 ? xs[k / 2] : 0.5 * (xs[k / 2 - 1] + xs[k / 2]);
}

std::string fmt(double x, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

IntegratorConfig steps_budget(std::uint64_t steps) {
  IntegratorConfig cfg;
  cfg.stop.max_steps = steps;
  return cfg;
}

// ---------------------------------------------------------------------------

Verdict xor_block() {
  int bad = 0;
  for (bool rhs : {false, true}) {
    const XorSystem sys{3, {{{0, 1, 2}, rhs}}};
    const CnfFormula f = xor_to_cnf(sys);
    for (std::uint64_t b = 0; b < 8; ++b) {
      const bool holds = (((b ^ (b >> 1) ^ (b >> 2)) & 1) != 0) == rhs;
      if (count_unsat(f, bits(b, 3)).count != (holds ? 0u : 1u)) ++bad;
    }
  }
  return {bad == 0, std::to_string(16 - bad) + "/16 assignments match (both rhs)"};
}

Verdict gf2_oracle() {
  Rng rng(2024);
  int agree = 0, sat = 0;
  for (int i = 0; i < 200; ++i) {
    const auto n = 3 + static_cast<std::uint32_t>(rng.below(13));
    const std::size_t m = 1 + rng.below(2 * n);
    const XorSystem sys = (i % 2 == 0 && n >= 4) ? gen_delta_xorsat(n, m, rng.next()) : gen_xorsat(n, m, rng.next());
    const Gf2Result r = gf2_solve(sys);
    const bool truth = brute_xor_sat(sys);
    bool ok = r.sat == truth;
    if (ok && r.sat) ok = sys.satisfied_by(r.solution);
    agree += ok;
    sat += truth;
  }
  return {agree == 200, std::to_string(agree) + "/200 agree (" + std::to_string(sat) + " satisfiable)"};
}

Verdict tiny_optimum() {
  Rng rng(77);
  int hit = 0, below = 0;
  for (int i = 0; i < 50; ++i) {
    const auto n = 8 + static_cast<std::uint32_t>(rng.below(9));
    const double rho = 3.0 + 3.0 * rng.uniform();
    const CnfFormula f = generate_cnf({Family::random_e3sat, n, rho, rng.next()});
    const std::uint64_t opt = enumerate_optimum(f);
    IntegratorConfig cfg = steps_budget(100'000);
    // stopping once the optimum fraction is reached does not change the best found
    cfg.stop.threshold = static_cast<double>(opt) / f.num_clauses();
    const SolveResult r = solve(f, DmmParams{}, cfg, 1000 + i);
    g_orbits.add(r);
    const std::uint64_t got = count_unsat(f, r.best).weight;
    if (got != r.best_unsat.weight || got < opt) ++below;
    hit += got == opt;
  }
  const bool pass = hit >= 45 && below == 0;
  return {pass, std::to_string(hit) + "/50 at optimum (need 45), " + std::to_string(below) + " unsound"};
}

Verdict xorsat_solving() {
  int solved = 0, tried = 0;
  std::uint64_t seed = 1;
  std::vector<double> times;
  while (tried < 20) {
    const XorSystem sys = gen_delta_xorsat(200, 100, seed++);
    if (!gf2_solve(sys).sat) continue;
    ++tried;
    IntegratorConfig cfg;
    cfg.stop.max_machine_time = 1e4;
    cfg.stop.max_steps = std::numeric_limits<std::uint64_t>::max();
    const SolveResult r = solve(xor_to_cnf(sys), DmmParams{}, cfg, seed);
    g_orbits.add(r);
    if (r.best_unsat.count == 0) {
      ++solved;
      times.push_back(r.machine_time);
    }
  }
  std::string detail = std::to_string(solved) + "/20 solved within machine time 1e4 (need 16)";
  if (!times.empty()) detail += ", median machine time " + fmt(median(times));
  return {solved >= 16, detail};
}

Verdict optimum_estimates() {
  IntegratorConfig cfg = steps_budget(200'000);
  const OptimumEstimate rnd = estimate_optimum(Family::random_e3sat, 300, 5.0, 10, cfg, DmmParams{}, 11);
  const OptimumEstimate dlt = estimate_optimum(Family::delta_e3sat, 300, 5.0, 10, cfg, DmmParams{}, 11);
  g_orbits.runs += 20;
  g_orbits.violations += rnd.bound_violations + dlt.bound_violations;
  const bool pass = rnd.mean <= 0.010 && dlt.mean <= 0.020;
  return {pass, "random " + fmt(100 * rnd.mean) + "% +- " + fmt(100 * rnd.stddev) + " (<= 1.0), delta " +
                    fmt(100 * dlt.mean) + "% +- " + fmt(100 * dlt.stddev) + " (<= 2.0)"};
}

// Criteria 6 and 7 share one sweep over the same instances.
struct Sweep {
  std::vector<std::uint32_t> n{500, 1000, 2000};
  std::map<std::uint32_t, std::vector<double>> dmm_steps, dmm_wall, ls_wall;
  std::map<std::uint32_t, int> dmm_met, ls_met;
  bool done = false;
};

void run_sweep(Sweep& s, const std::string& out, unsigned workers) {
  if (s.done) return;
  Experiment e;
  e.gen = {Family::delta_e3sat, 0, 5.0};
  e.n_values = s.n;
  e.solvers = {SolverId::dmm, SolverId::walksat};
  e.threshold = 0.015;
  e.repeats = 5;
  e.seed = 2021;
  e.dmm_max_steps = 2'000'000;
  e.ls_max_flips = std::numeric_limits<std::uint64_t>::max();
  e.max_wall_s = 600.0;
  e.noise = 0.05;
  e.workers = workers;
  const RunOutput r = run_experiment(e, out + "/scaling");
  for (const auto& rec : r.records) {
    // unmet runs enter with their full budget, a lower bound on the true time
    const double wall = rec.met ? rec.wall_to_threshold : rec.total_wall_s;
    if (rec.solver == SolverId::dmm) {
      g_orbits.add(rec);
      s.dmm_steps[rec.n].push_back(static_cast<double>(rec.met ? rec.steps_to_threshold : rec.total_steps));
      s.dmm_wall[rec.n].push_back(wall);
      s.dmm_met[rec.n] += rec.met;
    } else {
      s.ls_wall[rec.n].push_back(wall);
      s.ls_met[rec.n] += rec.met;
    }
  }
  try {
    ChartOptions opts;
    opts.extrapolate = true;
    emit_record_charts(r.records, out + "/scaling/charts", opts);
  } catch (const std::exception& ex) {
    std::cerr << "charts: " << ex.what() << "\n";
  }
  s.done = true;
}

// A median is exact when more than half of the runs met the threshold.
bool median_exact(int met, std::size_t runs) { return 2 * static_cast<std::size_t>(met) > runs; }

Verdict dmm_scaling(Sweep& s, const std::string& out, unsigned workers) {
  run_sweep(s, out, workers);
  std::ostringstream d;
  bool pass = true;
  double lo = 1e300, hi = 0;
  for (auto n : s.n) {
    const double st = median(s.dmm_steps[n]);
    pass = pass && median_exact(s.dmm_met[n], s.dmm_steps[n].size());
    lo = std::min(lo, st);
    hi = std::max(hi, st);
    d << "n=" << n << ": " << s.dmm_met[n] << "/5 met, median steps " << fmt(st) << ", wall "
      << fmt(median(s.dmm_wall[n])) << "s; ";
  }
  pass = pass && hi <= 2.0 * lo;
  d << "steps max/min " << fmt(hi / lo) << " (<= 2)";
  for (std::size_t i = 1; i < s.n.size(); ++i) {
    const double ratio = median(s.dmm_wall[s.n[i]]) / median(s.dmm_wall[s.n[i - 1]]);
    const double cap = 1.5 * s.n[i] / s.n[i - 1];
    pass = pass && ratio <= cap;
    d << "; wall " << s.n[i] << "/" << s.n[i - 1] << " " << fmt(ratio) << " (<= " << fmt(cap) << ")";
  }
  return {pass, d.str()};
}

Verdict baseline_contrast(Sweep& s, const std::string& out, unsigned workers) {
  run_sweep(s, out, workers);
  std::ostringstream d;
  const auto& n = s.n;
  std::vector<double> t;
  for (auto k : n) {
    t.push_back(median(s.ls_wall[k]));
    d << "walksat n=" << k << ": " << s.ls_met[k] << "/5 met, median " << fmt(t.back()) << "s; ";
  }
  const double dmm_last = median(s.dmm_wall[n.back()]);
  // a censored walksat median is a lower bound, which still orders correctly against
  // an exact DMM median; the denominators of the ratios must be exact
  bool pass = median_exact(s.dmm_met[n.back()], s.dmm_wall[n.back()].size()) && t.back() > dmm_last;
  d << "dmm n=" << n.back() << " median " << fmt(dmm_last) << "s";
  for (std::size_t i = 1; i < n.size(); ++i) {
    const double ratio = t[i] / t[i - 1];
    pass = pass && median_exact(s.ls_met[n[i - 1]], s.ls_wall[n[i - 1]].size()) && ratio > 2.0;
    d << "; t(" << n[i] << ")/t(" << n[i - 1] << ") " << fmt(ratio) << " (> 2)";
  }
  return {pass, d.str()};
}

Verdict bounded_orbits() {
  const bool pass = g_orbits.runs > 0 && g_orbits.violations == 0 && g_orbits.non_finite == 0 && g_orbits.errors == 0;
  return {pass, std::to_string(g_orbits.runs) + " DMM runs, " + std::to_string(g_orbits.violations) +
                    " box violations, " + std::to_string(g_orbits.non_finite) + " non-finite, " +
                    std::to_string(g_orbits.errors) + " failed"};
}

Verdict delta_balance() {
  Rng rng(99);
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = 4 + static_cast<std::uint32_t>(rng.below(2000));
    const std::size_t m = 1 + rng.below(3 * n);
    const XorSystem sys = gen_delta_xorsat(n, m, rng.next());
    std::vector<std::size_t> occ(n, 0);
    for (const auto& eq : sys.equations)
      for (auto v : eq.vars) ++occ[v];
    const auto [lo, hi] = std::minmax_element(occ.begin(), occ.end());
    ok += (*hi - *lo <= 1) && sys.equations.size() == m;
  }
  return {ok == 100, std::to_string(ok) + "/100 pairs with spread <= 1"};
}

CnfFormula random_wcnf(Rng& rng, std::uint32_t n) {
  const std::size_t m = n * (3 + rng.below(3));
  std::vector<Clause> cs;
  for (std::size_t i = 0; i < m; ++i) {
    Clause c;
    const std::size_t k = 1 + rng.below(3);
    std::set<std::uint32_t> used;
    while (c.literals.size() < k) {
      const auto v = static_cast<std::uint32_t>(rng.below(n));
      if (used.insert(v).second) c.literals.push_back({v, rng.below(2) == 1});
    }
    c.hard = rng.below(4) == 0;
    c.weight = c.hard ? 1 : 1 + rng.below(9);
    cs.push_back(std::move(c));
  }
  return CnfFormula(n, std::move(cs));
}

Verdict hard_clauses() {
  Rng rng(5150);
  int feasible = 0, kept = 0;
  for (int i = 0; i < 20; ++i) {
    const auto n = 8 + static_cast<std::uint32_t>(rng.below(9));
    const CnfFormula f = random_wcnf(rng, n);
    const Optimum opt = brute_force_optimum(f);
    if (opt.min_unsat_weight >= f.hard_weight()) continue;  // every assignment breaks a hard clause
    ++feasible;
    const SolveResult r = solve(f, DmmParams{}, steps_budget(100'000), 300 + i);
    g_orbits.add(r);
    bool all_hard = true;
    for (std::size_t c = 0; c < f.num_clauses(); ++c)
      if (f.clause(c).hard && !clause_satisfied(f.clause(c), r.best)) all_hard = false;
    kept += all_hard;
  }
  return {feasible > 0 && kept == feasible,
          std::to_string(kept) + "/" + std::to_string(feasible) + " hard-feasible instances keep every hard clause"};
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = s.str();
  }
  return out;
}

Verdict reproducibility(const std::string& out) {
  const fs::path a = fs::path(out) / "replay_a", b = fs::path(out) / "replay_b";
  fs::remove_all(a);
  fs::remove_all(b);
  Experiment e;
  e.gen = {Family::delta_e3sat, 0, 5.0};
  e.n_values = {40, 80};
  e.solvers = {SolverId::dmm, SolverId::walksat, SolverId::walksat_cc};
  e.threshold = 0.02;
  e.repeats = 2;
  e.dmm_max_steps = 20'000;
  e.ls_max_flips = 200'000;
  e.reproducible = true;
  e.save_instances = true;
  e.save_traces = true;
  e.seed = 8;
  run_experiment(e, a.string());
  run_experiment(read_manifest((a / "manifest.json").string()), b.string());
  const auto ta = tree_bytes(a), tb = tree_bytes(b);
  std::size_t cnf = 0, round_trip = 0;
  for (const auto& [name, bytes] : ta) {
    if (name.rfind("instances", 0) != 0) continue;
    ++cnf;
    round_trip += write_dimacs(parse_dimacs(bytes)) == bytes;
  }
  const bool pass = ta == tb && ta.size() > 2 && cnf > 0 && round_trip == cnf;
  return {pass, std::to_string(ta.size()) + " files, replay " + (ta == tb ? "byte-identical" : "DIFFERS") + ", " +
                    std::to_string(round_trip) + "/" + std::to_string(cnf) + " instances round-trip exactly"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memsat acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  std::vector<int> known_fail;
  unsigned workers = 1;
  app.add_option("--out", out, "directory for experiment artifacts");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--known-fail", known_fail, "criteria whose failure does not set the exit status")->delimiter(',');
  app.add_option("--workers", workers, "worker threads for the scaling sweep");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  Sweep sweep;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"xor block equivalence", xor_block},
      {"gf2 oracle agrees with brute force", gf2_oracle},
      {"dmm finds tiny optima", tiny_optimum},
      {"dmm solves satisfiable delta-xorsat", xorsat_solving},
      {"desk-scale optimum estimates", optimum_estimates},
      {"dmm steps-to-threshold scaling", [&] { return dmm_scaling(sweep, out, workers); }},
      {"walksat contrast", [&] { return baseline_contrast(sweep, out, workers); }},
      {"bounded orbits", bounded_orbits},
      {"delta generator balance", delta_balance},
      {"hard clauses kept", hard_clauses},
      {"manifest replay and dimacs round trip", [&] { return reproducibility(out); }},
  };

  int failed = 0, passed = 0, acknowledged = 0;
  std::ofstream summary(fs::path(out) / "summary.txt");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& ex) {
      v = {false, std::string("error: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = std::find(known_fail.begin(), known_fail.end(), id) != known_fail.end();
    passed += v.pass;
    if (!v.pass) (known ? acknowledged : failed)++;
    if (!v.pass && known) v.detail += " (known failure)";
    char head[32];
    std::snprintf(head, sizeof head, "%s %2d ", v.pass ? "PASS" : "FAIL", id);
    std::ostringstream line;
    line << head << criteria[i].first << ": " << v.detail << " [" << std::fixed << std::setprecision(1) << secs
         << "s]\n";
    std::cout << line.str() << std::flush;
    summary << line.str() << std::flush;
  }
  std::ostringstream tail;
  tail << passed << " passed, " << failed << " failed, " << acknowledged << " known failures\n";
  std::cout << tail.str();
  summary << tail.str();
  return failed;
}

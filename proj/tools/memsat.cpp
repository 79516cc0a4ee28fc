// memsat command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "memsat/baseline.hpp"
#include "memsat/bench.hpp"
#include "memsat/config.hpp"
#include "memsat/dmm.hpp"
#include "memsat/formula.hpp"
#include "memsat/gen.hpp"
#include "memsat/integrator.hpp"
#include "memsat/version.hpp"

namespace fs = std::filesystem;
using namespace memsat;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
};

struct InstanceArgs {
  std::string path;
  std::string family = "delta_e3sat";
  std::uint32_t n = 0;
  double density = 5.0;
  std::string rhs = "random";
};

void add_instance_options(CLI::App* cmd, InstanceArgs& a) {
  cmd->add_option("instance", a.path, "DIMACS CNF/WCNF file (omit to generate one)");
  cmd->add_option("--family", a.family, "random_e3sat | hyper_e3sat | delta_e3sat | xorsat")
      ->capture_default_str();
  cmd->add_option("-n,--variables", a.n, "number of variables");
  cmd->add_option("--density", a.density, "clauses per variable")->capture_default_str();
  cmd->add_option("--rhs", a.rhs, "XOR right-hand sides: random | ones")->capture_default_str();
}

GenSpec gen_spec(const InstanceArgs& a, std::uint64_t seed) {
  GenSpec g;
  g.family = family_from_string(a.family);
  g.n = a.n;
  g.density = a.density;
  g.seed = seed;
  if (a.rhs == "ones") g.rhs = XorRhs::ones;
  else if (a.rhs != "random") throw std::invalid_argument("--rhs must be 'random' or 'ones'");
  g.validate();
  return g;
}

std::shared_ptr<const CnfFormula> load_instance(const InstanceArgs& a, std::uint64_t seed,
                                                std::string& label) {
  if (!a.path.empty()) {
    label = fs::path(a.path).stem().string();
    return std::make_shared<const CnfFormula>(read_dimacs_file(a.path));
  }
  if (a.n == 0) throw std::invalid_argument("give an instance file or --variables for a generated one");
  const GenSpec g = gen_spec(a, seed);
  label = g.descriptor();
  return std::make_shared<const CnfFormula>(generate_cnf(g));
}

KeyValues load_config(const Globals& g) {
  return g.config.empty() ? KeyValues{} : read_key_values_file(g.config);
}

KeyValues section(const KeyValues& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  return out;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

struct SolveArgs {
  std::string solver = "dmm";
  double threshold = 0.0;
  std::uint64_t max_steps = 1'000'000;
  double max_machine_time = 0.0;
  double max_wall = 0.0;
  double noise = 0.5;
  std::string trace;
  std::string assignment;
  std::string state;
};

void add_solve_options(CLI::App* cmd, SolveArgs& s) {
  cmd->add_option("--threshold", s.threshold, "stop once the unsat fraction is <= this")
      ->capture_default_str();
  cmd->add_option("--max-steps", s.max_steps, "integration steps (dmm) or flips (walksat)")
      ->capture_default_str();
  cmd->add_option("--max-machine-time", s.max_machine_time, "machine-time budget (0 = none)");
  cmd->add_option("--max-wall", s.max_wall, "wall-clock budget in seconds (0 = none)");
  cmd->add_option("--noise", s.noise, "walksat noise probability")->capture_default_str();
}

struct RunSummary {
  std::string solver;
  std::string status;
  UnsatCount best;
  std::size_t clauses = 0;
  std::uint64_t steps = 0;
  double machine_time = 0.0;
  double wall_s = 0.0;
  std::size_t violations = 0;
  SolverTrace trace;
  Assignment assignment;
};

RunSummary run_one(const std::string& solver, const std::shared_ptr<const CnfFormula>& f,
                   const SolveArgs& s, const KeyValues& cfg, std::uint64_t seed,
                   DmmState* final_state = nullptr) {
  RunSummary r;
  r.solver = solver;
  r.clauses = f->num_clauses();
  const double wall = s.max_wall > 0 ? s.max_wall : std::numeric_limits<double>::infinity();
  if (solver == "dmm") {
    const DmmParams params = DmmParams::from_kv(section(cfg, "dmm."));
    IntegratorConfig ic = IntegratorConfig::from_kv(section(cfg, "integrator."));
    ic.stop.threshold = s.threshold;
    ic.stop.max_steps = s.max_steps;
    if (s.max_machine_time > 0) ic.stop.max_machine_time = s.max_machine_time;
    ic.stop.max_wall_s = wall;
    SolveResult res = solve(f, params, ic, seed);
    r.status = to_string(res.status);
    r.best = res.best_unsat;
    r.steps = res.steps;
    r.machine_time = res.machine_time;
    r.wall_s = res.wall_s;
    r.violations = res.bound_violations;
    r.trace = std::move(res.trace);
    r.assignment = std::move(res.best);
    if (final_state) *final_state = std::move(res.final_state);
  } else if (solver == "walksat" || solver == "walksat_cc") {
    LsConfig lc;
    lc.noise = s.noise;
    lc.max_flips = s.max_steps;
    lc.max_wall_s = wall;
    lc.cc_enabled = solver == "walksat_cc";
    lc.seed = seed;
    lc.threshold = s.threshold;
    LsResult res = walksat(f, lc);
    r.status = to_string(res.status);
    r.best = res.best_unsat;
    r.steps = res.flips;
    r.machine_time = static_cast<double>(res.flips);
    r.wall_s = res.wall_s;
    r.trace = std::move(res.trace);
    r.assignment = std::move(res.best);
  } else {
    throw std::invalid_argument("unknown solver '" + solver + "'");
  }
  return r;
}

void print_summary(std::ostream& out, const RunSummary& r) {
  out << std::left << std::setw(11) << r.solver << " status=" << r.status
      << " best_unsat=" << r.best.count << "/" << r.clauses << " ("
      << format_double(100.0 * static_cast<double>(r.best.count) / r.clauses) << "%)";
  if (r.best.weight != r.best.count) out << " weight=" << r.best.weight;
  out << " steps=" << r.steps << " machine_time=" << format_double(r.machine_time)
      << " wall_s=" << format_double(r.wall_s);
  if (r.solver == "dmm") out << " bound_violations=" << r.violations;
  out << '\n';
}

void write_assignment(std::ostream& out, const Assignment& a) {
  out << 'v';
  for (std::size_t i = 0; i < a.size(); ++i) out << ' ' << (a[i] ? 1 : -1) * static_cast<long long>(i + 1);
  out << " 0\n";
}

// ---------------------------------------------------------------------------

int cmd_generate(const Globals& g, const InstanceArgs& a, const std::string& format) {
  if (a.n == 0) throw std::invalid_argument("--variables is required");
  const GenSpec spec = gen_spec(a, g.seed);
  std::ostringstream text;
  if (format == "xor") {
    const auto sys = generate_xor(spec);
    if (!sys) throw std::invalid_argument("family " + a.family + " has no XOR form");
    write_xor(text, *sys);
  } else if (format == "cnf") {
    write_dimacs(text, generate_cnf(spec));
  } else {
    throw std::invalid_argument("--format must be 'cnf' or 'xor'");
  }
  if (g.out.empty()) {
    std::cout << text.str();
  } else {
    open_out(g.out) << text.str();
    std::cerr << "wrote " << g.out << " (" << spec.descriptor() << ")\n";
  }
  return 0;
}

int cmd_solve(const Globals& g, const InstanceArgs& a, const SolveArgs& s) {
  std::string label;
  const auto f = load_instance(a, g.seed, label);
  DmmState state;
  const RunSummary r = run_one(s.solver, f, s, load_config(g), g.seed, &state);
  std::cout << label << ": n=" << f->num_variables() << " m=" << f->num_clauses() << '\n';
  print_summary(std::cout, r);
  if (!s.trace.empty()) {
    auto out = open_out(s.trace);
    write_trace_csv(out, r.trace);
  }
  if (!s.assignment.empty()) {
    auto out = open_out(s.assignment);
    write_assignment(out, r.assignment);
  }
  if (!s.state.empty()) {
    if (s.solver != "dmm") throw std::invalid_argument("--state is only available for the dmm solver");
    auto out = open_out(s.state);
    if (fs::path(s.state).extension() == ".csv") write_state_csv(out, state);
    else write_state_binary(out, state);
  }
  return 0;
}

int cmd_compare(const Globals& g, const InstanceArgs& a, const SolveArgs& s,
                const std::vector<std::string>& solvers) {
  std::string label;
  const auto f = load_instance(a, g.seed, label);
  const KeyValues cfg = load_config(g);
  std::cout << label << ": n=" << f->num_variables() << " m=" << f->num_clauses() << '\n';
  std::vector<NamedTrace> traces;
  for (const auto& name : solvers) {
    RunSummary r = run_one(name, f, s, cfg, g.seed);
    print_summary(std::cout, r);
    traces.push_back({name, f->num_variables(), std::move(r.trace)});
  }
  if (!g.out.empty()) {
    for (const auto& t : traces) {
      auto out = open_out(fs::path(g.out) / "traces" / (t.label + ".csv"));
      write_trace_csv(out, t.trace);
    }
    for (const auto& p : emit_trace_charts(traces, (fs::path(g.out) / "charts").string()))
      std::cerr << "wrote " << p << '\n';
  }
  return 0;
}

struct BenchArgs {
  std::string manifest;
  std::string kind;
  std::string family;
  double density = 0.0;
  std::vector<std::uint32_t> n_values;
  std::vector<std::string> solvers;
  std::uint32_t repeats = 0;
  double threshold = 0.0;
  double max_wall = 0.0;
  double noise = -1.0;
  unsigned workers = 0;
  bool huge = false;
  bool reproducible = false;
  bool no_charts = false;
};

int cmd_bench(const Globals& g, const BenchArgs& b, bool seed_given) {
  Experiment e;
  if (!b.manifest.empty()) e = read_manifest(b.manifest);
  else if (!g.config.empty()) e = Experiment::from_kv(read_key_values_file(g.config));
  if (!b.kind.empty()) e.kind = experiment_kind_from_string(b.kind);
  if (b.manifest.empty() && (seed_given || g.config.empty())) e.seed = g.seed;
  if (!b.family.empty()) e.gen.family = family_from_string(b.family);
  if (b.density > 0) e.gen.density = b.density;
  if (!b.n_values.empty()) e.n_values = b.n_values;
  if (!b.solvers.empty()) {
    e.solvers.clear();
    for (const auto& s : b.solvers) e.solvers.push_back(solver_from_string(s));
  }
  if (b.repeats) e.repeats = b.repeats;
  if (b.threshold > 0) e.threshold = b.threshold;
  if (b.max_wall > 0) e.max_wall_s = b.max_wall;
  if (b.noise >= 0) e.noise = b.noise;
  if (b.workers) e.workers = b.workers;
  if (b.huge) e.huge = true;
  if (b.reproducible) e.reproducible = true;
  if (g.out.empty()) throw std::invalid_argument("bench needs --out");

  std::cerr << "running " << to_string(e.kind) << " on " << to_string(e.gen.family) << " with "
            << e.n_values.size() << " sizes x " << e.repeats << " repeats x " << e.solvers.size()
            << " solvers\n";
  const RunOutput out = run_experiment(e, g.out, [](const BenchRecord& r) {
    std::cerr << "  " << r.instance_descriptor() << ' ' << to_string(r.solver) << ' ' << r.status
              << " best=" << format_double(100.0 * r.best_unsat_fraction) << "%"
              << (r.met ? " wall_to_threshold=" + format_double(r.wall_to_threshold) : std::string())
              << (r.error.empty() ? "" : " error=" + r.error) << '\n';
  });
  std::cout << "wrote " << out.records.size() << " records to " << (fs::path(g.out) / "records.csv").string() << '\n';

  if (!b.no_charts) {
    const std::string charts = (fs::path(g.out) / "charts").string();
    try {
      if (e.kind == ExperimentKind::trajectory) {
        std::vector<NamedTrace> traces;
        for (const auto& r : out.records)
          if (out.traces.count(r.trace_file))
            traces.push_back({to_string(r.solver), r.n, out.traces.at(r.trace_file)});
        for (const auto& p : emit_trace_charts(traces, charts)) std::cerr << "wrote " << p << '\n';
      } else {
        for (const auto& p : emit_record_charts(out.records, charts)) std::cerr << "wrote " << p << '\n';
      }
    } catch (const std::invalid_argument& ex) {
      std::cerr << "no charts: " << ex.what() << '\n';
    }
  }
  if (e.kind == ExperimentKind::time_to_threshold) {
    for (const auto& [solver, fit] : fit_scaling(out.records)) {
      std::cout << to_string(solver) << ": ";
      if (!fit.ok) {
        std::cout << fit.reason << '\n';
        continue;
      }
      std::cout << "log10(t) = " << format_double(fit.exp_intercept) << " + "
                << format_double(fit.exp_slope) << " n (R2 " << format_double(fit.exp_r2)
                << "), t = " << format_double(fit.lin_intercept) << " + "
                << format_double(fit.lin_slope) << " n (R2 " << format_double(fit.lin_r2) << ")\n";
    }
  }
  return 0;
}

struct ChartArgs {
  std::string records;
  std::vector<std::string> traces;
  std::string metric = "wall_s";
  bool extrapolate = false;
  double target_n = 2e6;
};

int cmd_charts(const Globals& g, const ChartArgs& c) {
  if (g.out.empty()) throw std::invalid_argument("charts needs --out");
  std::vector<std::string> written;
  if (!c.records.empty()) {
    std::ifstream in(c.records, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + c.records);
    ChartOptions opts;
    opts.metric = time_metric_from_string(c.metric);
    opts.extrapolate = c.extrapolate;
    opts.target_n = c.target_n;
    written = emit_record_charts(read_records_csv(in), g.out, opts);
  } else if (!c.traces.empty()) {
    std::vector<NamedTrace> traces;
    for (const auto& spec : c.traces) {
      // label=path:n:num_clauses or plain path with n and m taken as unknown
      std::string path = spec, label = fs::path(spec).stem().string();
      std::uint32_t n = 0;
      std::size_t m = 0;
      if (const auto eq = spec.find('='); eq != std::string::npos) {
        label = spec.substr(0, eq);
        path = spec.substr(eq + 1);
      }
      if (const auto c1 = path.find(':'); c1 != std::string::npos) {
        const auto c2 = path.find(':', c1 + 1);
        n = static_cast<std::uint32_t>(parse_u64(path.substr(c1 + 1, c2 - c1 - 1)));
        if (c2 != std::string::npos) m = parse_u64(path.substr(c2 + 1));
        path = path.substr(0, c1);
      }
      if (m == 0) throw std::invalid_argument("trace '" + spec + "' needs the clause count: label=path:n:m");
      std::ifstream in(path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open " + path);
      traces.push_back({label, n, read_trace_csv(in, m)});
    }
    written = emit_trace_charts(traces, g.out);
  } else {
    throw std::invalid_argument("charts needs --records or --trace");
  }
  for (const auto& p : written) std::cout << "wrote " << p << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memsat: memcomputing Max-SAT solver and benchmark harness"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "seed for generation and solvers")->capture_default_str();
  app.add_option("--config", g.config, "key=value configuration file");
  app.add_option("--out", g.out, "output file or directory");

  InstanceArgs inst;
  SolveArgs solve_args;

  auto* gen = app.add_subcommand("generate", "write a generated instance");
  std::string format = "cnf";
  add_instance_options(gen, inst);
  gen->add_option("--format", format, "cnf | xor")->capture_default_str();

  auto* sol = app.add_subcommand("solve", "solve one instance");
  add_instance_options(sol, inst);
  add_solve_options(sol, solve_args);
  sol->add_option("--solver", solve_args.solver, "dmm | walksat | walksat_cc")->capture_default_str();
  sol->add_option("--trace", solve_args.trace, "write the trace CSV here");
  sol->add_option("--assignment", solve_args.assignment, "write the best assignment here");
  sol->add_option("--state", solve_args.state, "dump the final DMM state (.csv or binary)");

  auto* cmp = app.add_subcommand("compare", "run several solvers on one instance");
  std::vector<std::string> cmp_solvers{"dmm", "walksat"};
  add_instance_options(cmp, inst);
  add_solve_options(cmp, solve_args);
  cmp->add_option("--solvers", cmp_solvers, "solvers to run")->delimiter(',')->capture_default_str();

  auto* bench = app.add_subcommand("bench", "run an experiment");
  BenchArgs bench_args;
  bench->add_option("--family", bench_args.family, "instance family");
  bench->add_option("--density", bench_args.density, "clauses per variable");
  bench->add_option("--manifest", bench_args.manifest, "re-run the experiment in this manifest.json");
  bench->add_option("--kind", bench_args.kind,
                    "time_to_threshold | trajectory | timeout_family | optimum_estimate");
  bench->add_option("--n", bench_args.n_values, "sizes")->delimiter(',');
  bench->add_option("--solvers", bench_args.solvers, "dmm,walksat,walksat_cc")->delimiter(',');
  bench->add_option("--repeats", bench_args.repeats, "instances per size");
  bench->add_option("--threshold", bench_args.threshold, "unsat fraction threshold");
  bench->add_option("--max-wall", bench_args.max_wall, "per-run wall-clock budget in seconds");
  bench->add_option("--noise", bench_args.noise, "walksat noise probability");
  bench->add_option("--workers", bench_args.workers, "parallel solver runs");
  bench->add_flag("--huge", bench_args.huge, "allow n up to 2e6 (runs take hours)");
  bench->add_flag("--reproducible", bench_args.reproducible, "zero wall-clock columns");
  bench->add_flag("--no-charts", bench_args.no_charts, "skip chart rendering");

  auto* charts = app.add_subcommand("charts", "render charts from records or traces");
  ChartArgs chart_args;
  charts->add_option("--records", chart_args.records, "records.csv from bench");
  charts->add_option("--trace", chart_args.traces, "label=trace.csv:n:m (repeatable)");
  charts->add_option("--metric", chart_args.metric, "wall_s | steps | machine_time")->capture_default_str();
  charts->add_flag("--extrapolate", chart_args.extrapolate, "add dashed exponential extrapolations");
  charts->add_option("--target-n", chart_args.target_n, "extrapolation target")->capture_default_str();

  for (auto* sub : {gen, sol, cmp, bench, charts}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(g, inst, format);
    if (*sol) return cmd_solve(g, inst, solve_args);
    if (*cmp) return cmd_compare(g, inst, solve_args, cmp_solvers);
    if (*bench) return cmd_bench(g, bench_args, app.count("--seed") > 0);
    if (*charts) return cmd_charts(g, chart_args);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

#include "memsat/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include "json.hpp"
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "memsat/rng.hpp"
#include "memsat/version.hpp"

namespace fs = std::filesystem;

namespace memsat {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::time_to_threshold: return "time_to_threshold";
    case ExperimentKind::trajectory: return "trajectory";
    case ExperimentKind::timeout_family: return "timeout_family";
    case ExperimentKind::optimum_estimate: return "optimum_estimate";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "time_to_threshold") return ExperimentKind::time_to_threshold;
  if (s == "trajectory") return ExperimentKind::trajectory;
  if (s == "timeout_family") return ExperimentKind::timeout_family;
  if (s == "optimum_estimate") return ExperimentKind::optimum_estimate;
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

std::string to_string(SolverId s) {
  switch (s) {
    case SolverId::dmm: return "dmm";
    case SolverId::walksat: return "walksat";
    case SolverId::walksat_cc: return "walksat_cc";
  }
  return "?";
}

SolverId solver_from_string(const std::string& s) {
  if (s == "dmm") return SolverId::dmm;
  if (s == "walksat") return SolverId::walksat;
  if (s == "walksat_cc") return SolverId::walksat_cc;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

std::string to_string(TimeMetric m) {
  switch (m) {
    case TimeMetric::wall_s: return "wall_s";
    case TimeMetric::steps: return "steps";
    case TimeMetric::machine_time: return "machine_time";
  }
  return "?";
}

TimeMetric time_metric_from_string(const std::string& s) {
  if (s == "wall_s" || s == "wall") return TimeMetric::wall_s;
  if (s == "steps") return TimeMetric::steps;
  if (s == "machine_time") return TimeMetric::machine_time;
  throw std::invalid_argument("unknown time metric '" + s + "'");
}

// ---------------------------------------------------------------------------
// Experiment configuration

void Experiment::validate() const {
  if (n_values.empty()) throw std::invalid_argument("experiment needs at least one n");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1]");
  if (solvers.empty()) throw std::invalid_argument("experiment needs at least one solver");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (!(max_wall_s > 0.0)) throw std::invalid_argument("max_wall_s must be positive");
  if (kind == ExperimentKind::timeout_family) {
    if (timeout_k.empty()) throw std::invalid_argument("timeout_family needs timeout_k values");
    for (double k : timeout_k)
      if (!(k > 0.0)) throw std::invalid_argument("timeout_k values must be positive");
    if (!(timeout_unit_s > 0.0)) throw std::invalid_argument("timeout_unit_s must be positive");
  }
  const std::uint32_t cap = huge ? kHugeMaxN : kDefaultMaxN;
  for (auto n : n_values) {
    if (n > cap)
      throw std::invalid_argument("n = " + std::to_string(n) + " exceeds the cap of " +
                                  std::to_string(cap) + (huge ? "" : " (pass --huge to lift it)"));
    GenSpec g = gen;
    g.n = n;
    g.validate();
  }
  dmm.validate();
  noise >= 0.0 && noise <= 1.0 ? void() : throw std::invalid_argument("noise must lie in [0, 1]");
}

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

KeyValues with_prefix(const KeyValues& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv) out[prefix + k] = v;
  return out;
}

KeyValues strip_prefix(const KeyValues& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  return out;
}

}  // namespace

KeyValues Experiment::to_kv() const {
  KeyValues kv{
      {"kind", to_string(kind)},
      {"family", to_string(gen.family)},
      {"density", format_double(gen.density)},
      {"rhs", gen.rhs == XorRhs::ones ? "ones" : "random"},
      {"n", join(n_values, [](auto n) { return std::to_string(n); })},
      {"solvers", join(solvers, [](auto s) { return to_string(s); })},
      {"threshold", format_double(threshold)},
      {"repeats", std::to_string(repeats)},
      {"seed", std::to_string(seed)},
      {"dmm_max_steps", std::to_string(dmm_max_steps)},
      {"dmm_max_machine_time", format_double(dmm_max_machine_time)},
      {"ls_max_flips", std::to_string(ls_max_flips)},
      {"max_wall_s", format_double(max_wall_s)},
      {"timeout_k", join(timeout_k, [](double k) { return format_double(k); })},
      {"timeout_unit_s", format_double(timeout_unit_s)},
      {"noise", format_double(noise)},
      {"workers", std::to_string(workers)},
      {"huge", huge ? "true" : "false"},
      {"reproducible", reproducible ? "true" : "false"},
      {"save_instances", save_instances ? "true" : "false"},
      {"save_traces", save_traces ? "true" : "false"},
  };
  for (const auto& [k, v] : with_prefix(dmm.to_kv(), "dmm.")) kv[k] = v;
  KeyValues integ = integrator.to_kv();
  for (const char* budget : {"threshold", "max_steps", "max_machine_time", "max_wall_s"})
    integ.erase(budget);
  for (const auto& [k, v] : with_prefix(integ, "integrator.")) kv[k] = v;
  return kv;
}

Experiment Experiment::from_kv(const KeyValues& kv) {
  Experiment e;
  e.kind = experiment_kind_from_string(kv_string(kv, "kind", "time_to_threshold"));
  e.gen.family = family_from_string(kv_string(kv, "family", "delta_e3sat"));
  e.gen.density = kv_double(kv, "density", 5.0);
  const std::string rhs = kv_string(kv, "rhs", "random");
  e.gen.rhs = rhs == "ones" ? XorRhs::ones : XorRhs::random;
  for (const auto& s : kv_list(kv, "n")) e.n_values.push_back(static_cast<std::uint32_t>(parse_u64(s)));
  if (kv.count("solvers")) {
    e.solvers.clear();
    for (const auto& s : kv_list(kv, "solvers")) e.solvers.push_back(solver_from_string(s));
  }
  e.threshold = kv_double(kv, "threshold", e.threshold);
  e.repeats = static_cast<std::uint32_t>(kv_u64(kv, "repeats", e.repeats));
  e.seed = kv_u64(kv, "seed", e.seed);
  e.dmm_max_steps = kv_u64(kv, "dmm_max_steps", e.dmm_max_steps);
  e.dmm_max_machine_time = kv_double(kv, "dmm_max_machine_time", e.dmm_max_machine_time);
  e.ls_max_flips = kv_u64(kv, "ls_max_flips", e.ls_max_flips);
  e.max_wall_s = kv_double(kv, "max_wall_s", e.max_wall_s);
  if (kv.count("timeout_k")) {
    e.timeout_k.clear();
    for (const auto& s : kv_list(kv, "timeout_k")) e.timeout_k.push_back(parse_double(s));
  }
  e.timeout_unit_s = kv_double(kv, "timeout_unit_s", e.timeout_unit_s);
  e.noise = kv_double(kv, "noise", e.noise);
  e.workers = static_cast<unsigned>(kv_u64(kv, "workers", e.workers));
  e.huge = kv_bool(kv, "huge", e.huge);
  e.reproducible = kv_bool(kv, "reproducible", e.reproducible);
  e.save_instances = kv_bool(kv, "save_instances", e.save_instances);
  e.save_traces = kv_bool(kv, "save_traces", e.save_traces);
  e.dmm = DmmParams::from_kv(strip_prefix(kv, "dmm."));
  e.integrator = IntegratorConfig::from_kv(strip_prefix(kv, "integrator."));
  return e;
}

// ---------------------------------------------------------------------------
// Records

std::string BenchRecord::instance_descriptor() const {
  GenSpec g;
  g.family = family;
  g.n = n;
  g.density = density;
  g.seed = instance_seed;
  return g.descriptor();
}

bool BenchRecord::operator<(const BenchRecord& o) const {
  return std::tie(family, n, repeat, solver, timeout_k, instance_seed) <
         std::tie(o.family, o.n, o.repeat, o.solver, o.timeout_k, o.instance_seed);
}

namespace {

const char* kRecordHeader =
    "family,n,density,instance_seed,repeat,solver,timeout_k,status,threshold,met,"
    "steps_to_threshold,machine_time_to_threshold,wall_to_threshold,total_steps,"
    "total_machine_time,total_wall_s,best_unsat_count,num_clauses,best_unsat_fraction,"
    "memory_bytes,bound_violations,trace_file,error";

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_record(std::ostream& out, const BenchRecord& r, bool zero_wall) {
  auto wall = [&](double w) { return format_double(zero_wall ? 0.0 : w); };
  out << to_string(r.family) << ',' << r.n << ',' << format_double(r.density) << ','
      << r.instance_seed << ',' << r.repeat << ',' << to_string(r.solver) << ','
      << format_double(r.timeout_k) << ',' << r.status << ',' << format_double(r.threshold) << ','
      << (r.met ? 1 : 0) << ',';
  if (r.met)
    out << r.steps_to_threshold << ',' << format_double(r.machine_time_to_threshold) << ','
        << wall(r.wall_to_threshold) << ',';
  else
    out << ",,,";
  out << r.total_steps << ',' << format_double(r.total_machine_time) << ',' << wall(r.total_wall_s)
      << ',' << r.best_unsat_count << ',' << r.num_clauses << ','
      << format_double(r.best_unsat_fraction) << ',' << r.memory_bytes << ','
      << r.bound_violations << ',' << r.trace_file << ',' << sanitize(r.error) << '\n';
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                       bool zero_wall_time) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) write_record(out, r, zero_wall_time);
}

std::vector<BenchRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty records file");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* needed : {"family", "n", "solver", "status", "met"})
    if (!col.count(needed)) throw std::runtime_error(std::string("records file lacks column ") + needed);

  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    auto get = [&](const char* name) -> std::string {
      const auto it = col.find(name);
      return it == col.end() || it->second >= f.size() ? std::string() : f[it->second];
    };
    auto num = [&](const char* name) { const auto s = get(name); return s.empty() ? 0.0 : parse_double(s); };
    auto u64 = [&](const char* name) -> std::uint64_t { const auto s = get(name); return s.empty() ? 0 : parse_u64(s); };
    BenchRecord r;
    r.family = family_from_string(get("family"));
    r.n = static_cast<std::uint32_t>(u64("n"));
    r.density = num("density");
    r.instance_seed = u64("instance_seed");
    r.repeat = static_cast<std::uint32_t>(u64("repeat"));
    r.solver = solver_from_string(get("solver"));
    r.timeout_k = num("timeout_k");
    r.status = get("status");
    r.threshold = num("threshold");
    r.met = get("met") == "1";
    r.steps_to_threshold = u64("steps_to_threshold");
    r.machine_time_to_threshold = num("machine_time_to_threshold");
    r.wall_to_threshold = num("wall_to_threshold");
    r.total_steps = u64("total_steps");
    r.total_machine_time = num("total_machine_time");
    r.total_wall_s = num("total_wall_s");
    r.best_unsat_count = u64("best_unsat_count");
    r.num_clauses = u64("num_clauses");
    r.best_unsat_fraction = num("best_unsat_fraction");
    r.memory_bytes = u64("memory_bytes");
    r.bound_violations = u64("bound_violations");
    r.trace_file = get("trace_file");
    r.error = get("error");
    out.push_back(std::move(r));
  }
  return out;
}

SolverTrace read_trace_csv(std::istream& in, std::size_t num_clauses) {
  SolverTrace t;
  t.num_clauses = num_clauses;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 5) throw std::runtime_error("malformed trace row '" + line + "'");
    TraceSample s;
    s.machine_time = parse_double(f[0]);
    s.steps = parse_u64(f[1]);
    s.wall_s = parse_double(f[2]);
    s.best_unsat_count = parse_u64(f[3]);
    s.best_unsat_weight = s.best_unsat_count;
    t.samples.push_back(s);
  }
  return t;
}

std::uint64_t instance_seed(std::uint64_t base, std::uint32_t n, std::uint32_t repeat) {
  return derive_seed(derive_seed(base, n), repeat);
}

// ---------------------------------------------------------------------------
// Experiment runner

namespace {

struct SolverRun {
  BenchRecord record;
  SolverTrace trace;
};

SolverRun run_solver(const Experiment& e, const std::shared_ptr<const CnfFormula>& formula,
                     SolverId solver, double threshold, double wall_budget, std::uint64_t seed) {
  SolverRun out;
  BenchRecord& r = out.record;
  r.solver = solver;
  r.threshold = threshold;
  r.num_clauses = formula->num_clauses();
  try {
    if (solver == SolverId::dmm) {
      IntegratorConfig cfg = e.integrator;
      cfg.stop.threshold = threshold;
      cfg.stop.max_steps = e.dmm_max_steps;
      cfg.stop.max_machine_time = e.dmm_max_machine_time > 0.0
                                      ? e.dmm_max_machine_time
                                      : std::numeric_limits<double>::infinity();
      cfg.stop.max_wall_s = wall_budget;
      SolveResult res = solve(formula, e.dmm, cfg, seed);
      r.status = to_string(res.status);
      r.total_steps = res.steps;
      r.total_machine_time = res.machine_time;
      r.total_wall_s = res.wall_s;
      r.best_unsat_count = res.best_unsat.count;
      r.memory_bytes = res.memory_bytes;
      r.bound_violations = res.bound_violations;
      out.trace = std::move(res.trace);
    } else {
      LsConfig cfg;
      cfg.noise = e.noise;
      cfg.max_flips = e.ls_max_flips;
      cfg.max_wall_s = wall_budget;
      cfg.cc_enabled = solver == SolverId::walksat_cc;
      cfg.seed = seed;
      cfg.threshold = threshold;
      LsResult res = walksat(formula, cfg);
      r.status = to_string(res.status);
      r.total_steps = res.flips;
      r.total_machine_time = static_cast<double>(res.flips);
      r.total_wall_s = res.wall_s;
      r.best_unsat_count = res.best_unsat.count;
      // occurrence lists, counters, unsat set and assignment
      r.memory_bytes = formula->num_literals() * 8 + formula->num_clauses() * 12 +
                       formula->num_variables() * 2;
      out.trace = std::move(res.trace);
    }
    r.best_unsat_fraction = static_cast<double>(r.best_unsat_count) / r.num_clauses;
    const ThresholdReport rep = machine_time_report(out.trace, threshold);
    r.met = rep.met;
    if (rep.met) {
      r.steps_to_threshold = rep.steps;
      r.machine_time_to_threshold = rep.machine_time;
      r.wall_to_threshold = rep.wall_s;
    }
  } catch (const std::exception& ex) {
    r.status = "failed";
    r.error = ex.what();
    r.met = false;
  }
  return out;
}

}  // namespace

RunOutput run_experiment(const Experiment& e, const std::string& out_dir,
                         const std::function<void(const BenchRecord&)>& on_record) {
  e.validate();
  struct Task {
    std::uint32_t n;
    std::uint32_t repeat;
  };
  std::vector<Task> tasks;
  for (auto n : e.n_values)
    for (std::uint32_t r = 0; r < e.repeats; ++r) tasks.push_back({n, r});

  const bool keep_traces = e.save_traces || e.kind == ExperimentKind::trajectory;
  std::ofstream stream;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    if (keep_traces) fs::create_directories(fs::path(out_dir) / "traces");
    if (e.save_instances) fs::create_directories(fs::path(out_dir) / "instances");
    stream.open(fs::path(out_dir) / "records.stream.csv", std::ios::binary);
    stream << kRecordHeader << '\n' << std::flush;
  }

  RunOutput output;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto emit = [&](SolverRun&& run) {
    std::lock_guard<std::mutex> lock(mu);
    if (stream.is_open()) {
      write_record(stream, run.record, e.reproducible);
      stream.flush();
    }
    if (on_record) on_record(run.record);
    if (keep_traces && !run.record.trace_file.empty())
      output.traces.emplace(run.record.trace_file, std::move(run.trace));
    output.records.push_back(std::move(run.record));
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task task = tasks[idx];
      GenSpec spec = e.gen;
      spec.n = task.n;
      spec.seed = instance_seed(e.seed, task.n, task.repeat);
      std::shared_ptr<const CnfFormula> formula;
      try {
        formula = std::make_shared<const CnfFormula>(generate_cnf(spec));
      } catch (const std::exception& ex) {
        for (SolverId s : e.solvers) {
          SolverRun failed;
          failed.record.solver = s;
          failed.record.status = "failed";
          failed.record.error = ex.what();
          failed.record.family = spec.family;
          failed.record.n = spec.n;
          failed.record.density = spec.density;
          failed.record.instance_seed = spec.seed;
          failed.record.repeat = task.repeat;
          failed.record.threshold = e.threshold;
          emit(std::move(failed));
        }
        continue;
      }
      if (!out_dir.empty() && e.save_instances)
        write_dimacs_file((fs::path(out_dir) / "instances" / (spec.descriptor() + ".cnf")).string(),
                          *formula);

      for (std::size_t si = 0; si < e.solvers.size(); ++si) {
        const SolverId solver = e.solvers[si];
        const std::uint64_t seed = derive_seed(spec.seed, 1 + static_cast<std::uint64_t>(solver));
        std::vector<double> ks{0.0};
        if (e.kind == ExperimentKind::timeout_family) ks = e.timeout_k;
        for (double k : ks) {
          double threshold = e.threshold;
          double wall = e.max_wall_s;
          if (e.kind == ExperimentKind::timeout_family) {
            wall = k * task.n * e.timeout_unit_s;
            threshold = 0.0;
          } else if (e.kind == ExperimentKind::optimum_estimate) {
            threshold = 0.0;
          }
          SolverRun run = run_solver(e, formula, solver, threshold, wall, seed);
          BenchRecord& r = run.record;
          r.family = spec.family;
          r.n = spec.n;
          r.density = spec.density;
          r.instance_seed = spec.seed;
          r.repeat = task.repeat;
          r.timeout_k = e.kind == ExperimentKind::timeout_family ? k : 0.0;
          if (keep_traces && r.status != "failed") {
            std::string name = "traces/" + spec.descriptor() + "__" + to_string(solver);
            if (r.timeout_k > 0) name += "__k" + format_double(k);
            r.trace_file = name + ".csv";
          }
          emit(std::move(run));
        }
      }
    }
  };

  const unsigned nworkers = std::min<unsigned>(e.workers, static_cast<unsigned>(tasks.size()));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(output.records.begin(), output.records.end());

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    {
      std::ofstream out(dir / "records.csv", std::ios::binary);
      write_records_csv(out, output.records, e.reproducible);
    }
    for (const auto& [file, trace] : output.traces) {
      std::ofstream out(dir / file, std::ios::binary);
      write_trace_csv(out, trace, e.reproducible);
    }
    nlohmann::ordered_json manifest;
    manifest["tool"] = "memsat";
    manifest["version"] = kVersion;
    manifest["experiment"] = e.to_kv();
    auto instances = nlohmann::ordered_json::array();
    for (const Task& t : tasks) {
      GenSpec g = e.gen;
      g.n = t.n;
      g.seed = instance_seed(e.seed, t.n, t.repeat);
      instances.push_back({{"descriptor", g.descriptor()},
                           {"n", t.n},
                           {"repeat", t.repeat},
                           {"seed", std::to_string(g.seed)}});
    }
    manifest["instances"] = instances;
    std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    stream.close();
    fs::remove(dir / "records.stream.csv");
  }
  return output;
}

Experiment read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error("malformed manifest " + path + ": " + ex.what());
  }
  if (!doc.contains("experiment") || !doc["experiment"].is_object())
    throw std::runtime_error("manifest " + path + " has no experiment section");
  KeyValues kv;
  for (const auto& [k, v] : doc["experiment"].items())
    kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return Experiment::from_kv(kv);
}

OptimumEstimate estimate_optimum(Family family, std::uint32_t n, double density,
                                 std::size_t ensemble_size, const IntegratorConfig& budget,
                                 const DmmParams& params, std::uint64_t seed) {
  if (ensemble_size == 0) throw std::invalid_argument("ensemble must not be empty");
  IntegratorConfig cfg = budget;
  cfg.stop.threshold = 0.0;
  OptimumEstimate est;
  for (std::size_t i = 0; i < ensemble_size; ++i) {
    GenSpec g{family, n, density, instance_seed(seed, n, static_cast<std::uint32_t>(i))};
    auto formula = std::make_shared<const CnfFormula>(generate_cnf(g));
    const SolveResult res = solve(formula, params, cfg, derive_seed(g.seed, 1));
    est.fractions.push_back(static_cast<double>(res.best_unsat.count) / formula->num_clauses());
    est.bound_violations += res.bound_violations;
  }
  const double k = static_cast<double>(est.fractions.size());
  est.mean = std::accumulate(est.fractions.begin(), est.fractions.end(), 0.0) / k;
  if (est.fractions.size() > 1) {
    double ss = 0.0;
    for (double f : est.fractions) ss += (f - est.mean) * (f - est.mean);
    est.stddev = std::sqrt(ss / (k - 1.0));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Scaling fits

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  return f;
}

double metric_value(const BenchRecord& r, TimeMetric m) {
  switch (m) {
    case TimeMetric::wall_s: return r.wall_to_threshold;
    case TimeMetric::steps: return static_cast<double>(r.steps_to_threshold);
    case TimeMetric::machine_time: return r.machine_time_to_threshold;
  }
  return 0.0;
}

}  // namespace

std::map<SolverId, ScalingFit> fit_scaling(const std::vector<BenchRecord>& records,
                                           TimeMetric metric, double target_n) {
  std::map<SolverId, std::pair<std::vector<double>, std::vector<double>>> data;
  std::set<SolverId> seen;
  for (const auto& r : records) {
    seen.insert(r.solver);
    if (!r.met || r.timeout_k > 0) continue;
    const double t = metric_value(r, metric);
    if (!(t > 0.0)) continue;
    data[r.solver].first.push_back(r.n);
    data[r.solver].second.push_back(t);
  }
  std::map<SolverId, ScalingFit> out;
  for (SolverId s : seen) {
    ScalingFit fit;
    fit.target_n = target_n;
    const auto& [ns, ts] = data[s];
    fit.points = ns.size();
    fit.distinct_n = std::set<double>(ns.begin(), ns.end()).size();
    if (fit.distinct_n < 3) {
      fit.reason = "insufficient data: need threshold-meeting records at >= 3 distinct n, have " +
                   std::to_string(fit.distinct_n);
      out[s] = fit;
      continue;
    }
    std::vector<double> logs(ts.size());
    std::transform(ts.begin(), ts.end(), logs.begin(), [](double t) { return std::log10(t); });
    const LineFit ex = least_squares(ns, logs);
    const LineFit lin = least_squares(ns, ts);
    fit.ok = true;
    fit.exp_slope = ex.slope;
    fit.exp_intercept = ex.intercept;
    fit.exp_r2 = ex.r2;
    fit.lin_slope = lin.slope;
    fit.lin_intercept = lin.intercept;
    fit.lin_r2 = lin.r2;
    fit.exp_extrapolated_log10 = ex.intercept + ex.slope * target_n;
    fit.lin_extrapolated = lin.intercept + lin.slope * target_n;
    out[s] = fit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG charts

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream s;
  if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3)) s << std::setprecision(2) << std::scientific << v;
  else s << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

std::string render_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  constexpr double W = 760, H = 500, L = 80, R = 190, T = 50, B = 60;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (auto [x, y] : s.points)
      if (usable(x, y)) {
        x0 = std::min(x0, tx(x));
        x1 = std::max(x1, tx(x));
        y0 = std::min(y0, ty(y));
        y1 = std::max(y1, ty(y));
      }
  if (!std::isfinite(x0)) throw std::invalid_argument("chart '" + spec.title + "' has no plottable points");
  if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
  if (!spec.log_y && y0 > 0) y0 = 0;
  const double px = (x1 - x0) * 0.03, py = (y1 - y0) * 0.05;
  x0 -= px; x1 += px; y0 -= spec.log_y ? py : 0; y1 += py;
  auto sx = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
    << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo); e <= std::floor(hi); e += std::max(1.0, std::floor((hi - lo) / 8)))
        out.push_back(e);
      if (out.size() < 2) out = {lo, (lo + hi) / 2, hi};
      return out;
    }
    const double raw = (hi - lo) / 5;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) { step = m * mag; break; }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12; v += step) out.push_back(v);
    return out;
  };
  for (double t : ticks(x0, x1, spec.log_x)) {
    const double value = spec.log_x ? std::pow(10.0, t) : t;
    const double x = L + (t - x0) / (x1 - x0) * (W - L - R);
    o << "<line x1=\"" << x << "\" y1=\"" << H - B << "\" x2=\"" << x << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << tick_label(value) << "</text>\n";
  }
  for (double t : ticks(y0, y1, spec.log_y)) {
    const double value = spec.log_y ? std::pow(10.0, t) : t;
    const double y = H - B - (t - y0) / (y1 - y0) * (H - T - B);
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << y << "\" x2=\"" << L << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
      << tick_label(value) << "</text>\n";
  }
  o << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
    << xml_escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(20," << T + (H - T - B) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(spec.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(2);
    for (auto [x, y] : s.points)
      if (usable(x, y)) pts << sx(x) << ',' << sy(y) << ' ';
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    if (!s.dashed)
      for (auto [x, y] : s.points)
        if (usable(x, y))
          o << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
    const double ly = T + 10 + 20 * static_cast<double>(i);
    o << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 45 << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    o << "<text x=\"" << W - R + 52 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::vector<std::string> emit_record_charts(const std::vector<BenchRecord>& records,
                                            const std::string& out_dir, const ChartOptions& opts) {
  if (records.empty()) throw std::invalid_argument("no records to chart");

  // Render everything in memory first so a failure leaves no partial output.
  std::vector<std::pair<std::string, std::string>> files;

  std::map<SolverId, std::map<std::uint32_t, std::vector<double>>> ttt;
  std::map<std::pair<SolverId, double>, std::map<std::uint32_t, std::vector<double>>> fam;
  for (const auto& r : records) {
    if (r.timeout_k > 0) fam[{r.solver, r.timeout_k}][r.n].push_back(100.0 * r.best_unsat_fraction);
    else if (r.met) ttt[r.solver][r.n].push_back(metric_value(r, opts.metric));
  }

  if (!ttt.empty()) {
    std::vector<Series> series;
    std::ostringstream csv;
    csv << "solver,n,median_time,count\n";
    for (const auto& [solver, by_n] : ttt) {
      Series s{to_string(solver), {}, false};
      for (const auto& [n, ts] : by_n) {
        const double m = median(ts);
        s.points.emplace_back(n, m);
        csv << to_string(solver) << ',' << n << ',' << format_double(m) << ',' << ts.size() << '\n';
      }
      series.push_back(std::move(s));
    }
    if (opts.extrapolate) {
      const auto fits = fit_scaling(records, opts.metric, opts.target_n);
      for (const auto& [solver, fit] : fits) {
        if (!fit.ok || !ttt.count(solver)) continue;
        const double n_last = ttt.at(solver).rbegin()->first;
        Series s{to_string(solver) + " (extrapolated)", {}, true};
        constexpr int kPoints = 24;
        for (int i = 0; i <= kPoints; ++i) {
          const double n = n_last + (opts.target_n - n_last) * i / kPoints;
          const double lg = fit.exp_intercept + fit.exp_slope * n;
          if (lg < 300) s.points.emplace_back(n, std::pow(10.0, lg));
        }
        series.push_back(std::move(s));
        csv << to_string(solver) << "_extrapolated," << format_double(opts.target_n) << ",1e"
            << format_double(fit.exp_extrapolated_log10) << ",0\n";
      }
    }
    ChartSpec spec{"Time to threshold vs number of variables", "n (variables)",
                   "time to threshold (" + to_string(opts.metric) + ")", false, true};
    files.emplace_back("time_to_threshold.svg", render_svg(spec, series));
    files.emplace_back("time_to_threshold.csv", csv.str());
  }

  if (!fam.empty()) {
    std::vector<Series> series;
    std::ostringstream csv;
    csv << "solver,k,n,mean_unsat_percent,count\n";
    for (const auto& [key, by_n] : fam) {
      Series s{to_string(key.first) + " t_out=" + format_double(key.second) + "n", {}, false};
      for (const auto& [n, us] : by_n) {
        const double mean = std::accumulate(us.begin(), us.end(), 0.0) / us.size();
        s.points.emplace_back(n, mean);
        csv << to_string(key.first) << ',' << format_double(key.second) << ',' << n << ','
            << format_double(mean) << ',' << us.size() << '\n';
      }
      series.push_back(std::move(s));
    }
    ChartSpec spec{"Unsatisfied clauses vs n per timeout", "n (variables)", "unsat clauses (%)",
                   false, false};
    files.emplace_back("timeout_family.svg", render_svg(spec, series));
    files.emplace_back("timeout_family.csv", csv.str());
  }

  if (files.empty())
    throw std::invalid_argument("records contain neither threshold-meeting runs nor timeout families");

  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  for (const auto& [name, content] : files) {
    const fs::path p = fs::path(out_dir) / name;
    write_file(p, content);
    paths.push_back(p.string());
  }
  return paths;
}

std::vector<std::string> emit_trace_charts(const std::vector<NamedTrace>& traces,
                                           const std::string& out_dir) {
  if (traces.empty()) throw std::invalid_argument("no traces to chart");
  std::vector<Series> by_norm, by_machine;
  std::ostringstream csv;
  csv << "label,n,wall_over_n,machine_time,unsat_percent\n";
  for (const auto& nt : traces) {
    if (nt.trace.samples.empty()) throw std::invalid_argument("trace '" + nt.label + "' is empty");
    const std::string label = nt.label + " n=" + std::to_string(nt.n);
    Series a{label, {}, false}, b{label, {}, false};
    for (const auto& s : nt.trace.samples) {
      const double pct = 100.0 * nt.trace.fraction(s);
      const double norm = nt.n ? s.wall_s / nt.n : s.wall_s;
      a.points.emplace_back(norm, pct);
      b.points.emplace_back(s.machine_time, pct);
      csv << nt.label << ',' << nt.n << ',' << format_double(norm) << ','
          << format_double(s.machine_time) << ',' << format_double(pct) << '\n';
    }
    by_norm.push_back(std::move(a));
    by_machine.push_back(std::move(b));
  }
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("unsat_vs_normalized_time.svg",
                     render_svg({"Unsatisfied clauses vs time / n", "wall time / n (s)",
                                 "unsat clauses (%)", true, false},
                                by_norm));
  files.emplace_back("unsat_vs_machine_time.svg",
                     render_svg({"Unsatisfied clauses vs machine time", "machine time",
                                 "unsat clauses (%)", true, false},
                                by_machine));
  files.emplace_back("traces.csv", csv.str());

  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  for (const auto& [name, content] : files) {
    const fs::path p = fs::path(out_dir) / name;
    write_file(p, content);
    paths.push_back(p.string());
  }
  return paths;
}

}  // namespace memsat

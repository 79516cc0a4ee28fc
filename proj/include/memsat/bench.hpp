#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memsat/baseline.hpp"
#include "memsat/config.hpp"
#include "memsat/dmm.hpp"
#include "memsat/gen.hpp"
#include "memsat/integrator.hpp"

namespace memsat {

enum class ExperimentKind { time_to_threshold, trajectory, timeout_family, optimum_estimate };
enum class SolverId { dmm, walksat, walksat_cc };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(SolverId s);
SolverId solver_from_string(const std::string& s);

inline constexpr std::uint32_t kDefaultMaxN = 50'000;
inline constexpr std::uint32_t kHugeMaxN = 2'000'000;

struct Experiment {
  ExperimentKind kind = ExperimentKind::time_to_threshold;
  GenSpec gen{Family::delta_e3sat, 0, 5.0};  // template; n from n_values, seed from `seed`
  std::vector<std::uint32_t> n_values;
  std::vector<SolverId> solvers{SolverId::dmm};
  double threshold = 0.015;
  std::uint32_t repeats = 1;
  std::uint64_t seed = 1;

  // Per-run budgets. Wall-clock limits apply to every solver the same way.
  std::uint64_t dmm_max_steps = 1'000'000;
  double dmm_max_machine_time = 0.0;  // 0 = unlimited
  std::uint64_t ls_max_flips = 100'000'000;
  double max_wall_s = 600.0;

  // timeout_family: t_out = k * n * timeout_unit_s
  std::vector<double> timeout_k{1, 2, 4};
  double timeout_unit_s = 1.0;

  DmmParams dmm;
  IntegratorConfig integrator;
  double noise = 0.5;

  unsigned workers = 1;
  bool huge = false;           // lifts the n cap to kHugeMaxN
  bool reproducible = false;   // zero wall-clock columns so outputs are byte-stable
  bool save_instances = false;
  bool save_traces = false;    // always on for trajectory experiments

  void validate() const;
  KeyValues to_kv() const;
  static Experiment from_kv(const KeyValues& kv);
};

struct BenchRecord {
  Family family = Family::random_e3sat;
  std::uint32_t n = 0;
  double density = 0.0;
  std::uint64_t instance_seed = 0;
  std::uint32_t repeat = 0;
  SolverId solver = SolverId::dmm;
  double timeout_k = 0.0;  // only for timeout_family
  std::string status;      // threshold_met | timeout | equilibrium | failed
  double threshold = 0.0;
  bool met = false;
  std::uint64_t steps_to_threshold = 0;
  double machine_time_to_threshold = 0.0;
  double wall_to_threshold = 0.0;
  std::uint64_t total_steps = 0;
  double total_machine_time = 0.0;
  double total_wall_s = 0.0;
  std::uint64_t best_unsat_count = 0;
  std::size_t num_clauses = 0;
  double best_unsat_fraction = 0.0;
  std::size_t memory_bytes = 0;
  std::size_t bound_violations = 0;
  std::string trace_file;
  std::string error;

  std::string instance_descriptor() const;
  /// Sort key: family, n, repeat, solver, k.
  bool operator<(const BenchRecord& o) const;
};

void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                       bool zero_wall_time = false);
std::vector<BenchRecord> read_records_csv(std::istream& in);
SolverTrace read_trace_csv(std::istream& in, std::size_t num_clauses);

/// Seed of the r-th instance at size n.
std::uint64_t instance_seed(std::uint64_t base, std::uint32_t n, std::uint32_t repeat);

struct RunOutput {
  std::vector<BenchRecord> records;
  std::map<std::string, SolverTrace> traces;  // keyed by BenchRecord::trace_file
};

/// Runs every (n, repeat) instance through every selected solver. When
/// `out_dir` is non-empty, records are streamed to records.stream.csv as they
/// complete, then records.csv (sorted), traces/, instances/ and manifest.json
/// are written. Solver failures become records with status "failed".
RunOutput run_experiment(const Experiment& e, const std::string& out_dir = {},
                         const std::function<void(const BenchRecord&)>& on_record = {});

/// Experiment recorded in a manifest.json written by run_experiment.
Experiment read_manifest(const std::string& path);

struct OptimumEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> fractions;
  std::size_t bound_violations = 0;
};

/// DMM best unsat fraction averaged over an ensemble of generated instances.
OptimumEstimate estimate_optimum(Family family, std::uint32_t n, double density,
                                 std::size_t ensemble_size, const IntegratorConfig& budget,
                                 const DmmParams& params = {}, std::uint64_t seed = 1);

enum class TimeMetric { wall_s, steps, machine_time };
std::string to_string(TimeMetric m);
TimeMetric time_metric_from_string(const std::string& s);

struct ScalingFit {
  bool ok = false;
  std::string reason;  // why ok is false
  std::size_t points = 0;
  std::size_t distinct_n = 0;
  // log10(time) = exp_intercept + exp_slope * n
  double exp_slope = 0.0, exp_intercept = 0.0, exp_r2 = 0.0;
  // time = lin_intercept + lin_slope * n
  double lin_slope = 0.0, lin_intercept = 0.0, lin_r2 = 0.0;
  double target_n = 0.0;
  double exp_extrapolated_log10 = 0.0;
  double lin_extrapolated = 0.0;
};

/// Least-squares fits of threshold-meeting records, per solver.
std::map<SolverId, ScalingFit> fit_scaling(const std::vector<BenchRecord>& records,
                                           TimeMetric metric = TimeMetric::wall_s,
                                           double target_n = 2e6);

struct ChartOptions {
  TimeMetric metric = TimeMetric::wall_s;
  bool extrapolate = false;
  double target_n = 2e6;
};

struct NamedTrace {
  std::string label;
  std::uint32_t n = 0;
  SolverTrace trace;
};

/// Time-to-threshold vs n (log y) for time_to_threshold records, and unsat %
/// vs n per timeout for timeout_family records. Writes SVG and CSV files and
/// returns their paths. Throws before touching the disk on empty input.
std::vector<std::string> emit_record_charts(const std::vector<BenchRecord>& records,
                                            const std::string& out_dir,
                                            const ChartOptions& opts = {});
/// Unsat % vs wall time / n, and unsat % vs machine time.
std::vector<std::string> emit_trace_charts(const std::vector<NamedTrace>& traces,
                                           const std::string& out_dir);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

std::string render_svg(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace memsat

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsat/config.hpp"
#include "memsat/dmm.hpp"
#include "memsat/formula.hpp"

namespace memsat {

enum class Method { euler, heun };

struct StopRule {
  double threshold = 0.0;  // stop once the best unsat fraction is <= threshold
  double max_machine_time = std::numeric_limits<double>::infinity();
  double max_wall_s = std::numeric_limits<double>::infinity();
  std::uint64_t max_steps = 1'000'000;
};

struct IntegratorConfig {
  double dt_init = 0x1p-7;
  double dt_min = 0x1p-15;
  double dt_max = 1.0;
  double max_dv = 0.2;  // cap on per-step voltage change
  double grow = 1.25;
  double shrink = 0.5;
  Method method = Method::euler;
  StopRule stop;
  double equilibrium_tol = 1e-6;
  double trace_ratio = 1.2;  // geometric spacing of trace samples in step count
  bool verify_bounds = true;

  void validate() const;
  KeyValues to_kv() const;
  static IntegratorConfig from_kv(const KeyValues& kv);
};

class StepFailure : public std::runtime_error {
 public:
  StepFailure(double dt, double max_dv, std::size_t variable, double t);
  double dt() const { return dt_; }
  double max_dv() const { return max_dv_; }
  std::size_t variable() const { return variable_; }
  double machine_time() const { return t_; }

 private:
  double dt_;
  double max_dv_;
  std::size_t variable_;
  double t_;
};

struct StepOutcome {
  double dt_used = 0.0;
  double dt_next = 0.0;
  double max_dv = 0.0;  // largest |change| of a voltage after clamping
  int rejections = 0;
};

/// One step-size-controlled forward step from `state` using the derivative
/// `deriv` already evaluated there. A proposal whose largest clamped voltage
/// change exceeds cfg.max_dv is retried with dt * shrink; an accepted step
/// clamps the state and suggests min(dt * grow, dt_max) for the next one.
/// Throws StepFailure when dt would drop below dt_min.
StepOutcome step(DmmState& state, const Circuit& circuit, const IntegratorConfig& cfg, double dt,
                 const DmmDerivative& deriv);
/// Same, evaluating the flow field first.
StepOutcome step(DmmState& state, const Circuit& circuit, const IntegratorConfig& cfg, double dt);

struct TraceSample {
  double machine_time = 0.0;
  std::uint64_t steps = 0;
  double wall_s = 0.0;
  std::uint64_t best_unsat_count = 0;
  std::uint64_t best_unsat_weight = 0;
};

/// Best-so-far trajectory of a run. Shared by the DMM and local-search
/// solvers; for local search `steps` counts flips and machine_time equals it.
struct SolverTrace {
  std::vector<TraceSample> samples;
  Assignment best_assignment;
  std::size_t num_clauses = 0;
  std::uint64_t total_weight = 0;
  bool weighted = false;

  /// Weight fraction for weighted formulas, count / M otherwise.
  double fraction(const TraceSample& s) const;
  const TraceSample& last() const { return samples.back(); }
};

/// CSV with header machine_time,steps,wall_s,unsat_count,unsat_frac.
void write_trace_csv(std::ostream& out, const SolverTrace& trace, bool zero_wall_time = false);

enum class SolveStatus { threshold_met, timeout, equilibrium };
std::string to_string(SolveStatus s);

struct SolveResult {
  Assignment best;
  UnsatCount best_unsat;
  SolverTrace trace;
  SolveStatus status = SolveStatus::timeout;
  std::uint64_t steps = 0;
  std::uint64_t rejected_steps = 0;
  double machine_time = 0.0;
  double wall_s = 0.0;
  std::size_t bound_violations = 0;  // accepted states outside their box
  DmmState final_state;
  std::size_t memory_bytes = 0;
};

SolveResult solve(std::shared_ptr<const CnfFormula> formula, const DmmParams& params,
                  const IntegratorConfig& cfg, std::uint64_t seed);
SolveResult solve(const CnfFormula& formula, const DmmParams& params, const IntegratorConfig& cfg,
                  std::uint64_t seed);

struct ThresholdReport {
  bool met = false;
  std::uint64_t steps = 0;
  double machine_time = 0.0;
  double wall_s = 0.0;
};

/// First sample whose best fraction is <= threshold; met = false otherwise.
ThresholdReport machine_time_report(const SolverTrace& trace, double threshold);

}  // namespace memsat

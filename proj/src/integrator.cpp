#include "memsat/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace memsat {

void IntegratorConfig::validate() const {
  if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
    throw std::invalid_argument("need 0 < dt_min <= dt_init <= dt_max");
  if (!(max_dv > 0.0 && max_dv < 2.0)) throw std::invalid_argument("max_dv must lie in (0, 2)");
  if (!(grow >= 1.0)) throw std::invalid_argument("grow must be >= 1");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
  if (!(stop.threshold >= 0.0 && stop.threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1]");
  if (!(stop.max_machine_time > 0.0) || !(stop.max_wall_s > 0.0) || stop.max_steps == 0)
    throw std::invalid_argument("budgets must be positive");
  if (!(trace_ratio > 1.0)) throw std::invalid_argument("trace_ratio must exceed 1");
}

KeyValues IntegratorConfig::to_kv() const {
  KeyValues kv{{"dt_init", format_double(dt_init)},
               {"dt_min", format_double(dt_min)},
               {"dt_max", format_double(dt_max)},
               {"max_dv", format_double(max_dv)},
               {"grow", format_double(grow)},
               {"shrink", format_double(shrink)},
               {"method", method == Method::heun ? "heun" : "euler"},
               {"threshold", format_double(stop.threshold)},
               {"max_steps", std::to_string(stop.max_steps)}};
  if (std::isfinite(stop.max_machine_time))
    kv["max_machine_time"] = format_double(stop.max_machine_time);
  if (std::isfinite(stop.max_wall_s)) kv["max_wall_s"] = format_double(stop.max_wall_s);
  return kv;
}

IntegratorConfig IntegratorConfig::from_kv(const KeyValues& kv) {
  IntegratorConfig c;
  c.dt_init = kv_double(kv, "dt_init", c.dt_init);
  c.dt_min = kv_double(kv, "dt_min", c.dt_min);
  c.dt_max = kv_double(kv, "dt_max", c.dt_max);
  c.max_dv = kv_double(kv, "max_dv", c.max_dv);
  c.grow = kv_double(kv, "grow", c.grow);
  c.shrink = kv_double(kv, "shrink", c.shrink);
  const std::string method = kv_string(kv, "method", "euler");
  if (method == "heun") c.method = Method::heun;
  else if (method == "euler") c.method = Method::euler;
  else throw std::invalid_argument("method must be 'euler' or 'heun'");
  c.stop.threshold = kv_double(kv, "threshold", c.stop.threshold);
  c.stop.max_machine_time = kv_double(kv, "max_machine_time", c.stop.max_machine_time);
  c.stop.max_wall_s = kv_double(kv, "max_wall_s", c.stop.max_wall_s);
  c.stop.max_steps = kv_u64(kv, "max_steps", c.stop.max_steps);
  c.validate();
  return c;
}

namespace {

std::string failure_message(double dt, double max_dv, std::size_t variable, double t) {
  std::ostringstream s;
  s << "step size underflow at t=" << t << ": dt=" << dt << " still moves variable "
    << variable + 1 << " by " << max_dv;
  return s.str();
}

// Largest clamped voltage change for a trial step, and where it happens.
std::pair<double, std::size_t> max_voltage_change(const std::vector<double>& v,
                                                  const std::vector<double>& dv, double dt) {
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double moved = std::abs(std::clamp(v[i] + dt * dv[i], -1.0, 1.0) - v[i]);
    if (moved > worst) {
      worst = moved;
      where = i;
    }
  }
  return {worst, where};
}

void advance(DmmState& state, const Circuit& circuit, const DmmDerivative& d, double dt) {
  const double cap = circuit.xl_max();
  for (std::size_t i = 0; i < state.v.size(); ++i)
    state.v[i] = std::clamp(state.v[i] + dt * d.dv[i], -1.0, 1.0);
  for (std::size_t g = 0; g < state.xs.size(); ++g) {
    state.xs[g] = std::clamp(state.xs[g] + dt * d.dxs[g], 0.0, 1.0);
    state.xl[g] = std::clamp(state.xl[g] + dt * d.dxl[g], 1.0, cap);
  }
  state.t += dt;
}

}  // namespace

StepFailure::StepFailure(double dt, double max_dv, std::size_t variable, double t)
    : std::runtime_error(failure_message(dt, max_dv, variable, t)),
      dt_(dt),
      max_dv_(max_dv),
      variable_(variable),
      t_(t) {}

StepOutcome step(DmmState& state, const Circuit& circuit, const IntegratorConfig& cfg, double dt,
                 const DmmDerivative& deriv) {
  StepOutcome out;
  dt = std::clamp(dt, cfg.dt_min, cfg.dt_max);
  for (;;) {
    auto [moved, where] = max_voltage_change(state.v, deriv.dv, dt);
    if (cfg.method == Method::heun && moved <= cfg.max_dv) {
      // Trapezoidal corrector on top of the Euler predictor.
      DmmState predicted = state;
      advance(predicted, circuit, deriv, dt);
      DmmDerivative second;
      flow_field(predicted, circuit, second);
      DmmDerivative avg = deriv;
      for (std::size_t i = 0; i < avg.dv.size(); ++i) avg.dv[i] = 0.5 * (avg.dv[i] + second.dv[i]);
      for (std::size_t g = 0; g < avg.dxs.size(); ++g) {
        avg.dxs[g] = 0.5 * (avg.dxs[g] + second.dxs[g]);
        avg.dxl[g] = 0.5 * (avg.dxl[g] + second.dxl[g]);
      }
      std::tie(moved, where) = max_voltage_change(state.v, avg.dv, dt);
      if (moved <= cfg.max_dv) {
        advance(state, circuit, avg, dt);
        out.dt_used = dt;
        out.max_dv = moved;
        out.dt_next = std::min(dt * cfg.grow, cfg.dt_max);
        return out;
      }
    } else if (moved <= cfg.max_dv) {
      advance(state, circuit, deriv, dt);
      out.dt_used = dt;
      out.max_dv = moved;
      out.dt_next = std::min(dt * cfg.grow, cfg.dt_max);
      return out;
    }
    const double next = dt * cfg.shrink;
    if (next < cfg.dt_min) throw StepFailure(dt, moved, where, state.t);
    dt = next;
    ++out.rejections;
  }
}

StepOutcome step(DmmState& state, const Circuit& circuit, const IntegratorConfig& cfg, double dt) {
  DmmDerivative d;
  flow_field(state, circuit, d);
  return step(state, circuit, cfg, dt, d);
}

double SolverTrace::fraction(const TraceSample& s) const {
  if (weighted) return total_weight ? static_cast<double>(s.best_unsat_weight) / total_weight : 0.0;
  return num_clauses ? static_cast<double>(s.best_unsat_count) / num_clauses : 0.0;
}

void write_trace_csv(std::ostream& out, const SolverTrace& trace, bool zero_wall_time) {
  out << "machine_time,steps,wall_s,unsat_count,unsat_frac\n";
  for (const auto& s : trace.samples) {
    out << format_double(s.machine_time) << ',' << s.steps << ','
        << format_double(zero_wall_time ? 0.0 : s.wall_s) << ',' << s.best_unsat_count << ','
        << format_double(trace.fraction(s)) << '\n';
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::threshold_met: return "threshold_met";
    case SolveStatus::timeout: return "timeout";
    case SolveStatus::equilibrium: return "equilibrium";
  }
  return "?";
}

namespace {

// Unsat bookkeeping for the sign readout of the voltages, updated only for
// variables whose sign changed.
class ReadoutTracker {
 public:
  ReadoutTracker(const Circuit& circuit, const std::vector<double>& v)
      : circuit_(circuit), value_(v.size()), true_count_(circuit.num_gates(), 0) {
    const CnfFormula& f = circuit.formula();
    for (std::size_t i = 0; i < v.size(); ++i) value_[i] = v[i] >= 0.0;
    for (std::size_t g = 0; g < circuit.num_gates(); ++g) {
      for (const Literal& lit : f.clause(g).literals)
        if (lit.satisfied_by(value_[lit.var])) ++true_count_[g];
      if (true_count_[g] == 0) {
        ++unsat_.count;
        unsat_.weight += f.effective_weight(g);
      }
    }
  }

  void update(const std::vector<double>& v) {
    const CnfFormula& f = circuit_.formula();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::uint8_t now = v[i] >= 0.0;
      if (now == value_[i]) continue;
      value_[i] = now;
      for (std::uint32_t g : circuit_.var_gates(i)) {
        const auto vars = circuit_.gate_vars(g);
        const auto q = circuit_.gate_polarity(g);
        const std::size_t j = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), i) - vars.begin());
        const bool sat_now = (q[j] > 0) == (now != 0);
        if (sat_now) {
          if (true_count_[g]++ == 0) {
            --unsat_.count;
            unsat_.weight -= f.effective_weight(g);
          }
        } else if (--true_count_[g] == 0) {
          ++unsat_.count;
          unsat_.weight += f.effective_weight(g);
        }
      }
    }
  }

  const UnsatCount& unsat() const { return unsat_; }
  Assignment assignment() const { return Assignment(value_.begin(), value_.end()); }

 private:
  const Circuit& circuit_;
  std::vector<std::uint8_t> value_;
  std::vector<std::uint32_t> true_count_;
  UnsatCount unsat_;
};

bool better(const UnsatCount& a, const UnsatCount& b) {
  return a.weight < b.weight || (a.weight == b.weight && a.count < b.count);
}

}  // namespace

SolveResult solve(std::shared_ptr<const CnfFormula> formula, const DmmParams& params,
                  const IntegratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const Circuit circuit(std::move(formula), params);
  const CnfFormula& f = circuit.formula();
  SolveResult res;
  res.memory_bytes = circuit.memory_estimate();
  res.trace.num_clauses = f.num_clauses();
  res.trace.total_weight = f.total_weight();
  res.trace.weighted = f.is_weighted();

  DmmState state = init_state(circuit, seed);
  ReadoutTracker tracker(circuit, state.v);
  res.best_unsat = tracker.unsat();
  res.best = tracker.assignment();

  auto sample = [&](std::uint64_t steps) {
    if (!res.trace.samples.empty() && res.trace.samples.back().steps == steps) {
      auto& s = res.trace.samples.back();
      s.best_unsat_count = res.best_unsat.count;
      s.best_unsat_weight = res.best_unsat.weight;
      return;
    }
    res.trace.samples.push_back(
        {state.t, steps, elapsed(), res.best_unsat.count, res.best_unsat.weight});
  };
  auto threshold_met = [&] {
    TraceSample s;
    s.best_unsat_count = res.best_unsat.count;
    s.best_unsat_weight = res.best_unsat.weight;
    return res.trace.fraction(s) <= cfg.stop.threshold;
  };

  sample(0);
  DmmDerivative deriv;
  double dt = cfg.dt_init;
  double next_sample = 1.0;
  std::uint64_t steps = 0;
  if (threshold_met()) {
    res.status = SolveStatus::threshold_met;
  } else {
    res.status = SolveStatus::timeout;
    for (;;) {
      if (steps >= cfg.stop.max_steps || state.t >= cfg.stop.max_machine_time ||
          elapsed() >= cfg.stop.max_wall_s)
        break;
      const FlowStats stats = flow_field(state, circuit, deriv);
      if (stats.max_inconsistency < params.gamma) {
        bool still = true;
        for (std::size_t i = 0; i < state.v.size() && still; ++i) {
          double d = deriv.dv[i];
          if ((state.v[i] >= 1.0 && d > 0) || (state.v[i] <= -1.0 && d < 0)) d = 0.0;
          still = std::abs(d) < cfg.equilibrium_tol;
        }
        if (still) {
          res.status = SolveStatus::equilibrium;
          break;
        }
      }
      const StepOutcome out = step(state, circuit, cfg, dt, deriv);
      dt = out.dt_next;
      res.rejected_steps += static_cast<std::uint64_t>(out.rejections);
      ++steps;
      if (cfg.verify_bounds && !state_in_bounds(state, circuit)) ++res.bound_violations;

      tracker.update(state.v);
      bool record = false;
      if (better(tracker.unsat(), res.best_unsat)) {
        res.best_unsat = tracker.unsat();
        res.best = tracker.assignment();
        record = true;
      }
      if (static_cast<double>(steps) >= next_sample) {
        while (next_sample <= static_cast<double>(steps))
          next_sample = std::max(next_sample + 1.0, std::ceil(next_sample * cfg.trace_ratio));
        record = true;
      }
      if (record) sample(steps);
      if (threshold_met()) {
        res.status = SolveStatus::threshold_met;
        break;
      }
    }
  }
  sample(steps);
  res.steps = steps;
  res.machine_time = state.t;
  res.wall_s = elapsed();
  res.trace.best_assignment = res.best;
  res.final_state = std::move(state);
  return res;
}

SolveResult solve(const CnfFormula& formula, const DmmParams& params, const IntegratorConfig& cfg,
                  std::uint64_t seed) {
  return solve(std::make_shared<const CnfFormula>(formula), params, cfg, seed);
}

ThresholdReport machine_time_report(const SolverTrace& trace, double threshold) {
  ThresholdReport r;
  for (const auto& s : trace.samples) {
    if (trace.fraction(s) <= threshold) {
      r.met = true;
      r.steps = s.steps;
      r.machine_time = s.machine_time;
      r.wall_s = s.wall_s;
      return r;
    }
  }
  return r;
}

}  // namespace memsat

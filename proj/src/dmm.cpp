#include "memsat/dmm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "memsat/rng.hpp"

namespace memsat {

void DmmParams::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw std::invalid_argument(std::string(name) + " must be positive and finite");
  };
  positive(alpha, "alpha");
  positive(beta, "beta");
  positive(epsilon, "epsilon");
  positive(zeta, "zeta");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (xl_max != 0.0 && !(xl_max >= 1.0))
    throw std::invalid_argument("xl_max must be >= 1 (or 0 for the default)");
}

KeyValues DmmParams::to_kv() const {
  return {{"alpha", format_double(alpha)},     {"beta", format_double(beta)},
          {"gamma", format_double(gamma)},     {"delta", format_double(delta)},
          {"epsilon", format_double(epsilon)}, {"zeta", format_double(zeta)},
          {"xl_max", format_double(xl_max)}};
}

DmmParams DmmParams::from_kv(const KeyValues& kv) {
  DmmParams p;
  p.alpha = kv_double(kv, "alpha", p.alpha);
  p.beta = kv_double(kv, "beta", p.beta);
  p.gamma = kv_double(kv, "gamma", p.gamma);
  p.delta = kv_double(kv, "delta", p.delta);
  p.epsilon = kv_double(kv, "epsilon", p.epsilon);
  p.zeta = kv_double(kv, "zeta", p.zeta);
  p.xl_max = kv_double(kv, "xl_max", p.xl_max);
  p.validate();
  return p;
}

Circuit::Circuit(std::shared_ptr<const CnfFormula> formula, const DmmParams& params)
    : formula_(std::move(formula)), params_(params) {
  params_.validate();
  const CnfFormula& f = *formula_;
  const std::size_t m = f.num_clauses();
  num_vars_ = f.num_variables();
  xl_max_ = params_.xl_max > 0.0 ? params_.xl_max : 1e4 * static_cast<double>(m);

  offsets_.reserve(m + 1);
  offsets_.push_back(0);
  vars_.reserve(f.num_literals());
  polarity_.reserve(f.num_literals());
  scale_.resize(m);
  hard_.resize(m);
  std::vector<std::size_t> degree(num_vars_, 0);
  for (std::size_t c = 0; c < m; ++c) {
    const Clause& cl = f.clause(c);
    for (const Literal& lit : cl.literals) {
      vars_.push_back(lit.var);
      polarity_.push_back(static_cast<double>(lit.polarity()));
      ++degree[lit.var];
    }
    offsets_.push_back(vars_.size());
    hard_[c] = cl.hard ? 1 : 0;
    scale_[c] = static_cast<double>(cl.weight);
  }

  var_offsets_.assign(num_vars_ + 1, 0);
  for (std::size_t i = 0; i < num_vars_; ++i) var_offsets_[i + 1] = var_offsets_[i] + degree[i];
  var_gates_.resize(vars_.size());
  std::vector<std::size_t> fill(var_offsets_.begin(), var_offsets_.end() - 1);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t p = offsets_[c]; p < offsets_[c + 1]; ++p)
      var_gates_[fill[vars_[p]]++] = static_cast<std::uint32_t>(c);

  // Hard gates: one more than the combined scale of all soft neighbours.
  std::vector<std::size_t> mark(m, std::numeric_limits<std::size_t>::max());
  for (std::size_t h = 0; h < m; ++h) {
    if (!hard_[h]) continue;
    double sum = 0.0;
    for (std::uint32_t var : gate_vars(h))
      for (std::uint32_t g : var_gates(var))
        if (!hard_[g] && mark[g] != h) {
          mark[g] = h;
          sum += scale_[g];
        }
    scale_[h] = 1.0 + sum;
  }
}

long long Circuit::check_current_scales() const {
  const std::size_t m = num_gates();
  std::vector<std::size_t> mark(m, std::numeric_limits<std::size_t>::max());
  for (std::size_t h = 0; h < m; ++h) {
    if (!(scale_[h] > 0.0)) return static_cast<long long>(h);
    if (!hard_[h]) continue;
    double sum = 0.0;
    for (std::uint32_t var : gate_vars(h))
      for (std::uint32_t g : var_gates(var))
        if (!hard_[g] && mark[g] != h) {
          mark[g] = h;
          sum += scale_[g];
        }
    if (!(scale_[h] > sum)) return static_cast<long long>(h);
  }
  return -1;
}

std::size_t Circuit::memory_estimate() const {
  const std::size_t m = num_gates();
  std::size_t bytes = offsets_.capacity() * sizeof(std::size_t) +
                      vars_.capacity() * sizeof(std::uint32_t) +
                      polarity_.capacity() * sizeof(double) + scale_.capacity() * sizeof(double) +
                      hard_.capacity() + var_offsets_.capacity() * sizeof(std::size_t) +
                      var_gates_.capacity() * sizeof(std::uint32_t);
  bytes += 2 * (num_vars_ + 2 * m) * sizeof(double);
  return bytes;
}

Circuit build_circuit(std::shared_ptr<const CnfFormula> formula, const DmmParams& params) {
  return Circuit(std::move(formula), params);
}

Circuit build_circuit(const CnfFormula& formula, const DmmParams& params) {
  return Circuit(std::make_shared<const CnfFormula>(formula), params);
}

double clause_satisfaction(const Circuit& circuit, std::size_t m, std::span<const double> v) {
  const auto vars = circuit.gate_vars(m);
  const auto q = circuit.gate_polarity(m);
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < vars.size(); ++j) c = std::min(c, 0.5 * (1.0 - q[j] * v[vars[j]]));
  return std::clamp(c, 0.0, 1.0);
}

FlowStats flow_field(const DmmState& state, const Circuit& circuit, DmmDerivative& out) {
  const std::size_t n = circuit.num_variables();
  const std::size_t m = circuit.num_gates();
  const DmmParams& p = circuit.params();
  out.dv.assign(n, 0.0);
  out.dxs.resize(m);
  out.dxl.resize(m);

  FlowStats stats;
  const double* v = state.v.data();
  double* dv = out.dv.data();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < m; ++g) {
    const auto vars = circuit.gate_vars(g);
    const auto q = circuit.gate_polarity(g);
    const std::size_t k = vars.size();
    const double xs = state.xs[g];
    const double xl = state.xl[g];
    const double w = circuit.current_scale(g);
    const double gradient = w * xl * xs;
    const double rigidity = w * (1.0 + p.zeta * xl) * (1.0 - xs);
    if (!std::isfinite(gradient) || !std::isfinite(rigidity))
      throw FlowError(g, "non-finite correction current");

    if (k == 3) {
      const std::uint32_t i0 = vars[0], i1 = vars[1], i2 = vars[2];
      const double a0 = 0.5 * (1.0 - q[0] * v[i0]);
      const double a1 = 0.5 * (1.0 - q[1] * v[i1]);
      const double a2 = 0.5 * (1.0 - q[2] * v[i2]);
      std::size_t arg = 0;
      double c = a0;
      if (a1 < c || (a1 == c && i1 < i0)) {
        arg = 1;
        c = a1;
      }
      if (a2 < c || (a2 == c && i2 < vars[arg])) {
        arg = 2;
        c = a2;
      }
      const double half = 0.5 * gradient;
      dv[i0] += half * q[0] * std::min(a1, a2);
      dv[i1] += half * q[1] * std::min(a0, a2);
      dv[i2] += half * q[2] * std::min(a0, a1);
      dv[vars[arg]] += rigidity * 0.5 * (q[arg] - v[vars[arg]]);
      stats.max_inconsistency = std::max(stats.max_inconsistency, c);
      stats.literal_visits += 3;
      out.dxs[g] = p.beta * (xs + p.epsilon) * (c - p.gamma);
      out.dxl[g] = p.alpha * (c - p.delta);
      continue;
    }

    // Smallest and second smallest (1 - q v)/2; ties on the smallest go to the
    // lowest variable index.
    double min1 = kInf;
    double min2 = kInf;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double a = 0.5 * (1.0 - q[j] * v[vars[j]]);
      if (a < min1 || (a == min1 && vars[j] < vars[arg])) {
        min2 = min1;
        min1 = a;
        arg = j;
      } else if (a < min2) {
        min2 = a;
      }
    }
    // A unit clause has no other literals; treat the missing ones as false.
    if (k == 1) min2 = 1.0;
    const double c = min1;
    stats.max_inconsistency = std::max(stats.max_inconsistency, c);
    stats.literal_visits += k;

    for (std::size_t j = 0; j < k; ++j) {
      const double others = j == arg ? min2 : min1;
      dv[vars[j]] += gradient * 0.5 * q[j] * others;
    }
    dv[vars[arg]] += rigidity * 0.5 * (q[arg] - v[vars[arg]]);

    out.dxs[g] = p.beta * (xs + p.epsilon) * (c - p.gamma);
    out.dxl[g] = p.alpha * (c - p.delta);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(dv[i])) {
      const auto gates = circuit.var_gates(i);
      throw FlowError(gates.empty() ? 0 : gates.front(),
                      "non-finite voltage derivative at variable " + std::to_string(i + 1));
    }
  }
  return stats;
}

DmmDerivative flow_field(const DmmState& state, const Circuit& circuit) {
  DmmDerivative d;
  flow_field(state, circuit, d);
  return d;
}

Assignment readout(std::span<const double> v) {
  Assignment a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = v[i] >= 0.0;
  return a;
}

DmmState init_state(const Circuit& circuit, std::uint64_t seed) {
  Rng rng(seed);
  DmmState s;
  s.v.resize(circuit.num_variables());
  for (auto& x : s.v) x = rng.uniform(-1.0, 1.0);
  s.xs.assign(circuit.num_gates(), std::clamp(circuit.params().epsilon, 0.0, 1.0));
  s.xl.assign(circuit.num_gates(), 1.0);
  s.t = 0.0;
  return s;
}

void clamp_state(DmmState& state, const Circuit& circuit) {
  for (auto& x : state.v) x = std::clamp(x, -1.0, 1.0);
  for (auto& x : state.xs) x = std::clamp(x, 0.0, 1.0);
  const double cap = circuit.xl_max();
  for (auto& x : state.xl) x = std::clamp(x, 1.0, cap);
}

bool state_in_bounds(const DmmState& state, const Circuit& circuit) {
  if (state.v.size() != circuit.num_variables() || state.xs.size() != circuit.num_gates() ||
      state.xl.size() != circuit.num_gates())
    return false;
  for (double x : state.v)
    if (!(x >= -1.0 && x <= 1.0)) return false;
  for (double x : state.xs)
    if (!(x >= 0.0 && x <= 1.0)) return false;
  const double cap = circuit.xl_max();
  for (double x : state.xl)
    if (!(x >= 1.0 && x <= cap)) return false;
  return std::isfinite(state.t);
}

void write_state_csv(std::ostream& out, const DmmState& state) {
  out.precision(17);
  out << "block,index,value\n";
  for (std::size_t i = 0; i < state.v.size(); ++i) out << "v," << i << ',' << state.v[i] << '\n';
  for (std::size_t i = 0; i < state.xs.size(); ++i) out << "xs," << i << ',' << state.xs[i] << '\n';
  for (std::size_t i = 0; i < state.xl.size(); ++i) out << "xl," << i << ',' << state.xl[i] << '\n';
  out << "t,0," << state.t << '\n';
}

namespace {

void put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated state snapshot");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}

}  // namespace

void write_state_binary(std::ostream& out, const DmmState& state) {
  put_u64(out, state.v.size());
  put_u64(out, state.xs.size());
  for (double x : state.v) put_u64(out, std::bit_cast<std::uint64_t>(x));
  for (double x : state.xs) put_u64(out, std::bit_cast<std::uint64_t>(x));
  for (double x : state.xl) put_u64(out, std::bit_cast<std::uint64_t>(x));
  put_u64(out, std::bit_cast<std::uint64_t>(state.t));
}

DmmState read_state_binary(std::istream& in) {
  DmmState s;
  const std::uint64_t n = get_u64(in);
  const std::uint64_t m = get_u64(in);
  s.v.resize(n);
  s.xs.resize(m);
  s.xl.resize(m);
  for (auto& x : s.v) x = std::bit_cast<double>(get_u64(in));
  for (auto& x : s.xs) x = std::bit_cast<double>(get_u64(in));
  for (auto& x : s.xl) x = std::bit_cast<double>(get_u64(in));
  s.t = std::bit_cast<double>(get_u64(in));
  return s;
}

}  // namespace memsat

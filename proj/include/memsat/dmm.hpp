#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsat/config.hpp"
#include "memsat/formula.hpp"

namespace memsat {

/// Memory-dynamics constants of the self-organizing circuit.
struct DmmParams {
  double alpha = 1.0;     // long-term memory growth rate
  double beta = 160.0;    // short-term memory rate
  double gamma = 0.3;     // short-term satisfaction threshold
  double delta = 0.05;    // long-term satisfaction threshold
  double epsilon = 0.01;  // keeps xs from sticking at 0
  double zeta = 0.03;     // rigidity coupling to long-term memory
  double xl_max = 10.0;   // long-term memory cap; 0 means 1e4 * M

  void validate() const;
  KeyValues to_kv() const;
  static DmmParams from_kv(const KeyValues& kv);
};

/// Phase-space point: terminal voltages, then per-clause short- and long-term
/// memory, then machine time.
struct DmmState {
  std::vector<double> v;
  std::vector<double> xs;
  std::vector<double> xl;
  double t = 0.0;
};

struct DmmDerivative {
  std::vector<double> dv;
  std::vector<double> dxs;
  std::vector<double> dxl;
};

/// Per-evaluation summary produced alongside the derivative.
struct FlowStats {
  double max_inconsistency = 0.0;  // max over clauses of C_m
  std::uint64_t literal_visits = 0;
};

class FlowError : public std::runtime_error {
 public:
  FlowError(std::size_t clause, const std::string& what)
      : std::runtime_error("clause " + std::to_string(clause) + ": " + what), clause_(clause) {}
  std::size_t clause() const { return clause_; }

 private:
  std::size_t clause_;
};

/// Self-organizing logic circuit for a CNF formula: one OR gate per clause,
/// one voltage node per variable, shared between the gates that use it.
///
/// Gate m drives its terminals with a current scaled by w_m. Soft gates use
/// the clause weight; a hard gate uses 1 + the sum of w over every soft gate
/// sharing a variable with it, so its correction always outweighs them.
class Circuit {
 public:
  Circuit(std::shared_ptr<const CnfFormula> formula, const DmmParams& params);

  const CnfFormula& formula() const { return *formula_; }
  const std::shared_ptr<const CnfFormula>& formula_ptr() const { return formula_; }
  const DmmParams& params() const { return params_; }
  double xl_max() const { return xl_max_; }

  std::size_t num_variables() const { return num_vars_; }
  std::size_t num_gates() const { return offsets_.size() - 1; }
  std::size_t num_terminals() const { return vars_.size(); }

  std::span<const std::uint32_t> gate_vars(std::size_t m) const {
    return {vars_.data() + offsets_[m], offsets_[m + 1] - offsets_[m]};
  }
  std::span<const double> gate_polarity(std::size_t m) const {
    return {polarity_.data() + offsets_[m], offsets_[m + 1] - offsets_[m]};
  }
  /// Gates attached to a voltage node, ascending.
  std::span<const std::uint32_t> var_gates(std::size_t i) const {
    return {var_gates_.data() + var_offsets_[i], var_offsets_[i + 1] - var_offsets_[i]};
  }
  double current_scale(std::size_t m) const { return scale_[m]; }
  bool is_hard(std::size_t m) const { return hard_[m] != 0; }

  /// Checks the hard-gate dominance inequality; returns the first violating
  /// gate index, or -1.
  long long check_current_scales() const;

  /// Bytes held by the circuit arrays plus one state and one derivative.
  std::size_t memory_estimate() const;

 private:
  std::shared_ptr<const CnfFormula> formula_;
  DmmParams params_;
  double xl_max_;
  std::size_t num_vars_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> vars_;
  std::vector<double> polarity_;
  std::vector<double> scale_;
  std::vector<std::uint8_t> hard_;
  std::vector<std::size_t> var_offsets_;
  std::vector<std::uint32_t> var_gates_;
};

Circuit build_circuit(const CnfFormula& formula, const DmmParams& params = {});
Circuit build_circuit(std::shared_ptr<const CnfFormula> formula, const DmmParams& params = {});

/// Gate inconsistency C_m = min over literals of (1 - q v) / 2, in [0, 1].
double clause_satisfaction(const Circuit& circuit, std::size_t m, std::span<const double> v);

/// Evaluates the flow field into `out` (resized as needed). Throws FlowError
/// naming the gate when a non-finite derivative appears.
FlowStats flow_field(const DmmState& state, const Circuit& circuit, DmmDerivative& out);
DmmDerivative flow_field(const DmmState& state, const Circuit& circuit);

/// v_i > 0 reads as true; v_i == 0 also reads as true.
Assignment readout(std::span<const double> v);
inline Assignment readout(const DmmState& state) { return readout(state.v); }

/// v uniform in [-1, 1], xs = epsilon, xl = 1, t = 0.
DmmState init_state(const Circuit& circuit, std::uint64_t seed);

/// Clamps every component into its box.
void clamp_state(DmmState& state, const Circuit& circuit);
/// True iff all components are finite and inside their boxes.
bool state_in_bounds(const DmmState& state, const Circuit& circuit);

/// CSV snapshot: header "block,index,value"; rows for v, xs, xl, then t.
void write_state_csv(std::ostream& out, const DmmState& state);
/// Flat little-endian binary: u64 n, u64 m, then n+2m+1 doubles (v, xs, xl, t).
void write_state_binary(std::ostream& out, const DmmState& state);
DmmState read_state_binary(std::istream& in);

}  // namespace memsat

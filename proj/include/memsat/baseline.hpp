#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "memsat/formula.hpp"
#include "memsat/integrator.hpp"
#include "memsat/rng.hpp"

namespace memsat {

struct LsConfig {
  double noise = 0.5;
  std::uint64_t max_flips = 10'000'000;
  double max_wall_s = std::numeric_limits<double>::infinity();
  bool cc_enabled = false;
  std::uint64_t seed = 0;
  double threshold = 0.0;  // stop once the best unsat fraction is <= threshold
  std::uint64_t restart_interval = 0;  // 0 disables restarts

  void validate() const;
};

/// Sum of effective weights of the clauses that `var` alone satisfies under
/// `a`, i.e. that become unsatisfied if it flips.
std::uint64_t weighted_break(const CnfFormula& formula, const Assignment& a, std::uint32_t var);

/// WalkSAT/SKC state with occurrence lists, per-clause true-literal counters
/// and an indexed set of unsatisfied clauses. Optionally applies
/// configuration checking to the candidate variables.
class LocalSearch {
 public:
  LocalSearch(std::shared_ptr<const CnfFormula> formula, const LsConfig& cfg);

  /// Draws a fresh uniform assignment and rebuilds all bookkeeping.
  void randomize();
  void set_assignment(const Assignment& a);

  /// Picks an unsatisfied clause and flips one of its variables. Returns the
  /// flipped variable; must not be called when everything is satisfied.
  std::uint32_t step();
  void flip(std::uint32_t var);

  std::uint64_t break_weight(std::uint32_t var) const;
  bool eligible(std::uint32_t var) const { return !cfg_.cc_enabled || conf_changed_[var]; }

  const std::vector<std::uint32_t>& unsat_clauses() const { return unsat_; }
  UnsatCount current() const { return {unsat_.size(), unsat_weight_}; }
  Assignment assignment() const { return Assignment(value_.begin(), value_.end()); }
  const CnfFormula& formula() const { return *formula_; }

 private:
  struct Occurrence {
    std::uint32_t clause;
    bool negated;
  };
  bool literal_true(const Occurrence& o, std::uint32_t var) const {
    return (value_[var] != 0) != o.negated;
  }
  void rebuild();
  void add_unsat(std::uint32_t c);
  void remove_unsat(std::uint32_t c);

  std::shared_ptr<const CnfFormula> formula_;
  LsConfig cfg_;
  Rng rng_;
  std::vector<std::vector<Occurrence>> occ_;
  std::vector<std::uint8_t> value_;
  std::vector<std::uint32_t> true_count_;
  std::vector<std::uint32_t> unsat_;
  std::vector<std::uint32_t> unsat_pos_;
  std::uint64_t unsat_weight_ = 0;
  std::vector<std::uint8_t> conf_changed_;
  std::vector<std::uint32_t> candidates_;
};

struct LsResult {
  Assignment best;
  UnsatCount best_unsat;
  SolverTrace trace;
  SolveStatus status = SolveStatus::timeout;
  std::uint64_t flips = 0;
  double wall_s = 0.0;
};

LsResult walksat(std::shared_ptr<const CnfFormula> formula, const LsConfig& cfg);
LsResult walksat(const CnfFormula& formula, const LsConfig& cfg);
/// walksat with configuration checking forced on.
LsResult walksat_cc(std::shared_ptr<const CnfFormula> formula, LsConfig cfg);
LsResult walksat_cc(const CnfFormula& formula, LsConfig cfg);

}  // namespace memsat

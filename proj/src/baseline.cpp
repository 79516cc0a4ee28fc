#include "memsat/baseline.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace memsat {

void LsConfig::validate() const {
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("noise must lie in [0, 1]");
  if (max_flips == 0 || !(max_wall_s > 0.0)) throw std::invalid_argument("budgets must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1]");
}

std::uint64_t weighted_break(const CnfFormula& formula, const Assignment& a, std::uint32_t var) {
  if (a.size() != formula.num_variables()) throw std::invalid_argument("assignment length mismatch");
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < formula.num_clauses(); ++c) {
    const Clause& cl = formula.clause(c);
    bool var_true = false;
    std::size_t true_lits = 0;
    for (const Literal& lit : cl.literals) {
      if (lit.satisfied_by(a[lit.var])) {
        ++true_lits;
        if (lit.var == var) var_true = true;
      }
    }
    if (var_true && true_lits == 1) total += formula.effective_weight(c);
  }
  return total;
}

LocalSearch::LocalSearch(std::shared_ptr<const CnfFormula> formula, const LsConfig& cfg)
    : formula_(std::move(formula)), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  const CnfFormula& f = *formula_;
  occ_.resize(f.num_variables());
  for (std::size_t c = 0; c < f.num_clauses(); ++c)
    for (const Literal& lit : f.clause(c).literals)
      occ_[lit.var].push_back({static_cast<std::uint32_t>(c), lit.negated});
  value_.assign(f.num_variables(), 0);
  true_count_.assign(f.num_clauses(), 0);
  unsat_pos_.assign(f.num_clauses(), 0);
  conf_changed_.assign(f.num_variables(), 1);
  randomize();
}

void LocalSearch::randomize() {
  for (auto& x : value_) x = rng_.coin() ? 1 : 0;
  rebuild();
}

void LocalSearch::set_assignment(const Assignment& a) {
  if (a.size() != value_.size()) throw std::invalid_argument("assignment length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) value_[i] = a[i] ? 1 : 0;
  rebuild();
}

void LocalSearch::rebuild() {
  const CnfFormula& f = *formula_;
  unsat_.clear();
  unsat_weight_ = 0;
  for (std::size_t c = 0; c < f.num_clauses(); ++c) {
    std::uint32_t t = 0;
    for (const Literal& lit : f.clause(c).literals) t += lit.satisfied_by(value_[lit.var] != 0);
    true_count_[c] = t;
    if (t == 0) add_unsat(static_cast<std::uint32_t>(c));
  }
  std::fill(conf_changed_.begin(), conf_changed_.end(), 1);
}

void LocalSearch::add_unsat(std::uint32_t c) {
  unsat_pos_[c] = static_cast<std::uint32_t>(unsat_.size());
  unsat_.push_back(c);
  unsat_weight_ += formula_->effective_weight(c);
}

void LocalSearch::remove_unsat(std::uint32_t c) {
  const std::uint32_t last = unsat_.back();
  unsat_[unsat_pos_[c]] = last;
  unsat_pos_[last] = unsat_pos_[c];
  unsat_.pop_back();
  unsat_weight_ -= formula_->effective_weight(c);
}

std::uint64_t LocalSearch::break_weight(std::uint32_t var) const {
  std::uint64_t total = 0;
  for (const Occurrence& o : occ_[var])
    if (literal_true(o, var) && true_count_[o.clause] == 1) total += formula_->effective_weight(o.clause);
  return total;
}

void LocalSearch::flip(std::uint32_t var) {
  value_[var] ^= 1;
  for (const Occurrence& o : occ_[var]) {
    if (literal_true(o, var)) {
      if (true_count_[o.clause]++ == 0) remove_unsat(o.clause);
    } else if (--true_count_[o.clause] == 0) {
      add_unsat(o.clause);
    }
  }
  if (cfg_.cc_enabled) {
    for (const Occurrence& o : occ_[var])
      for (const Literal& lit : formula_->clause(o.clause).literals) conf_changed_[lit.var] = 1;
    conf_changed_[var] = 0;
  }
}

std::uint32_t LocalSearch::step() {
  if (unsat_.empty()) throw std::logic_error("step() called on a satisfied assignment");
  const Clause& cl = formula_->clause(unsat_[rng_.below(unsat_.size())]);
  candidates_.clear();
  for (const Literal& lit : cl.literals)
    if (eligible(lit.var)) candidates_.push_back(lit.var);
  if (candidates_.empty())
    for (const Literal& lit : cl.literals) candidates_.push_back(lit.var);

  std::uint32_t pick;
  if (rng_.bernoulli(cfg_.noise)) {
    pick = candidates_[rng_.below(candidates_.size())];
  } else {
    // Minimum break; ties resolved uniformly by reservoir sampling.
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t ties = 0;
    pick = candidates_.front();
    for (std::uint32_t v : candidates_) {
      const std::uint64_t b = break_weight(v);
      if (b < best) {
        best = b;
        ties = 1;
        pick = v;
      } else if (b == best && rng_.below(++ties) == 0) {
        pick = v;
      }
    }
  }
  flip(pick);
  return pick;
}

LsResult walksat(std::shared_ptr<const CnfFormula> formula, const LsConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  LocalSearch ls(formula, cfg);
  const CnfFormula& f = ls.formula();
  LsResult res;
  res.trace.num_clauses = f.num_clauses();
  res.trace.total_weight = f.total_weight();
  res.trace.weighted = f.is_weighted();
  res.best = ls.assignment();
  res.best_unsat = ls.current();

  auto sample = [&](std::uint64_t flips) {
    if (!res.trace.samples.empty() && res.trace.samples.back().steps == flips) {
      res.trace.samples.back().best_unsat_count = res.best_unsat.count;
      res.trace.samples.back().best_unsat_weight = res.best_unsat.weight;
      return;
    }
    res.trace.samples.push_back({static_cast<double>(flips), flips, elapsed(), res.best_unsat.count,
                                 res.best_unsat.weight});
  };
  auto met = [&] {
    TraceSample s;
    s.best_unsat_count = res.best_unsat.count;
    s.best_unsat_weight = res.best_unsat.weight;
    return res.trace.fraction(s) <= cfg.threshold || res.best_unsat.count == 0;
  };

  sample(0);
  std::uint64_t flips = 0;
  double next_sample = 1.0;
  res.status = SolveStatus::timeout;
  if (met()) {
    res.status = SolveStatus::threshold_met;
  } else {
    while (flips < cfg.max_flips) {
      if ((flips & 1023) == 0 && elapsed() >= cfg.max_wall_s) break;
      if (cfg.restart_interval && flips && flips % cfg.restart_interval == 0) ls.randomize();
      ls.step();
      ++flips;
      bool record = false;
      const UnsatCount now = ls.current();
      if (now.weight < res.best_unsat.weight ||
          (now.weight == res.best_unsat.weight && now.count < res.best_unsat.count)) {
        res.best_unsat = now;
        res.best = ls.assignment();
        record = true;
      }
      if (static_cast<double>(flips) >= next_sample) {
        while (next_sample <= static_cast<double>(flips))
          next_sample = std::max(next_sample + 1.0, std::ceil(next_sample * 1.2));
        record = true;
      }
      if (record) sample(flips);
      if (met()) {
        res.status = SolveStatus::threshold_met;
        break;
      }
    }
  }
  sample(flips);
  res.flips = flips;
  res.wall_s = elapsed();
  res.trace.best_assignment = res.best;
  return res;
}

LsResult walksat(const CnfFormula& formula, const LsConfig& cfg) {
  return walksat(std::make_shared<const CnfFormula>(formula), cfg);
}

LsResult walksat_cc(std::shared_ptr<const CnfFormula> formula, LsConfig cfg) {
  cfg.cc_enabled = true;
  return walksat(std::move(formula), cfg);
}

LsResult walksat_cc(const CnfFormula& formula, LsConfig cfg) {
  cfg.cc_enabled = true;
  return walksat(std::make_shared<const CnfFormula>(formula), cfg);
}

}  // namespace memsat

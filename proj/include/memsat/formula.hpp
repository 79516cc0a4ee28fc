#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace memsat {

/// Truth values indexed by 0-based variable.
using Assignment = std::vector<bool>;

/// A literal over a 0-based variable. DIMACS 1-based numbering only exists at
/// the I/O boundary (see `dimacs()` / `from_dimacs()`).
struct Literal {
  std::uint32_t var = 0;
  bool negated = false;

  static Literal from_dimacs(int lit) {
    return Literal{static_cast<std::uint32_t>(lit < 0 ? -lit : lit) - 1, lit < 0};
  }
  int dimacs() const { return negated ? -static_cast<int>(var + 1) : static_cast<int>(var + 1); }
  /// +1 for a positive literal, -1 for a negated one.
  int polarity() const { return negated ? -1 : 1; }
  bool satisfied_by(bool value) const { return value != negated; }

  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Clause {
  std::vector<Literal> literals;
  std::uint64_t weight = 1;
  bool hard = false;

  std::size_t size() const { return literals.size(); }

  // Hard clauses compare equal regardless of the stored weight: the top value
  // is a property of the file, not of the clause.
  friend bool operator==(const Clause& a, const Clause& b) {
    return a.literals == b.literals && a.hard == b.hard && (a.hard || a.weight == b.weight);
  }
};

class FormulaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Immutable CNF formula with optional per-clause weights and hard flags.
/// Construction validates every invariant and throws FormulaError otherwise.
class CnfFormula {
 public:
  CnfFormula(std::uint32_t num_variables, std::vector<Clause> clauses);

  std::uint32_t num_variables() const { return num_variables_; }
  std::size_t num_clauses() const { return clauses_.size(); }
  std::size_t num_literals() const { return num_literals_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  const Clause& clause(std::size_t i) const { return clauses_[i]; }
  double density() const { return static_cast<double>(clauses_.size()) / num_variables_; }

  /// True iff some clause is hard or carries a weight other than 1.
  bool is_weighted() const { return weighted_; }
  bool has_hard() const { return has_hard_; }
  std::uint64_t total_soft_weight() const { return soft_weight_; }
  /// Weight charged for a violated hard clause: one more than all soft weight
  /// combined, so any hard violation outweighs every soft one.
  std::uint64_t hard_weight() const { return soft_weight_ + 1; }
  std::uint64_t effective_weight(std::size_t i) const {
    return clauses_[i].hard ? hard_weight() : clauses_[i].weight;
  }
  std::uint64_t total_weight() const;

  friend bool operator==(const CnfFormula& a, const CnfFormula& b) {
    return a.num_variables_ == b.num_variables_ && a.clauses_ == b.clauses_;
  }

 private:
  std::uint32_t num_variables_;
  std::vector<Clause> clauses_;
  std::size_t num_literals_ = 0;
  std::uint64_t soft_weight_ = 0;
  std::size_t num_hard_ = 0;
  bool weighted_ = false;
  bool has_hard_ = false;
};

/// Unsatisfied clause count and the total effective weight of those clauses.
struct UnsatCount {
  std::uint64_t count = 0;
  std::uint64_t weight = 0;
  friend bool operator==(const UnsatCount&, const UnsatCount&) = default;
};

/// Parses DIMACS CNF ("p cnf n m") or WCNF ("p wcnf n m top"). Clauses may
/// span lines; a line starting with '%' ends the input.
CnfFormula parse_dimacs(std::istream& in);
CnfFormula parse_dimacs(std::string_view text);
CnfFormula read_dimacs_file(const std::string& path);

/// Canonical DIMACS text. WCNF is emitted iff the formula is weighted, with
/// top = soft weight + 1.
void write_dimacs(std::ostream& out, const CnfFormula& formula);
std::string write_dimacs(const CnfFormula& formula);
void write_dimacs_file(const std::string& path, const CnfFormula& formula);

bool clause_satisfied(const Clause& clause, const Assignment& a);
UnsatCount count_unsat(const CnfFormula& formula, const Assignment& a);

/// Sum of squared 0/1 differences, i.e. the Hamming distance.
std::size_t assignment_distance(const Assignment& x, const Assignment& y);

}  // namespace memsat

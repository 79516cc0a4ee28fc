#include "memsat/formula.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace memsat {

CnfFormula::CnfFormula(std::uint32_t num_variables, std::vector<Clause> clauses)
    : num_variables_(num_variables), clauses_(std::move(clauses)) {
  if (num_variables_ == 0) throw FormulaError("formula must have at least one variable");
  if (clauses_.empty()) throw FormulaError("formula must have at least one clause");
  std::vector<std::uint32_t> seen_in(num_variables_, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t c = 0; c < clauses_.size(); ++c) {
    const Clause& cl = clauses_[c];
    if (cl.literals.empty()) throw FormulaError("clause " + std::to_string(c) + " is empty");
    if (cl.weight == 0) throw FormulaError("clause " + std::to_string(c) + " has zero weight");
    for (const Literal& lit : cl.literals) {
      if (lit.var >= num_variables_)
        throw FormulaError("clause " + std::to_string(c) + " references variable " +
                           std::to_string(lit.var + 1) + " > " + std::to_string(num_variables_));
      if (seen_in[lit.var] == c)
        throw FormulaError("clause " + std::to_string(c) + " repeats variable " +
                           std::to_string(lit.var + 1));
      seen_in[lit.var] = static_cast<std::uint32_t>(c);
    }
    num_literals_ += cl.literals.size();
    if (cl.hard) {
      ++num_hard_;
      has_hard_ = true;
    } else {
      soft_weight_ += cl.weight;
    }
    if (cl.hard || cl.weight != 1) weighted_ = true;
  }
}

std::uint64_t CnfFormula::total_weight() const {
  return soft_weight_ + static_cast<std::uint64_t>(num_hard_) * hard_weight();
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-comment, non-blank line; false at EOF or at a '%' terminator.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == 'c') continue;
      if (line[first] == '%') return false;
      return true;
    }
    return false;
  }

  std::size_t line() const { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& value) {
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

CnfFormula parse_dimacs(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError(reader.line(), "missing problem line");

  const auto header = split_ws(line);
  const bool wcnf = header.size() >= 2 && header[0] == "p" && header[1] == "wcnf";
  const bool cnf = header.size() >= 2 && header[0] == "p" && header[1] == "cnf";
  if (!(cnf && header.size() == 4) && !(wcnf && header.size() == 5))
    throw ParseError(reader.line(), "malformed problem line '" + line + "'");

  std::uint32_t n = 0;
  std::size_t m = 0;
  std::uint64_t top = std::numeric_limits<std::uint64_t>::max();
  if (!parse_number(header[2], n) || !parse_number(header[3], m) ||
      (wcnf && !parse_number(header[4], top)))
    throw ParseError(reader.line(), "malformed problem line '" + line + "'");
  if (n == 0) throw ParseError(reader.line(), "variable count must be positive");
  if (m == 0) throw ParseError(reader.line(), "clause count must be positive");

  std::vector<Clause> clauses;
  clauses.reserve(m);
  Clause current;
  bool expect_weight = wcnf;
  std::vector<std::size_t> seen(n, 0);  // clause number (1-based) that last used each variable
  while (reader.next(line)) {
    for (auto tok : split_ws(line)) {
      if (expect_weight) {
        std::uint64_t w = 0;
        if (!parse_number(tok, w) || w == 0)
          throw ParseError(reader.line(), "invalid clause weight '" + std::string(tok) + "'");
        current.hard = w >= top;
        current.weight = current.hard ? top : w;
        expect_weight = false;
        continue;
      }
      long long lit = 0;
      if (!parse_number(tok, lit))
        throw ParseError(reader.line(), "invalid literal '" + std::string(tok) + "'");
      if (lit == 0) {
        if (current.literals.empty()) throw ParseError(reader.line(), "empty clause");
        if (clauses.size() == m)
          throw ParseError(reader.line(), "more clauses than the declared " + std::to_string(m));
        clauses.push_back(std::move(current));
        current = Clause{};
        expect_weight = wcnf;
        continue;
      }
      const long long var = lit < 0 ? -lit : lit;
      if (var > static_cast<long long>(n))
        throw ParseError(reader.line(), "variable " + std::to_string(var) + " out of range 1.." +
                                            std::to_string(n));
      if (seen[var - 1] == clauses.size() + 1)
        throw ParseError(reader.line(), "clause repeats variable " + std::to_string(var));
      seen[var - 1] = clauses.size() + 1;
      current.literals.push_back(Literal::from_dimacs(static_cast<int>(lit)));
    }
  }
  if (!current.literals.empty() || (wcnf && !expect_weight))
    throw ParseError(reader.line(), "last clause is not terminated by 0");
  if (clauses.size() != m)
    throw ParseError(reader.line(), "expected " + std::to_string(m) + " clauses, found " +
                                        std::to_string(clauses.size()));
  return CnfFormula(n, std::move(clauses));
}

CnfFormula parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

CnfFormula read_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_dimacs(in);
}

void write_dimacs(std::ostream& out, const CnfFormula& formula) {
  const bool wcnf = formula.is_weighted();
  const std::uint64_t top = formula.hard_weight();
  if (wcnf)
    out << "p wcnf " << formula.num_variables() << ' ' << formula.num_clauses() << ' ' << top
        << '\n';
  else
    out << "p cnf " << formula.num_variables() << ' ' << formula.num_clauses() << '\n';
  for (const Clause& c : formula.clauses()) {
    if (wcnf) out << (c.hard ? top : c.weight) << ' ';
    for (const Literal& lit : c.literals) out << lit.dimacs() << ' ';
    out << "0\n";
  }
}

std::string write_dimacs(const CnfFormula& formula) {
  std::ostringstream out;
  write_dimacs(out, formula);
  return out.str();
}

void write_dimacs_file(const std::string& path, const CnfFormula& formula) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dimacs(out, formula);
  if (!out) throw std::runtime_error("write failed for " + path);
}

bool clause_satisfied(const Clause& clause, const Assignment& a) {
  for (const Literal& lit : clause.literals)
    if (lit.satisfied_by(a[lit.var])) return true;
  return false;
}

UnsatCount count_unsat(const CnfFormula& formula, const Assignment& a) {
  if (a.size() != formula.num_variables())
    throw std::invalid_argument("assignment has " + std::to_string(a.size()) +
                                " values, formula has " +
                                std::to_string(formula.num_variables()) + " variables");
  UnsatCount result;
  for (std::size_t i = 0; i < formula.num_clauses(); ++i) {
    if (!clause_satisfied(formula.clause(i), a)) {
      ++result.count;
      result.weight += formula.effective_weight(i);
    }
  }
  return result;
}

std::size_t assignment_distance(const Assignment& x, const Assignment& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("assignments differ in length: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  std::size_t d = 0;
  for (std::size_t j = 0; j < x.size(); ++j) d += x[j] != y[j] ? 1 : 0;
  return d;
}

}  // namespace memsat

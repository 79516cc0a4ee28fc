#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memsat/formula.hpp"

namespace memsat {

enum class Family { random_e3sat, hyper_e3sat, delta_e3sat, xorsat };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Right-hand sides of generated XOR equations.
enum class XorRhs { random, ones };

/// x_i ^ x_j ^ x_k = rhs over 0-based variables.
struct XorEquation {
  std::array<std::uint32_t, 3> vars{};
  bool rhs = true;
  friend bool operator==(const XorEquation&, const XorEquation&) = default;
};

struct XorSystem {
  std::uint32_t num_variables = 0;
  std::vector<XorEquation> equations;

  double xor_density() const {
    return num_variables ? static_cast<double>(equations.size()) / num_variables : 0.0;
  }
  /// Throws FormulaError when an equation repeats a variable or is out of range.
  void validate() const;
  bool satisfied_by(const Assignment& a) const;
  std::size_t count_violated(const Assignment& a) const;

  friend bool operator==(const XorSystem&, const XorSystem&) = default;
};

/// Instance recipe. `density` is the CNF clause density for the three E3SAT
/// families and the XOR equation density for `xorsat`.
struct GenSpec {
  Family family = Family::random_e3sat;
  std::uint32_t n = 0;
  double density = 0.0;
  std::uint64_t seed = 0;
  XorRhs rhs = XorRhs::random;

  /// round(density * n): CNF clauses, or XOR equations for `xorsat`.
  std::size_t num_clauses() const;
  /// Number of XOR equations behind an XOR-derived family.
  std::size_t num_xor_equations() const;
  void validate() const;
  std::string descriptor() const;

  std::map<std::string, std::string> to_kv() const;
  static GenSpec from_kv(const std::map<std::string, std::string>& kv);
};

CnfFormula gen_random_e3sat(const GenSpec& spec);

/// Uniform random 3-XORSAT with round(density * n) equations.
XorSystem gen_xorsat(const GenSpec& spec);
XorSystem gen_xorsat(std::uint32_t n, std::size_t num_equations, std::uint64_t seed,
                     XorRhs rhs = XorRhs::random);

/// 3-XORSAT where every variable occurs floor(3m/n) or ceil(3m/n) times.
XorSystem gen_delta_xorsat(const GenSpec& spec);
XorSystem gen_delta_xorsat(std::uint32_t n, std::size_t num_equations, std::uint64_t seed,
                           XorRhs rhs = XorRhs::random);

/// Four 3-clauses per equation; exactly one of them is violated when the
/// equation is violated, none otherwise.
CnfFormula xor_to_cnf(const XorSystem& sys);

/// Builds the CNF instance for any family (xorsat is expanded with xor_to_cnf).
CnfFormula generate_cnf(const GenSpec& spec);
/// XOR system behind an XOR-derived family; nullopt for random_e3sat.
std::optional<XorSystem> generate_xor(const GenSpec& spec);

struct Gf2Result {
  bool sat = false;
  Assignment solution;  // set when sat; free variables are false
  std::vector<std::size_t> certificate;  // 0-based equation indices summing to 0 = 1
};

/// Gaussian elimination over GF(2) on bit-packed rows.
Gf2Result gf2_solve(const XorSystem& sys);

struct Optimum {
  std::uint64_t min_unsat_weight = 0;
  Assignment witness;
};

inline constexpr std::uint32_t kBruteForceMaxVars = 28;

/// Exhaustive scan over all 2^n assignments (Gray-code order).
Optimum brute_force_optimum(const CnfFormula& formula);

/// "p xor n m" followed by "i j k b" lines with 1-based variables.
void write_xor(std::ostream& out, const XorSystem& sys);
XorSystem parse_xor(std::istream& in);

}  // namespace memsat

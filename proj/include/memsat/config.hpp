#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace memsat {

using KeyValues = std::map<std::string, std::string>;

/// Reads `key = value` lines. '#' starts a comment, blank lines are skipped,
/// and `[section]` headers are accepted and ignored so TOML-ish files work.
/// Surrounding quotes on values are stripped.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

double kv_double(const KeyValues& kv, const std::string& key, double fallback);
std::uint64_t kv_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback);
bool kv_bool(const KeyValues& kv, const std::string& key, bool fallback);
std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback);
std::vector<std::string> kv_list(const KeyValues& kv, const std::string& key);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& s);
std::uint64_t parse_u64(const std::string& s);

}  // namespace memsat

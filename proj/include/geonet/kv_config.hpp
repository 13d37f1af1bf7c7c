#pragma once

#include <istream>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace geonet {

/// Flat "key = value" text, one pair per line; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

/// Numeric value of `key`; errors name the key.
inline std::size_t kv_size(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  try {
    const long long v = std::stoll(value, &used);
    if (used == value.size() && v >= 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
}

inline std::uint64_t kv_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  try {
    if (!value.empty() && value[0] != '-') {
      const unsigned long long v = std::stoull(value, &used);
      if (used == value.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "': expected an unsigned integer, got '" + value + "'");
}

inline double kv_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  try {
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
}

inline void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

}  // namespace geonet

#pragma once

// Flat "key = value" configuration text with dotted keys (grid.n_steps).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dualflow::harness {

class Config {
 public:
  /// Blank lines and lines starting with '#' are ignored. Throws ConfigError
  /// with the line number on malformed input or duplicate keys.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const { return values_.contains(key); }

  // Getters throw ConfigError naming the key when it is missing (and no
  // fallback is given) or does not parse.
  std::string get_string(const std::string& key,
                         std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key,
                        std::optional<std::uint64_t> fallback = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;

  /// Keys no getter has asked for, sorted.
  std::vector<std::string> unread_keys() const;

  /// Sorted "key = value" lines.
  std::string text() const;

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

/// 16 lowercase hex digits of 64-bit FNV-1a.
std::string fnv1a_hex(std::string_view data);

/// Formats with 17 significant digits.
std::string format_number(double v);

}  // namespace dualflow::harness

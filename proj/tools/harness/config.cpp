#include "harness/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dualflow/errors.hpp"

namespace dualflow::harness {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError(key + ": expected " + want + ", got '" + value + "'");
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key))
      throw ConfigError("line " + std::to_string(lineno) + ": invalid key '" + key + "'");
    if (c.values_.contains(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  values_[key] = std::move(value);
}

const std::string* Config::find(const std::string& key) const {
  read_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, std::optional<std::string> fallback) const {
  if (const auto* v = find(key)) return *v;
  if (fallback) return *fallback;
  throw ConfigError(key + ": missing");
}

double Config::get_double(const std::string& key, std::optional<double> fallback) const {
  const auto* v = find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key + ": missing");
  }
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || end != v->data() + v->size() || !std::isfinite(out))
    bad_value(key, *v, "a finite number");
  return out;
}

std::uint64_t Config::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  const auto* v = find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key + ": missing");
  }
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || end != v->data() + v->size() || v->empty())
    bad_value(key, *v, "a non-negative integer");
  return out;
}

bool Config::get_bool(const std::string& key, std::optional<bool> fallback) const {
  const auto* v = find(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key + ": missing");
  }
  if (*v == "true") return true;
  if (*v == "false") return false;
  bad_value(key, *v, "true or false");
}

std::vector<std::string> Config::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!read_.contains(k)) out.push_back(k);
  return out;
}

std::string Config::text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dualflow::harness

#include "vdb/cli/run_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "vdb/nn/types.hpp"

namespace vdb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return k.find("..") == std::string::npos;
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + text + "'");
}

}  // namespace

std::string format_config_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string version_string() { return std::string("vdb-lab ") + VDB_LAB_VERSION; }

RunConfig RunConfig::parse(std::istream& is) {
  RunConfig c;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  return parse(is);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("invalid config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string& RunConfig::slot(const std::string& key, const std::string& fallback) {
  used_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) it = values_.emplace(key, fallback).first;
  return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) { return slot(key, fallback); }

double RunConfig::get_double(const std::string& key, double fallback) {
  return parse_number(key, slot(key, format_config_number(fallback)));
}

int RunConfig::get_int(const std::string& key, int fallback) {
  const double v = parse_number(key, slot(key, std::to_string(fallback)));
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) {
  const std::string s = trim(slot(key, std::to_string(fallback)));
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size() && s.front() != '-') return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
}

bool RunConfig::get_bool(const std::string& key, bool fallback) {
  const std::string s = trim(slot(key, fallback ? "true" : "false"));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  std::string def;
  for (std::size_t i = 0; i < fallback.size(); ++i) def += (i ? "," : "") + format_config_number(fallback[i]);
  std::istringstream ss(slot(key, def));
  std::vector<double> out;
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ConfigError(key + ": expected at least one value");
  return out;
}

std::string RunConfig::require_string(const std::string& key) {
  if (!has(key)) throw ConfigError("missing required config field '" + key + "'");
  return get_string(key, "");
}

void RunConfig::require_all_used() const {
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) throw ConfigError("unknown config field '" + k + "'");
}

void RunConfig::write(std::ostream& os) const {
  os << "# " << version_string() << '\n';
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
}

void RunConfig::write(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write(os);
}

}  // namespace vdb

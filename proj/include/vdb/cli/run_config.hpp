#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace vdb {

/// Flat `key = value` configuration with dotted namespaces ("vail.ic").
///
/// Every getter records the key as used and, when the key is absent, stores
/// the default it returned, so the echoed file lists every value a run saw
/// and rerunning from it reproduces the run.
class RunConfig {
 public:
  RunConfig() = default;

  /// Lines of `key = value`; blank lines and lines starting with '#' are skipped.
  static RunConfig parse(std::istream& is);
  static RunConfig load(const std::filesystem::path& path);

  /// Throws ConfigError for malformed keys.
  void set(const std::string& key, const std::string& value);
  /// Parses "key=value".
  void set_assignment(const std::string& assignment);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  /// Comma-separated list of numbers; "inf" is accepted.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);
  /// Throws ConfigError naming the key when it is absent.
  std::string require_string(const std::string& key);

  /// Throws ConfigError naming the first key no getter asked for.
  void require_all_used() const;

  /// "# vdb-lab <version>" followed by sorted key = value lines.
  void write(std::ostream& os) const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string& slot(const std::string& key, const std::string& fallback);

  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

/// Round-trippable number formatting used in config files ("inf" for infinity).
std::string format_config_number(double v);

/// Code version string written into every run directory.
std::string version_string();

}  // namespace vdb

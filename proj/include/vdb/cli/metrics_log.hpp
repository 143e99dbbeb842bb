#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vdb {

/// Append-only table of (step, named scalars) with a header fixed at
/// construction. Steps must strictly increase.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  /// Throws std::invalid_argument on a width mismatch or a non-increasing step.
  void append(long step, const std::vector<double>& values);

  long step(std::size_t row) const { return steps_.at(row); }
  double at(std::size_t row, const std::string& column) const;
  std::vector<double> column(const std::string& name) const;
  double last(const std::string& name) const;

  /// Mean of the last `window` rows of a column (all rows if fewer).
  double trailing_mean(const std::string& name, std::size_t window) const;

  /// CSV with a leading "step" column; values printed with %.10g.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;

 private:
  std::size_t index_of(const std::string& name) const;

  std::vector<std::string> columns_;
  std::vector<long> steps_;
  std::vector<std::vector<double>> rows_;
};

/// Formats a double the way every numeric CSV in this project does.
std::string format_metric(double v);

}  // namespace vdb

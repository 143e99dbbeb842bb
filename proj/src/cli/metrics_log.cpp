#include "vdb/cli/metrics_log.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vdb {

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

MetricsLog::MetricsLog(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void MetricsLog::append(long step, const std::vector<double>& values) {
  if (values.size() != columns_.size())
    throw std::invalid_argument("metrics: expected " + std::to_string(columns_.size()) + " values, got " +
                                std::to_string(values.size()));
  if (!steps_.empty() && step <= steps_.back())
    throw std::invalid_argument("metrics: step " + std::to_string(step) + " does not follow " +
                                std::to_string(steps_.back()));
  steps_.push_back(step);
  rows_.push_back(values);
}

std::size_t MetricsLog::index_of(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw std::out_of_range("metrics: no column " + name);
  return static_cast<std::size_t>(it - columns_.begin());
}

double MetricsLog::at(std::size_t row, const std::string& column) const { return rows_.at(row)[index_of(column)]; }

std::vector<double> MetricsLog::column(const std::string& name) const {
  const std::size_t c = index_of(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[c]);
  return out;
}

double MetricsLog::last(const std::string& name) const {
  if (rows_.empty()) throw std::out_of_range("metrics: empty log");
  return rows_.back()[index_of(name)];
}

double MetricsLog::trailing_mean(const std::string& name, std::size_t window) const {
  if (rows_.empty()) throw std::out_of_range("metrics: empty log");
  const std::size_t c = index_of(name);
  const std::size_t n = std::min(window, rows_.size());
  double sum = 0.0;
  for (std::size_t i = rows_.size() - n; i < rows_.size(); ++i) sum += rows_[i][c];
  return sum / static_cast<double>(n);
}

void MetricsLog::write_csv(std::ostream& os) const {
  os << "step";
  for (const auto& c : columns_) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    os << steps_[i];
    for (double v : rows_[i]) os << ',' << format_metric(v);
    os << '\n';
  }
}

void MetricsLog::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("metrics: cannot write " + path);
  write_csv(os);
}

}  // namespace vdb

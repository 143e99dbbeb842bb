#include "vdb/bounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "vdb/core/kl.hpp"

namespace vdb {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_args(double ic, int k) {
  if (!(ic > 0.0) || !std::isfinite(ic)) throw DomainError("bounds: I_c must be positive and finite");
  if (k < 1) throw DomainError("bounds: K must be at least 1");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SigmaBounds sigma_bounds(double ic, int k) {
  check_args(ic, k);
  return {std::exp(-2.0 * ic / k - 1.0), 4.0 * ic / k + 2.0};
}

double log_coefficient_floor(double ic, int k) {
  check_args(ic, k);
  const double half_k = 0.5 * k;
  return -4.0 * ic * std::exp(2.0 * ic / k + 1.0) - half_k * std::log(4.0 * ic / k + 2.0) - half_k * std::log(kTwoPi);
}

double coefficient_floor(double ic, int k) { return std::exp(log_coefficient_floor(ic, k)); }

double coefficient_floor_limit(int k) {
  if (k < 1) throw DomainError("bounds: K must be at least 1");
  return std::pow(2.0 * kTwoPi, -0.5 * k);
}

std::vector<double> make_grid(double lo, double hi, int n, GridSpacing spacing) {
  if (n < 1) throw ConfigError("grid: point count must be at least 1");
  if (!(hi >= lo)) throw ConfigError("grid: hi must not be below lo");
  if (spacing == GridSpacing::log && !(lo > 0.0)) throw ConfigError("grid: log spacing needs lo > 0");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[static_cast<std::size_t>(i)] = spacing == GridSpacing::linear
                                           ? lo + t * (hi - lo)
                                           : std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  out.back() = hi;
  return out;
}

BoundReport bound_report(const std::vector<double>& ic_grid, int k) {
  BoundReport r;
  r.k = k;
  r.ic = ic_grid;
  for (double ic : ic_grid) {
    const SigmaBounds b = sigma_bounds(ic, k);
    r.lower.push_back(b.lower);
    r.upper.push_back(b.upper);
    r.log_floor.push_back(log_coefficient_floor(ic, k));
    r.floor.push_back(std::exp(r.log_floor.back()));
    r.lower_below_upper = r.lower_below_upper && b.lower < b.upper;
    // C = exp(finite) > 0; judged in log space so underflow is not mistaken for zero.
    r.floor_positive = r.floor_positive && std::isfinite(r.log_floor.back());
  }
  for (std::size_t i = 1; i < ic_grid.size(); ++i) {
    if (!(ic_grid[i] > ic_grid[i - 1])) continue;
    r.lower_decreasing = r.lower_decreasing && r.lower[i] < r.lower[i - 1];
    r.upper_increasing = r.upper_increasing && r.upper[i] > r.upper[i - 1];
    r.floor_decreasing = r.floor_decreasing && r.log_floor[i] < r.log_floor[i - 1];
  }
  if (!ic_grid.empty()) {
    const auto smallest = std::min_element(ic_grid.begin(), ic_grid.end()) - ic_grid.begin();
    r.floor_at_smallest_ic = r.floor[static_cast<std::size_t>(smallest)];
  }
  r.floor_limit = coefficient_floor_limit(k);
  return r;
}

void write_bound_csv(const BoundReport& report, std::ostream& os) {
  os << "ic,lower,upper,floor,log_floor\n";
  for (std::size_t i = 0; i < report.ic.size(); ++i)
    os << fmt(report.ic[i]) << ',' << fmt(report.lower[i]) << ',' << fmt(report.upper[i]) << ','
       << fmt(report.floor[i]) << ',' << fmt(report.log_floor[i]) << '\n';
}

void write_bound_summary(const BoundReport& report, std::ostream& os) {
  auto flag = [](bool b) { return b ? "true" : "false"; };
  os << "k," << report.k << '\n'
     << "points," << report.ic.size() << '\n'
     << "lower_below_upper," << flag(report.lower_below_upper) << '\n'
     << "floor_positive," << flag(report.floor_positive) << '\n'
     << "lower_decreasing," << flag(report.lower_decreasing) << '\n'
     << "upper_increasing," << flag(report.upper_increasing) << '\n'
     << "floor_decreasing," << flag(report.floor_decreasing) << '\n'
     << "floor_at_smallest_ic," << fmt(report.floor_at_smallest_ic) << '\n'
     << "floor_limit," << fmt(report.floor_limit) << '\n';
}

FloorCheckResult empirical_floor_check(const Encoder& encoder, const Matrix& generated, const Matrix& real,
                                       double ic) {
  if (encoder.spec().variance != VarianceMode::shared)
    throw ConfigError("floor check: encoder.variance must be shared");
  require_shape(generated.rows() == real.rows(), "floor check: generated and real batches differ in size");
  const int k = encoder.latent_dim();
  FloorCheckResult r;
  r.ic = ic;
  r.log_floor = log_coefficient_floor(ic, k);
  r.pairs = static_cast<std::size_t>(real.rows());

  const EncoderOutput g = encoder.evaluate<double>(generated);
  const EncoderOutput x = encoder.evaluate<double>(real);
  const Vector kl_g = kl_per_row<double>(g.mean, g.log_var);
  const Vector kl_x = kl_per_row<double>(x.mean, x.log_var);
  for (Eigen::Index i = 0; i < kl_g.size(); ++i) r.pointwise_kl.push_back(kl_g(i));
  for (Eigen::Index i = 0; i < kl_x.size(); ++i) r.pointwise_kl.push_back(kl_x(i));
  r.max_pointwise_kl = r.pointwise_kl.empty() ? 0.0 : *std::max_element(r.pointwise_kl.begin(), r.pointwise_kl.end());

  r.min_log_coefficient = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < real.rows(); ++i) {
    // log N(μ_E(g); μ_E(x), σ² I) with σ² shared across dimensions.
    const double log_var = x.log_var(i, 0);
    const double sq = (g.mean.row(i) - x.mean.row(i)).squaredNorm();
    const double log_c = -0.5 * sq / std::exp(log_var) - 0.5 * k * (std::log(kTwoPi) + log_var);
    r.log_coefficients.push_back(log_c);
    r.min_log_coefficient = std::min(r.min_log_coefficient, log_c);
    const bool violated = !(log_c > r.log_floor);
    r.violations += violated ? 1 : 0;
    if (kl_g(i) <= ic && kl_x(i) <= ic) {
      ++r.conditional_pairs;
      r.conditional_violations += violated ? 1 : 0;
    }
  }
  r.violation_fraction = r.pairs ? static_cast<double>(r.violations) / static_cast<double>(r.pairs) : 0.0;
  return r;
}

void write_histogram_csv(const std::vector<double>& values, int bins, std::ostream& os) {
  os << "bin_lo,bin_hi,count\n";
  if (values.empty() || bins < 1) return;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx > *mn ? *mx : *mn + 1.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    counts[std::min(b, counts.size() - 1)]++;
  }
  for (int b = 0; b < bins; ++b)
    os << fmt(lo + (hi - lo) * b / bins) << ',' << fmt(lo + (hi - lo) * (b + 1) / bins) << ','
       << counts[static_cast<std::size_t>(b)] << '\n';
}

}  // namespace vdb

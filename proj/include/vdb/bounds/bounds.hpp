#pragma once

#include <iosfwd>
#include <vector>

#include "vdb/core/encoder.hpp"

namespace vdb {

/// Interval [lower, upper) that σ² of a shared-variance encoder must lie in
/// when its per-sample KL to N(0, I) is at most I_c.
struct SigmaBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// ℓ = exp(−2 I_c / K − 1), 𝒰 = 4 I_c / K + 2.
SigmaBounds sigma_bounds(double ic, int k);

/// Floor on the encoder density of one mean code under another sample's
/// encoder distribution:
/// C = exp(−4 I_c e^{2 I_c / K + 1} − (K/2) log(4 I_c / K + 2) − (K/2) log 2π).
double coefficient_floor(double ic, int k);
double log_coefficient_floor(double ic, int k);

/// C(I_c) as I_c → 0⁺, i.e. (4π)^{−K/2}.
double coefficient_floor_limit(int k);

enum class GridSpacing { linear, log };

/// `n` points from `lo` to `hi` inclusive. Log spacing requires lo > 0.
std::vector<double> make_grid(double lo, double hi, int n, GridSpacing spacing);

struct BoundReport {
  int k = 0;
  std::vector<double> ic;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> floor;
  std::vector<double> log_floor;  ///< C underflows double for large I_c; log C does not
  bool lower_below_upper = true;
  bool floor_positive = true;
  bool lower_decreasing = true;
  bool upper_increasing = true;
  bool floor_decreasing = true;
  double floor_at_smallest_ic = 0.0;  ///< numerical estimate of the I_c → 0 limit
  double floor_limit = 0.0;           ///< analytic limit (4π)^{−K/2}
};

BoundReport bound_report(const std::vector<double>& ic_grid, int k);

/// One row per grid point: ic,lower,upper,floor,log_floor.
void write_bound_csv(const BoundReport& report, std::ostream& os);
/// key,value lines with the monotonicity verdicts and limits.
void write_bound_summary(const BoundReport& report, std::ostream& os);

/// Result of evaluating E(μ_E(g) | x) for generated/real pairs.
struct FloorCheckResult {
  double ic = 0.0;
  double log_floor = 0.0;
  std::size_t pairs = 0;
  std::size_t violations = 0;              ///< coefficient ≤ C over all pairs
  double violation_fraction = 0.0;
  double min_log_coefficient = 0.0;
  double max_pointwise_kl = 0.0;           ///< over both generated and real samples
  std::size_t conditional_pairs = 0;       ///< pairs whose two samples both have KL ≤ I_c
  std::size_t conditional_violations = 0;  ///< violations among those pairs
  std::vector<double> pointwise_kl;        ///< per sample, generated then real
  std::vector<double> log_coefficients;    ///< per pair
};

/// Pairs row i of `generated` with row i of `real`. The encoder must use a
/// shared variance; anything else throws ConfigError. Violations outside the
/// conditional subset are diagnostics, since training only bounds the average.
FloorCheckResult empirical_floor_check(const Encoder& encoder, const Matrix& generated, const Matrix& real,
                                       double ic);

/// Equal-width histogram CSV (bin_lo,bin_hi,count).
void write_histogram_csv(const std::vector<double>& values, int bins, std::ostream& os);

}  // namespace vdb

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vdb/nn/rng.hpp"

namespace vdb {

enum class DistributionKind { gaussian, ring, two_gaussians };

DistributionKind parse_distribution(std::string_view name);
std::string to_string(DistributionKind kind);

/// Axis-aligned Gaussian mixture component.
struct MixtureComponent {
  Vec2 mean = Vec2::Zero();
  Vec2 stddev = Vec2::Ones();
  double weight = 1.0;
};

struct Distribution2D {
  DistributionKind kind = DistributionKind::gaussian;
  std::vector<MixtureComponent> components;

  /// Weights sum to 1 (within 1e-12) and every stddev is positive.
  void validate() const;

  static Distribution2D gaussian(const Vec2& mean, double stddev);
  /// `count` equal-weight components evenly spaced on a circle.
  static Distribution2D ring(int count = 8, double radius = 2.0, double stddev = 0.05);
  /// Equal mixture of N((−s, 0), σ²I) and N((s, 0), σ²I).
  static Distribution2D two_gaussians(double separation = 4.0, double stddev = 1.0);
};

/// n i.i.d. draws; the component of each draw is written to `labels` if given.
Matrix sample(const Distribution2D& dist, Eigen::Index n, Rng& rng, std::vector<int>* labels = nullptr);

/// Index of the component whose mean is closest to `p`.
int nearest_component(const Distribution2D& dist, const Vec2& p);

/// Components that own at least `min_fraction` of the samples, where a sample
/// belongs to its nearest component if it lies within `radius_in_sigma`
/// standard deviations of that component's mean.
int mode_coverage(const Distribution2D& dist, const Matrix& samples, double radius_in_sigma = 3.0,
                  double min_fraction = 0.02);

}  // namespace vdb

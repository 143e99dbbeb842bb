#include "vdb/synth/distribution.hpp"

#include <cmath>

namespace vdb {

DistributionKind parse_distribution(std::string_view name) {
  if (name == "gaussian") return DistributionKind::gaussian;
  if (name == "ring8" || name == "ring") return DistributionKind::ring;
  if (name == "two-gaussians" || name == "two_gaussians") return DistributionKind::two_gaussians;
  throw ConfigError("target: unknown distribution '" + std::string(name) + "'");
}

std::string to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::gaussian:
      return "gaussian";
    case DistributionKind::ring:
      return "ring8";
    case DistributionKind::two_gaussians:
      return "two-gaussians";
  }
  return "?";
}

void Distribution2D::validate() const {
  if (components.empty()) throw ConfigError("distribution: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.stddev.array() > 0.0).all()) throw ConfigError("distribution: stddev must be positive");
    if (!(c.weight >= 0.0)) throw ConfigError("distribution: negative weight");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("distribution: weights must sum to 1");
}

Distribution2D Distribution2D::gaussian(const Vec2& mean, double stddev) {
  Distribution2D d;
  d.kind = DistributionKind::gaussian;
  d.components.push_back({mean, Vec2::Constant(stddev), 1.0});
  d.validate();
  return d;
}

Distribution2D Distribution2D::ring(int count, double radius, double stddev) {
  if (count < 1) throw ConfigError("distribution: ring needs at least one component");
  Distribution2D d;
  d.kind = DistributionKind::ring;
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * M_PI * i / count;
    d.components.push_back({Vec2(radius * std::cos(a), radius * std::sin(a)), Vec2::Constant(stddev), 1.0 / count});
  }
  d.validate();
  return d;
}

Distribution2D Distribution2D::two_gaussians(double separation, double stddev) {
  Distribution2D d;
  d.kind = DistributionKind::two_gaussians;
  d.components.push_back({Vec2(-separation, 0.0), Vec2::Constant(stddev), 0.5});
  d.components.push_back({Vec2(separation, 0.0), Vec2::Constant(stddev), 0.5});
  d.validate();
  return d;
}

Matrix sample(const Distribution2D& dist, Eigen::Index n, Rng& rng, std::vector<int>* labels) {
  if (n < 1) throw ConfigError("sample: n must be at least 1");
  Matrix out(n, 2);
  if (labels) labels->assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    if (dist.components.size() > 1) {
      double u = rng.uniform();
      while (c + 1 < dist.components.size() && u >= dist.components[c].weight) u -= dist.components[c++].weight;
    }
    const auto& comp = dist.components[c];
    out(i, 0) = comp.mean(0) + comp.stddev(0) * rng.normal();
    out(i, 1) = comp.mean(1) + comp.stddev(1) * rng.normal();
    if (labels) (*labels)[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return out;
}

int nearest_component(const Distribution2D& dist, const Vec2& p) {
  int best = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < dist.components.size(); ++c) {
    const double d = (p - dist.components[c].mean).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

int mode_coverage(const Distribution2D& dist, const Matrix& samples, double radius_in_sigma, double min_fraction) {
  std::vector<std::size_t> owned(dist.components.size(), 0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Vec2 p = samples.row(i).transpose();
    const int c = nearest_component(dist, p);
    const auto& comp = dist.components[static_cast<std::size_t>(c)];
    if (((p - comp.mean).array() / comp.stddev.array()).matrix().norm() <= radius_in_sigma)
      owned[static_cast<std::size_t>(c)]++;
  }
  int covered = 0;
  for (std::size_t n : owned)
    if (static_cast<double>(n) >= min_fraction * static_cast<double>(samples.rows())) ++covered;
  return covered;
}

}  // namespace vdb

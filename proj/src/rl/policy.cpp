#include "vdb/rl/policy.hpp"

#include <cmath>

namespace vdb {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

GaussianPolicy::GaussianPolicy(const PolicySpec& spec, Rng& rng, const std::string& name) : spec_(spec) {
  if (spec.obs_dim < 1 || spec.action_dim < 1) throw ConfigError("policy: obs_dim and action_dim must be >= 1");
  MlpSpec m;
  m.input_dim = spec.obs_dim;
  m.hidden = spec.hidden;
  m.output_dim = spec.action_dim;
  m.output_activation = spec.mean_activation;
  mean_ = Mlp(m, rng, name + ".mean");
  log_std_.name = name + ".log_std";
  log_std_.value = Matrix::Constant(1, spec.action_dim, spec.initial_log_std);
  log_std_.grad = Matrix::Zero(1, spec.action_dim);
}

ParamList GaussianPolicy::parameters() {
  ParamList p = mean_.parameters();
  p.push_back(&log_std_);
  return p;
}

ConstParamList GaussianPolicy::parameters() const {
  ConstParamList p = mean_.parameters();
  p.push_back(&log_std_);
  return p;
}

Vec2 GaussianPolicy::act(const Vec2& obs, Rng& rng, bool deterministic) const {
  Matrix o(1, 2);
  o << obs.x(), obs.y();
  const Matrix mu = mean(o);
  Vec2 a(mu(0, 0), mu(0, 1));
  if (!deterministic)
    for (int d = 0; d < 2; ++d) a(d) += std::exp(log_std_.value(0, d)) * rng.normal();
  return a;
}

Vector GaussianPolicy::log_prob(const Matrix& obs, const Matrix& actions) const {
  return log_prob(obs, actions, Vector(), nullptr);
}

Vector GaussianPolicy::log_prob(const Matrix& obs, const Matrix& actions, const Vector& weights,
                                std::vector<Matrix>* grads) const {
  require_shape(actions.rows() == obs.rows() && actions.cols() == spec_.action_dim, "policy: action shape mismatch");
  MlpTrace<double> trace;
  const Matrix mu = mean_.evaluate<double>(obs, grads ? &trace : nullptr);
  const RowVector log_std = log_std_.value.row(0);
  const RowVector inv_var = (-2.0 * log_std.array()).exp();
  Vector lp(obs.rows());
  for (Eigen::Index i = 0; i < obs.rows(); ++i) {
    const RowVector diff = actions.row(i) - mu.row(i);
    lp(i) = -0.5 * diff.cwiseProduct(diff).cwiseProduct(inv_var).sum() - log_std.sum() -
            spec_.action_dim * kHalfLog2Pi;
  }
  if (grads) {
    require_shape(weights.size() == obs.rows(), "policy: weight count mismatch");
    Matrix d_mu(obs.rows(), spec_.action_dim);
    Matrix d_log_std = Matrix::Zero(1, spec_.action_dim);
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
      const RowVector diff = actions.row(i) - mu.row(i);
      d_mu.row(i) = weights(i) * diff.cwiseProduct(inv_var);
      d_log_std.row(0) += weights(i) * (diff.cwiseProduct(diff).cwiseProduct(inv_var).array() - 1.0).matrix();
    }
    mean_.adjoint<double>(trace, d_mu, grads);
    grads->push_back(d_log_std);
  }
  return lp;
}

double GaussianPolicy::entropy() const {
  return log_std_.value.sum() + spec_.action_dim * (kHalfLog2Pi + 0.5);
}

}  // namespace vdb

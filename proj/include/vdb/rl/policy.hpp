#pragma once

#include <string>
#include <vector>

#include "vdb/nn/mlp.hpp"

namespace vdb {

struct PolicySpec {
  int obs_dim = 2;
  int action_dim = 2;
  std::vector<LayerSpec> hidden{{32, Activation::relu}, {32, Activation::relu}};
  Activation mean_activation = Activation::tanh;
  double initial_log_std = -0.5;
};

/// π(a|s) = N(μ(s), diag(σ²)) with an MLP mean and learned state-independent
/// log σ. Actions are sampled unclamped; the environment clamps them.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(const PolicySpec& spec, Rng& rng, const std::string& name = "policy");

  const PolicySpec& spec() const { return spec_; }
  ParamList parameters();
  ConstParamList parameters() const;
  Mlp& mean_net() { return mean_; }
  const Mlp& mean_net() const { return mean_; }
  Tensor& log_std() { return log_std_; }
  const Tensor& log_std() const { return log_std_; }

  Matrix mean(const Matrix& obs) const { return mean_.evaluate<double>(obs); }
  Vec2 act(const Vec2& obs, Rng& rng, bool deterministic = false) const;

  /// Per-row log π(a|s).
  Vector log_prob(const Matrix& obs, const Matrix& actions) const;

  /// Per-row log π(a|s) and, when `grads` is non-null, Σᵢ wᵢ ∇_θ log π(aᵢ|sᵢ)
  /// appended in parameters() order.
  Vector log_prob(const Matrix& obs, const Matrix& actions, const Vector& weights, std::vector<Matrix>* grads) const;

  /// Differential entropy of π(·|s); independent of s.
  double entropy() const;

 private:
  PolicySpec spec_;
  Mlp mean_;
  Tensor log_std_;
};

}  // namespace vdb

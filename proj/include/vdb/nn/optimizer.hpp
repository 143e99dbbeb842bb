#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vdb/nn/tensor.hpp"

namespace vdb {

enum class OptimizerKind { sgd_momentum, rmsprop, adam };

OptimizerKind parse_optimizer(std::string_view name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double stepsize = 1e-3;
  double momentum = 0.9;  // sgd-momentum
  double decay = 0.99;    // rmsprop second-moment decay
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double epsilon = 1e-8;
  double max_grad_norm = 0.0;  // global-norm clipping; 0 disables
};

/// First-order optimizer over a fixed parameter list. Moment buffers are
/// created on construction and always match their parameter's shape.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const OptimizerConfig& config, ParamList params);

  const OptimizerConfig& config() const { return config_; }
  void set_stepsize(double s) { config_.stepsize = s; }
  long steps() const { return steps_; }
  const ParamList& parameters() const { return params_; }
  const Matrix& first_moment(std::size_t i) const { return m_[i]; }
  const Matrix& second_moment(std::size_t i) const { return v_[i]; }

  void zero_grad() { vdb::zero_grad(params_); }

  /// Points the optimizer at an equally shaped parameter list (e.g. after the
  /// owning model was copied or moved), keeping the moment buffers.
  void rebind(ParamList params);

  /// Applies one update from the accumulated gradients. Throws
  /// DivergenceError (with the offending tensor named) when a gradient or an
  /// updated value is not finite.
  void step();

 private:
  OptimizerConfig config_;
  ParamList params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long steps_ = 0;
};

/// Global L2 norm of the accumulated gradients.
double grad_norm(const ParamList& params);

}  // namespace vdb

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdb/nn/activation.hpp"
#include "vdb/nn/linear.hpp"

namespace vdb {

struct LayerSpec {
  int width = 32;
  Activation activation = Activation::relu;
};

struct MlpSpec {
  int input_dim = 1;
  std::vector<LayerSpec> hidden;
  int output_dim = 1;
  Activation output_activation = Activation::identity;
  InitScheme init = InitScheme::uniform_fan_in;

  /// Checks widths ≥ 1; throws ConfigError naming the offending field.
  void validate() const;
};

/// Intermediate values of one evaluation: the input to every affine layer and
/// the post-activation output of every layer.
template <typename T>
struct MlpTrace {
  std::vector<MatrixX<T>> inputs;
  std::vector<MatrixX<T>> outputs;
};

/// Fully-connected network with exact reverse-mode gradients.
///
/// evaluate()/adjoint() are const and work for any scalar type (double or
/// Dual); forward()/backward() are the stateful double-precision training
/// path that caches the trace and accumulates into the parameter tensors.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, Rng& rng, const std::string& name = "mlp");

  const MlpSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.input_dim; }
  int output_dim() const { return spec_.output_dim; }
  std::size_t num_layers() const { return layers_.size(); }
  Linear& layer(std::size_t i) { return layers_[i]; }
  const Linear& layer(std::size_t i) const { return layers_[i]; }

  ParamList parameters();
  ConstParamList parameters() const;

  template <typename T>
  MatrixX<T> evaluate(const MatrixX<T>& x, MlpTrace<T>* trace = nullptr) const {
    require_shape(x.cols() == spec_.input_dim, name_ + ": expected input dim " + std::to_string(spec_.input_dim) +
                                                   ", got " + std::to_string(x.cols()));
    if (trace) {
      trace->inputs.clear();
      trace->outputs.clear();
    }
    MatrixX<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (trace) trace->inputs.push_back(h);
      h = activate_all(activations_[i], layers_[i].evaluate(h));
      if (trace) trace->outputs.push_back(h);
    }
    return h;
  }

  /// Returns ∂L/∂X and, when `grads` is non-null, appends parameter gradients
  /// in parameters() order.
  template <typename T>
  MatrixX<T> adjoint(const MlpTrace<T>& trace, const MatrixX<T>& dy, std::vector<MatrixX<T>>* grads) const {
    if (trace.outputs.size() != layers_.size()) throw StateError(name_ + ": adjoint requires a complete trace");
    std::vector<std::vector<MatrixX<T>>> per_layer(layers_.size());
    MatrixX<T> g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      g = g.cwiseProduct(activation_slope_all(activations_[k], trace.outputs[k]));
      g = layers_[k].adjoint(trace.inputs[k], g, grads ? &per_layer[k] : nullptr);
    }
    if (grads)
      for (auto& lg : per_layer)
        for (auto& m : lg) grads->push_back(std::move(m));
    return g;
  }

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& dy);
  void clear_cache() { cache_.reset(); }

 private:
  MlpSpec spec_;
  std::string name_;
  std::vector<Linear> layers_;
  std::vector<Activation> activations_;
  std::optional<MlpTrace<double>> cache_;
};

}  // namespace vdb

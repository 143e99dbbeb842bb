#pragma once

#include <string>
#include <vector>

#include "vdb/nn/rng.hpp"
#include "vdb/nn/tensor.hpp"

namespace vdb {

enum class InitScheme { uniform_fan_in, normal_scaled };

/// Affine map y = W x + b applied row-wise to a batch: Y = X Wᵀ + 1 bᵀ.
/// weight is (out × in), bias is (out × 1).
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(const std::string& name, int in, int out, InitScheme init, Rng& rng);

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  ParamList parameters() { return {&weight, &bias}; }
  ConstParamList parameters() const { return {&weight, &bias}; }

  template <typename T>
  MatrixX<T> evaluate(const MatrixX<T>& x) const {
    require_shape(x.cols() == in_dim(), weight.name + ": expected " + std::to_string(in_dim()) +
                                            " input columns, got " + std::to_string(x.cols()));
    MatrixX<T> y = x * weight.value.template cast<T>().transpose();
    y.rowwise() += bias.value.template cast<T>().col(0).transpose();
    return y;
  }

  /// Given the layer input and ∂L/∂Y, appends {∂L/∂W, ∂L/∂b} to `grads`
  /// (when non-null) and returns ∂L/∂X.
  template <typename T>
  MatrixX<T> adjoint(const MatrixX<T>& x, const MatrixX<T>& dy, std::vector<MatrixX<T>>* grads) const {
    require_shape(dy.cols() == out_dim() && dy.rows() == x.rows(), weight.name + ": upstream shape mismatch");
    if (grads) {
      grads->push_back(dy.transpose() * x);
      grads->push_back(dy.colwise().sum().transpose());
    }
    return dy * weight.value.template cast<T>();
  }
};

}  // namespace vdb

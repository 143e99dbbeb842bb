#pragma once

#include <string>
#include <vector>

#include "vdb/nn/types.hpp"

namespace vdb {

/// Named trainable parameter: values plus a same-shape gradient accumulator.
/// Rank-1 tensors are stored as column matrices.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParamList = std::vector<Tensor*>;
using ConstParamList = std::vector<const Tensor*>;

inline void zero_grad(const ParamList& params) {
  for (Tensor* p : params) p->zero_grad();
}

inline void append(ParamList& dst, const ParamList& src) { dst.insert(dst.end(), src.begin(), src.end()); }

inline void scale_grad(const ParamList& params, double factor) {
  for (Tensor* p : params) p->grad *= factor;
}

/// Adds per-parameter gradients (aligned with `params`) into the accumulators.
inline void accumulate(const ParamList& params, const std::vector<Matrix>& grads, double factor = 1.0) {
  require_shape(params.size() == grads.size(), "gradient list does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i].rows() == params[i]->rows() && grads[i].cols() == params[i]->cols(),
                  "gradient shape mismatch for " + params[i]->name);
    params[i]->grad += factor * grads[i];
  }
}

}  // namespace vdb

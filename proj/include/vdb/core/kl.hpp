#pragma once

#include <cmath>

#include "vdb/nn/dual.hpp"
#include "vdb/nn/types.hpp"

namespace vdb {

/// KL[N(μ, diag σ²) ‖ N(0, I)] = ½ Σ_k (σ²_k + μ²_k − 1 − log σ²_k), in nats.
/// Throws DomainError unless every σ²_k > 0.
template <typename DM, typename DV>
double kl_to_standard_normal(const Eigen::MatrixBase<DM>& mean, const Eigen::MatrixBase<DV>& variance) {
  require_shape(mean.size() == variance.size(), "kl: mean and variance dimensions differ");
  double kl = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double var = variance(k);
    if (!(var > 0.0)) throw DomainError("kl: variance must be strictly positive");
    kl += var + mean(k) * mean(k) - 1.0 - std::log(var);
  }
  return 0.5 * kl;
}

/// Per-row KL for a batch parameterized by log-variance.
template <typename T>
VectorX<T> kl_per_row(const MatrixX<T>& mean, const MatrixX<T>& log_var) {
  require_shape(mean.rows() == log_var.rows() && mean.cols() == log_var.cols(), "kl: shape mismatch");
  using std::exp;
  VectorX<T> out(mean.rows());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    T acc(0.0);
    for (Eigen::Index k = 0; k < mean.cols(); ++k)
      acc += exp(log_var(i, k)) + mean(i, k) * mean(i, k) - T(1.0) - log_var(i, k);
    out(i) = T(0.5) * acc;
  }
  return out;
}

/// ∂KL/∂μ = μ and ∂KL/∂(log σ²) = ½(σ² − 1), scaled by `weight`.
inline void kl_adjoint(const Matrix& mean, const Matrix& log_var, double weight, Matrix& d_mean, Matrix& d_log_var) {
  d_mean += weight * mean;
  d_log_var += (0.5 * weight) * (log_var.array().exp() - 1.0).matrix();
}

}  // namespace vdb

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vdb/nn/linear.hpp"

namespace vdb {

/// Two nonzero blend weights of a phase value: anchors `lo` and `lo + 1`.
struct PhaseSegment {
  int lo = 0;
  double w_lo = 1.0;
  double w_hi = 0.0;
};

/// Linear layer whose parameters are a function of a phase φ ∈ [0, 1].
///
/// k anchor parameter sets θ_0..θ_{k-1} sit at phases φ_i = i / (k - 1). For a
/// given φ the effective parameters interpolate linearly between the two
/// anchors that bracket it, so at most two blend weights are nonzero and the
/// weights always sum to one. φ = 1 maps onto the last anchor.
class PhaseBlendedLinear {
 public:
  PhaseBlendedLinear() = default;
  PhaseBlendedLinear(const std::string& name, int in, int out, int anchors, InitScheme init, Rng& rng);

  int anchors() const { return static_cast<int>(anchors_.size()); }
  int in_dim() const { return anchors_.front().in_dim(); }
  int out_dim() const { return anchors_.front().out_dim(); }
  double anchor_phase(int i) const { return static_cast<double>(i) / (anchors() - 1); }
  Linear& anchor(int i) { return anchors_[static_cast<std::size_t>(i)]; }
  const Linear& anchor(int i) const { return anchors_[static_cast<std::size_t>(i)]; }

  /// Throws DomainError for φ outside [0, 1].
  PhaseSegment segment(double phase) const;
  /// Dense blend-weight vector w(φ) of length k.
  std::vector<double> blend_weights(double phase) const;
  /// Effective (W, b) at φ.
  Linear blend(double phase) const;

  ParamList parameters();
  ConstParamList parameters() const;

  /// Row n of `x` is evaluated with the parameters blended at phase(n).
  template <typename T>
  MatrixX<T> evaluate(const MatrixX<T>& x, const Vector& phase) const {
    require_shape(x.rows() == phase.size(), "phase-blended linear: one phase per row required");
    require_shape(x.cols() == in_dim(), "phase-blended linear: input dim mismatch");
    MatrixX<T> y(x.rows(), out_dim());
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const PhaseSegment s = segment(phase(n));
      const Linear& a = anchors_[static_cast<std::size_t>(s.lo)];
      const Linear& b = anchors_[static_cast<std::size_t>(s.lo + (s.w_hi > 0.0 ? 1 : 0))];
      const Matrix w = s.w_lo * a.weight.value + s.w_hi * b.weight.value;
      const Vector bias = s.w_lo * a.bias.value.col(0) + s.w_hi * b.bias.value.col(0);
      y.row(n) = (w.template cast<T>() * x.row(n).transpose() + bias.template cast<T>()).transpose();
    }
    return y;
  }

  /// Gradients route to both bracketing anchors scaled by their blend weights.
  /// Appends {dW_i, db_i} for every anchor i in order; returns ∂L/∂X.
  template <typename T>
  MatrixX<T> adjoint(const MatrixX<T>& x, const Vector& phase, const MatrixX<T>& dy,
                     std::vector<MatrixX<T>>* grads) const {
    require_shape(dy.rows() == x.rows() && dy.cols() == out_dim(), "phase-blended linear: upstream shape mismatch");
    std::vector<MatrixX<T>> dw(anchors_.size(), MatrixX<T>::Zero(out_dim(), in_dim()));
    std::vector<MatrixX<T>> db(anchors_.size(), MatrixX<T>::Zero(out_dim(), 1));
    MatrixX<T> dx(x.rows(), in_dim());
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const PhaseSegment s = segment(phase(n));
      const std::array<std::pair<int, double>, 2> parts{{{s.lo, s.w_lo}, {s.lo + 1, s.w_hi}}};
      MatrixX<T> w = MatrixX<T>::Zero(out_dim(), in_dim());
      for (const auto& [idx, weight] : parts) {
        if (weight == 0.0) continue;
        const auto i = static_cast<std::size_t>(idx);
        w += anchors_[i].weight.value.template cast<T>() * T(weight);
        dw[i] += (dy.row(n).transpose() * x.row(n)) * T(weight);
        db[i] += dy.row(n).transpose() * T(weight);
      }
      dx.row(n) = dy.row(n) * w;
    }
    if (grads)
      for (std::size_t i = 0; i < anchors_.size(); ++i) {
        grads->push_back(std::move(dw[i]));
        grads->push_back(std::move(db[i]));
      }
    return dx;
  }

  Matrix forward(const Matrix& x, const Vector& phase);
  Matrix backward(const Matrix& dy);

 private:
  std::vector<Linear> anchors_;
  std::optional<std::pair<Matrix, Vector>> cache_;
};

}  // namespace vdb

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdb/nn/mlp.hpp"

namespace vdb {

/// How Σ_E is parameterized. per_input: an exponentiated log-variance head,
/// σ²(x) = exp(W x + b). shared: one learned log-variance scalar for every
/// input and latent dimension, Σ = σ² I.
enum class VarianceMode { per_input, shared };

struct EncoderSpec {
  int input_dim = 2;
  std::vector<LayerSpec> hidden{{32, Activation::relu}, {32, Activation::relu}};
  int latent_dim = 32;
  VarianceMode variance = VarianceMode::per_input;
  InitScheme init = InitScheme::uniform_fan_in;
};

/// Stochastic encoder output for a batch: mean μ, log σ², and the sample
/// z = μ + σ ⊙ ε (z = μ when no noise is supplied).
template <typename T>
struct EncoderOutputT {
  MatrixX<T> mean;
  MatrixX<T> log_var;
  MatrixX<T> sample;

  MatrixX<T> variance() const {
    using std::exp;
    return log_var.unaryExpr([](const T& v) { return exp(v); });
  }
};
using EncoderOutput = EncoderOutputT<double>;

template <typename T>
struct EncoderTrace {
  MlpTrace<T> trunk;
  MatrixX<T> features;
  MatrixX<T> input;
  std::optional<Matrix> noise;
};

/// Gaussian encoder E(z|x) = N(μ_E(x), Σ_E(x)): an MLP trunk followed by
/// linear mean and log-variance heads.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderSpec& spec, Rng& rng, const std::string& name = "encoder");

  const EncoderSpec& spec() const { return spec_; }
  int latent_dim() const { return spec_.latent_dim; }
  int input_dim() const { return spec_.input_dim; }

  ParamList parameters();
  ConstParamList parameters() const;

  Linear& mean_head() { return mean_head_; }
  Linear& log_var_head() { return log_var_head_; }
  Tensor& shared_log_var() { return shared_log_var_; }
  std::optional<Mlp>& trunk() { return trunk_; }

  /// Encodes a batch. With `noise` (same shape as the latent batch) the sample
  /// uses the reparameterization μ + exp(½ log σ²) ⊙ ε.
  template <typename T>
  EncoderOutputT<T> evaluate(const MatrixX<T>& x, const Matrix* noise = nullptr,
                             EncoderTrace<T>* trace = nullptr) const {
    require_shape(x.cols() == spec_.input_dim, "encoder: input dim mismatch");
    MatrixX<T> h = trunk_ ? trunk_->evaluate(x, trace ? &trace->trunk : nullptr) : x;
    EncoderOutputT<T> out;
    out.mean = mean_head_.evaluate(h);
    if (spec_.variance == VarianceMode::per_input) {
      out.log_var = log_var_head_.evaluate(h);
    } else {
      out.log_var = MatrixX<T>::Constant(x.rows(), spec_.latent_dim, T(shared_log_var_.value(0, 0)));
    }
    if (noise) {
      require_shape(noise->rows() == x.rows() && noise->cols() == spec_.latent_dim, "encoder: noise shape mismatch");
      using std::exp;
      out.sample = out.mean;
      for (Eigen::Index j = 0; j < out.sample.cols(); ++j)
        for (Eigen::Index i = 0; i < out.sample.rows(); ++i)
          out.sample(i, j) += exp(T(0.5) * out.log_var(i, j)) * T((*noise)(i, j));
    } else {
      out.sample = out.mean;
    }
    if (trace) {
      trace->features = h;
      trace->input = x;
      trace->noise = noise ? std::optional<Matrix>(*noise) : std::nullopt;
    }
    return out;
  }

  /// Folds ∂L/∂z into ∂L/∂μ and ∂L/∂log σ² through the reparameterization.
  template <typename T>
  static void reparam_adjoint(const EncoderOutputT<T>& out, const Matrix& noise, const MatrixX<T>& d_sample,
                              MatrixX<T>& d_mean, MatrixX<T>& d_log_var) {
    using std::exp;
    d_mean += d_sample;
    for (Eigen::Index j = 0; j < d_sample.cols(); ++j)
      for (Eigen::Index i = 0; i < d_sample.rows(); ++i)
        d_log_var(i, j) += d_sample(i, j) * T(0.5) * exp(T(0.5) * out.log_var(i, j)) * T(noise(i, j));
  }

  /// Backpropagates ∂L/∂μ and ∂L/∂log σ². Appends parameter gradients in
  /// parameters() order and returns ∂L/∂x.
  template <typename T>
  MatrixX<T> adjoint(const EncoderTrace<T>& trace, const MatrixX<T>& d_mean, const MatrixX<T>& d_log_var,
                     std::vector<MatrixX<T>>* grads) const {
    std::vector<MatrixX<T>> head_grads;
    MatrixX<T> dh = mean_head_.adjoint(trace.features, d_mean, grads ? &head_grads : nullptr);
    if (spec_.variance == VarianceMode::per_input) {
      dh += log_var_head_.adjoint(trace.features, d_log_var, grads ? &head_grads : nullptr);
    } else if (grads) {
      MatrixX<T> g(1, 1);
      g(0, 0) = d_log_var.sum();
      head_grads.push_back(g);
    }
    MatrixX<T> dx;
    if (trunk_) {
      dx = trunk_->adjoint(trace.trunk, dh, grads);
    } else {
      dx = dh;
    }
    if (grads)
      for (auto& g : head_grads) grads->push_back(std::move(g));
    return dx;
  }

 private:
  EncoderSpec spec_;
  std::optional<Mlp> trunk_;
  Linear mean_head_;
  Linear log_var_head_;
  Tensor shared_log_var_;
};

}  // namespace vdb

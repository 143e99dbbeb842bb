#pragma once

#include <vector>

#include "vdb/core/dual_state.hpp"
#include "vdb/core/encoder.hpp"

namespace vdb {

/// D inside log terms is clamped to [ε, 1 − ε].
inline constexpr double kLogClamp = 1e-7;

/// −log(clamp(p)) and its derivative with respect to p (zero where the clamp is active).
struct ClampedLog {
  double value;
  double slope;
};
ClampedLog neg_log_clamped(double p);

struct VdbDiscriminatorSpec {
  EncoderSpec encoder;
  /// false: deterministic z = μ_E(x) and no KL term (plain GAN/GAIL discriminator).
  bool bottleneck = true;
};

/// Stochastic encoder followed by a single linear unit and a sigmoid,
/// D(z) = σ(w_Dᵀ z + b_D).
class VdbDiscriminator {
 public:
  VdbDiscriminator() = default;
  VdbDiscriminator(const VdbDiscriminatorSpec& spec, Rng& rng, const std::string& name = "disc");

  const VdbDiscriminatorSpec& spec() const { return spec_; }
  bool bottleneck() const { return spec_.bottleneck; }
  int input_dim() const { return encoder_.input_dim(); }
  int latent_dim() const { return encoder_.latent_dim(); }
  Encoder& encoder() { return encoder_; }
  const Encoder& encoder() const { return encoder_; }
  Linear& head() { return head_; }
  const Linear& head() const { return head_; }

  /// Encoder parameters followed by the head's (w_D, b_D).
  ParamList parameters();
  ConstParamList parameters() const;

  /// D(μ_E(x)) per row.
  Vector prob_mean(const Matrix& x) const;
  /// D(z), z ~ E(z|x) drawn with the given noise (ignored without bottleneck).
  Vector prob_sampled(const Matrix& x, const Matrix& noise) const;
  /// ∇ₓ D(μ_E(x)) per row.
  Matrix input_grad_mean(const Matrix& x) const;

  /// Forward/backward of D for any scalar type: returns D per row and, given
  /// ∂L/∂D per row, appends parameter gradients and writes ∂L/∂x.
  template <typename T>
  VectorX<T> prob(const MatrixX<T>& x, const Matrix* noise, EncoderTrace<T>* trace, EncoderOutputT<T>* out,
                  MatrixX<T>* logits = nullptr) const {
    EncoderOutputT<T> enc = encoder_.evaluate(x, spec_.bottleneck ? noise : nullptr, trace);
    MatrixX<T> l = head_.evaluate(enc.sample);
    VectorX<T> p(l.rows());
    for (Eigen::Index i = 0; i < l.rows(); ++i) p(i) = sigmoid(l(i, 0));
    if (logits) *logits = l;
    if (out) *out = std::move(enc);
    return p;
  }

  template <typename T>
  MatrixX<T> prob_adjoint(const EncoderTrace<T>& trace, const EncoderOutputT<T>& enc, const VectorX<T>& p,
                          const VectorX<T>& d_prob, std::vector<MatrixX<T>>* grads) const {
    MatrixX<T> d_logit(p.size(), 1);
    for (Eigen::Index i = 0; i < p.size(); ++i) d_logit(i, 0) = d_prob(i) * p(i) * (T(1.0) - p(i));
    return logit_adjoint(trace, enc, d_logit, grads);
  }

  /// Backpropagates ∂L/∂logit (N × 1) through head and encoder. Optional
  /// extra ∂L/∂μ, ∂L/∂log σ² (e.g. from the KL term) are added before the
  /// encoder adjoint.
  template <typename T>
  MatrixX<T> logit_adjoint(const EncoderTrace<T>& trace, const EncoderOutputT<T>& enc, const MatrixX<T>& d_logit,
                           std::vector<MatrixX<T>>* grads, const MatrixX<T>* extra_d_mean = nullptr,
                           const MatrixX<T>* extra_d_log_var = nullptr) const {
    std::vector<MatrixX<T>> head_grads;
    MatrixX<T> dz = head_.adjoint(enc.sample, d_logit, grads ? &head_grads : nullptr);
    MatrixX<T> d_mean = MatrixX<T>::Zero(dz.rows(), dz.cols());
    MatrixX<T> d_log_var = MatrixX<T>::Zero(dz.rows(), dz.cols());
    if (spec_.bottleneck && trace.noise) {
      Encoder::reparam_adjoint(enc, *trace.noise, dz, d_mean, d_log_var);
    } else {
      d_mean += dz;
    }
    if (extra_d_mean) d_mean += *extra_d_mean;
    if (extra_d_log_var) d_log_var += *extra_d_log_var;
    MatrixX<T> dx = encoder_.adjoint(trace, d_mean, d_log_var, grads);
    if (grads)
      for (auto& g : head_grads) grads->push_back(std::move(g));
    return dx;
  }

 private:
  VdbDiscriminatorSpec spec_;
  Encoder encoder_;
  Linear head_;
};

/// Result of one evaluation of the VDB Lagrangian.
struct DiscriminatorLossResult {
  double loss = 0.0;       ///< bce_real + bce_fake + β (batch_kl − I_c)
  double bce_real = 0.0;   ///< mean −log D(z_real)
  double bce_fake = 0.0;   ///< mean −log(1 − D(z_fake))
  double batch_kl = 0.0;   ///< mean KL over the pooled real+fake batch
  double kl_term = 0.0;    ///< β (batch_kl − I_c)
  double accuracy = 0.0;   ///< fraction classified correctly from sampled z
};

/// Evaluates the discriminator/encoder Lagrangian with explicit reparameterization
/// noise (one row of ε per input). β is a constant here. When `grads` is
/// non-null, appends ∂loss/∂θ in parameters() order.
DiscriminatorLossResult discriminator_loss(const VdbDiscriminator& disc, const Matrix& real, const Matrix& fake,
                                           const DualState& dual, const Matrix& noise_real, const Matrix& noise_fake,
                                           std::vector<Matrix>* grads);

/// Same, drawing one fresh ε per input from `rng`.
DiscriminatorLossResult discriminator_loss(const VdbDiscriminator& disc, const Matrix& real, const Matrix& fake,
                                           const DualState& dual, Rng& rng, std::vector<Matrix>* grads);

struct GeneratorLossResult {
  double value = 0.0;  ///< mean −log(1 − D(μ_E(x))); the generator maximizes this
  Matrix input_grad;   ///< ∂value/∂x per row (empty unless requested)
};

/// Generator objective evaluated at the encoder mean, no KL term.
GeneratorLossResult generator_loss(const VdbDiscriminator& disc, const Matrix& fake, bool want_input_grad);

/// Gradient penalty on real samples only.
struct GpConfig {
  double weight = 0.0;  ///< w_GP

  void validate() const;
};

struct GradientPenaltyResult {
  double value = 0.0;           ///< w_GP · mean ½‖∇ₓ D(μ_E(x) + σ_E(x) ⊙ ε)‖²
  double mean_grad_norm = 0.0;  ///< mean ‖∇ₓ D‖ over the batch
};

/// Differentiates through the reparameterized encoder. Parameter gradients of
/// the penalty are exact: the adjoint pass is rerun in dual numbers with the
/// inputs seeded along ∇ₓD, which gives J_gᵀ g for g = ∇ₓD.
/// With w_GP = 0 nothing is evaluated and no gradient is appended.
GradientPenaltyResult gradient_penalty(const VdbDiscriminator& disc, const Matrix& real, const Matrix& noise,
                                       const GpConfig& gp, std::vector<Matrix>* grads);

/// Per-row ∇ₓ D(z(x, ε)) for fixed ε.
Matrix discriminator_input_grad(const VdbDiscriminator& disc, const Matrix& x, const Matrix& noise);

}  // namespace vdb

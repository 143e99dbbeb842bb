#include "vdb/core/discriminator.hpp"

#include <cmath>

#include "vdb/core/kl.hpp"
#include "vdb/nn/dual.hpp"

namespace vdb {

ClampedLog neg_log_clamped(double p) {
  if (p < kLogClamp) return {-std::log(kLogClamp), 0.0};
  if (p > 1.0 - kLogClamp) return {-std::log(1.0 - kLogClamp), 0.0};
  return {-std::log(p), -1.0 / p};
}

VdbDiscriminator::VdbDiscriminator(const VdbDiscriminatorSpec& spec, Rng& rng, const std::string& name)
    : spec_(spec), encoder_(spec.encoder, rng, name + ".encoder") {
  head_ = Linear(name + ".head", spec_.encoder.latent_dim, 1, spec_.encoder.init, rng);
}

ParamList VdbDiscriminator::parameters() {
  ParamList out = encoder_.parameters();
  append(out, head_.parameters());
  return out;
}

ConstParamList VdbDiscriminator::parameters() const {
  ConstParamList out = encoder_.parameters();
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

Vector VdbDiscriminator::prob_mean(const Matrix& x) const {
  return prob<double>(x, nullptr, nullptr, nullptr);
}

Vector VdbDiscriminator::prob_sampled(const Matrix& x, const Matrix& noise) const {
  return prob<double>(x, &noise, nullptr, nullptr);
}

Matrix VdbDiscriminator::input_grad_mean(const Matrix& x) const {
  EncoderTrace<double> trace;
  EncoderOutput enc;
  const Vector p = prob<double>(x, nullptr, &trace, &enc);
  return prob_adjoint<double>(trace, enc, p, Vector::Ones(p.size()), nullptr);
}

namespace {

void check_batch(const VdbDiscriminator& disc, const Matrix& m, const char* what) {
  if (m.rows() == 0) throw std::invalid_argument(std::string("discriminator loss: empty ") + what + " batch");
  require_shape(m.cols() == disc.input_dim(), std::string("discriminator loss: ") + what + " batch has wrong width");
}

}  // namespace

DiscriminatorLossResult discriminator_loss(const VdbDiscriminator& disc, const Matrix& real, const Matrix& fake,
                                           const DualState& dual, const Matrix& noise_real, const Matrix& noise_fake,
                                           std::vector<Matrix>* grads) {
  check_batch(disc, real, "real");
  check_batch(disc, fake, "fake");
  if (real.rows() != fake.rows())
    throw std::invalid_argument("discriminator loss: real and fake batches must have equal size");

  const Eigen::Index n_real = real.rows();
  const Eigen::Index n_fake = fake.rows();
  const double pooled = static_cast<double>(n_real + n_fake);

  DiscriminatorLossResult r;
  EncoderTrace<double> tr_real, tr_fake;
  EncoderOutput enc_real, enc_fake;
  const Vector p_real = disc.prob<double>(real, &noise_real, &tr_real, &enc_real);
  const Vector p_fake = disc.prob<double>(fake, &noise_fake, &tr_fake, &enc_fake);

  Matrix dl_real(n_real, 1), dl_fake(n_fake, 1);
  double correct = 0.0;
  for (Eigen::Index i = 0; i < n_real; ++i) {
    const ClampedLog c = neg_log_clamped(p_real(i));
    r.bce_real += c.value;
    dl_real(i, 0) = c.slope * p_real(i) * (1.0 - p_real(i)) / static_cast<double>(n_real);
    correct += p_real(i) > 0.5 ? 1.0 : 0.0;
  }
  for (Eigen::Index i = 0; i < n_fake; ++i) {
    const ClampedLog c = neg_log_clamped(1.0 - p_fake(i));
    r.bce_fake += c.value;
    dl_fake(i, 0) = -c.slope * p_fake(i) * (1.0 - p_fake(i)) / static_cast<double>(n_fake);
    correct += p_fake(i) < 0.5 ? 1.0 : 0.0;
  }
  r.bce_real /= static_cast<double>(n_real);
  r.bce_fake /= static_cast<double>(n_fake);
  r.accuracy = correct / pooled;

  r.batch_kl = (kl_per_row(enc_real.mean, enc_real.log_var).sum() + kl_per_row(enc_fake.mean, enc_fake.log_var).sum()) /
               pooled;
  const bool use_kl = disc.bottleneck();
  r.kl_term = use_kl ? dual.beta * (r.batch_kl - dual.target_kl) : 0.0;
  r.loss = r.bce_real + r.bce_fake + r.kl_term;

  if (grads) {
    std::vector<Matrix> g_real, g_fake;
    Matrix dm_real = Matrix::Zero(n_real, disc.latent_dim()), dv_real = dm_real;
    Matrix dm_fake = Matrix::Zero(n_fake, disc.latent_dim()), dv_fake = dm_fake;
    if (use_kl) {
      kl_adjoint(enc_real.mean, enc_real.log_var, dual.beta / pooled, dm_real, dv_real);
      kl_adjoint(enc_fake.mean, enc_fake.log_var, dual.beta / pooled, dm_fake, dv_fake);
    }
    disc.logit_adjoint<double>(tr_real, enc_real, dl_real, &g_real, &dm_real, &dv_real);
    disc.logit_adjoint<double>(tr_fake, enc_fake, dl_fake, &g_fake, &dm_fake, &dv_fake);
    for (std::size_t k = 0; k < g_real.size(); ++k) grads->push_back(g_real[k] + g_fake[k]);
  }
  return r;
}

DiscriminatorLossResult discriminator_loss(const VdbDiscriminator& disc, const Matrix& real, const Matrix& fake,
                                           const DualState& dual, Rng& rng, std::vector<Matrix>* grads) {
  const Matrix noise_real = rng.normal_matrix(real.rows(), disc.latent_dim());
  const Matrix noise_fake = rng.normal_matrix(fake.rows(), disc.latent_dim());
  return discriminator_loss(disc, real, fake, dual, noise_real, noise_fake, grads);
}

GeneratorLossResult generator_loss(const VdbDiscriminator& disc, const Matrix& fake, bool want_input_grad) {
  if (fake.rows() == 0) throw std::invalid_argument("generator loss: empty batch");
  EncoderTrace<double> trace;
  EncoderOutput enc;
  const Vector p = disc.prob<double>(fake, nullptr, &trace, &enc);
  const double n = static_cast<double>(fake.rows());
  GeneratorLossResult r;
  Vector d_prob(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const ClampedLog c = neg_log_clamped(1.0 - p(i));
    r.value += c.value / n;
    d_prob(i) = -c.slope / n;
  }
  if (want_input_grad) r.input_grad = disc.prob_adjoint<double>(trace, enc, p, d_prob, nullptr);
  return r;
}

void GpConfig::validate() const {
  if (!(weight >= 0.0)) throw ConfigError("gp.weight (w_GP) must be >= 0");
}

Matrix discriminator_input_grad(const VdbDiscriminator& disc, const Matrix& x, const Matrix& noise) {
  EncoderTrace<double> trace;
  EncoderOutput enc;
  const Vector p = disc.prob<double>(x, &noise, &trace, &enc);
  return disc.prob_adjoint<double>(trace, enc, p, Vector::Ones(p.size()), nullptr);
}

GradientPenaltyResult gradient_penalty(const VdbDiscriminator& disc, const Matrix& real, const Matrix& noise,
                                       const GpConfig& gp, std::vector<Matrix>* grads) {
  gp.validate();
  GradientPenaltyResult r;
  if (gp.weight == 0.0) return r;
  if (real.rows() == 0) throw std::invalid_argument("gradient penalty: empty batch");

  const Matrix g = discriminator_input_grad(disc, real, noise);
  const double n = static_cast<double>(real.rows());
  r.value = gp.weight * 0.5 * g.rowwise().squaredNorm().sum() / n;
  r.mean_grad_norm = g.rowwise().norm().sum() / n;

  if (grads) {
    // d/dt ∇_θ D(x + t g) at t = 0 equals ∇_θ ⟨∇ₓD, g⟩ with g held fixed,
    // which is the gradient of ½‖∇ₓD‖².
    const MatrixX<Dual> xd = make_dual(real, g);
    EncoderTrace<Dual> trace;
    EncoderOutputT<Dual> enc;
    const VectorX<Dual> p = disc.prob<Dual>(xd, &noise, &trace, &enc);
    const VectorX<Dual> upstream = VectorX<Dual>::Constant(p.size(), Dual(gp.weight / n));
    std::vector<MatrixX<Dual>> dual_grads;
    disc.prob_adjoint<Dual>(trace, enc, p, upstream, &dual_grads);
    for (const auto& dg : dual_grads) grads->push_back(tangent_part(dg));
  }
  return r;
}

}  // namespace vdb

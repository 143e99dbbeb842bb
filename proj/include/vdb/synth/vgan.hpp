#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>

#include "vdb/cli/metrics_log.hpp"
#include "vdb/core/discriminator.hpp"
#include "vdb/nn/optimizer.hpp"
#include "vdb/synth/distribution.hpp"

namespace vdb {

constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

/// Discriminator spec for a given information budget: I_c = ∞ turns the
/// bottleneck off (z = μ_E(x), no KL term), anything finite turns it on.
VdbDiscriminatorSpec discriminator_spec_for(const EncoderSpec& encoder, double ic);

/// D(μ_E(x)) and ‖∇ₓ D(μ_E(x))‖ on a uniform square grid. Entry (i, j) is at
/// (coords[j], coords[i]).
struct DecisionGrid {
  Vector coords;
  Matrix prob;
  Matrix grad_norm;
};

DecisionGrid evaluate_grid(const VdbDiscriminator& disc, double half_width, int resolution);

/// Long-format CSV: x,y,value.
void write_grid_csv(const Vector& coords, const Matrix& values, std::ostream& os);

/// Held-out accuracy with z drawn from E(z|x): D > ½ on `positive`, D < ½ on `negative`.
double sampled_accuracy(const VdbDiscriminator& disc, const Matrix& positive, const Matrix& negative, Rng& rng);

struct DiscOnlyConfig {
  double ic = kUnconstrained;
  EncoderSpec encoder;
  int steps = 2000;
  int batch = 128;
  OptimizerConfig optimizer;
  double dual_stepsize = 1e-2;
  double initial_beta = 0.0;
  double grid_half_width = 6.0;
  int grid_resolution = 121;
  // Band between the modes, minus the strip around the decision boundary:
  // band_inner ≤ |x| ≤ band_outer and |y| ≤ band_half_height.
  double band_inner = 1.0;
  double band_outer = 4.0;
  double band_half_height = 3.0;
  int eval_samples = 5000;        ///< per class
  int log_every = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DiscOnlyResult {
  VdbDiscriminator disc;
  MetricsLog metrics;
  DecisionGrid grid;
  double accuracy = 0.0;       ///< held-out, sampled z
  double max_grad_norm = 0.0;  ///< over the grid
  double band_grad_norm = 0.0; ///< mean ‖∇ₓD(μ_E(x))‖ over grid points in the band
  double final_beta = 0.0;
  double trailing_kl = 0.0;    ///< mean batch KL over the last 10% of steps
};

/// Trains the encoder and head to tell samples of `positive` (label 1) from
/// samples of `negative` (label 0), with dual updates on β when I_c is finite.
DiscOnlyResult train_discriminator_only(const Distribution2D& positive, const Distribution2D& negative,
                                        const DiscOnlyConfig& cfg);

/// Generator g(u): an MLP from u ~ N(0, I) to ℝ².
struct GeneratorNet {
  int noise_dim = 8;
  Mlp net;

  GeneratorNet() = default;
  GeneratorNet(int noise_dim, const std::vector<LayerSpec>& hidden, Rng& rng);

  Matrix noise(Eigen::Index n, Rng& rng) const { return rng.normal_matrix(n, noise_dim); }
  Matrix generate(const Matrix& u) const { return net.evaluate<double>(u); }
  Matrix sample(Eigen::Index n, Rng& rng) const { return generate(noise(n, rng)); }
};

struct VganConfig {
  Distribution2D target = Distribution2D::ring();
  EncoderSpec encoder;
  bool bottleneck = true;
  int noise_dim = 8;
  std::vector<LayerSpec> generator_hidden{{64, Activation::relu}, {64, Activation::relu}};
  int steps = 6000;
  int batch = 128;
  int disc_steps_per_gen = 1;
  OptimizerConfig disc_optimizer;
  OptimizerConfig gen_optimizer;
  DualState dual{0.0, 0.5, 2e-3};  // α_β raised from 1e-5 to suit a few thousand steps
  std::optional<double> fixed_beta;  ///< disables dual updates when set
  GpConfig gp;
  int log_every = 10;
  int kl_window = 1000;     ///< steps in the trailing KL mean
  int eval_samples = 2000;  ///< generated samples for mode coverage
  std::uint64_t seed = 0;

  void validate() const;
};

struct VganResult {
  VdbDiscriminator disc;
  GeneratorNet gen;
  MetricsLog metrics;
  std::vector<double> kl_history;  ///< batch KL at every discriminator step
  std::vector<double> beta_history;
  double trailing_kl = 0.0;
  int modes_covered = 0;
  Matrix samples;
};

/// Alternates discriminator/encoder steps (with dual updates on β unless β
/// is fixed) and generator steps on the objective −log(1 − D(μ_E(g(u)))).
VganResult train_vgan(const VganConfig& cfg);

}  // namespace vdb

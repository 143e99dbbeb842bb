#include "vdb/synth/vgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace vdb {

namespace {

// Re-raises a divergence with the run coordinates attached.
[[noreturn]] void diverged(const std::string& what, std::uint64_t seed, int step) {
  throw DivergenceError(what + " (seed " + std::to_string(seed) + ", step " + std::to_string(step) + ")");
}

void apply_gradients(Optimizer& opt, const ParamList& params, const std::vector<Matrix>& grads,
                     const std::vector<Matrix>& extra) {
  opt.zero_grad();
  accumulate(params, grads);
  if (!extra.empty()) accumulate(params, extra);
  opt.step();
}

double tail_mean(const std::vector<double>& v, std::size_t window) {
  if (v.empty()) return 0.0;
  const std::size_t n = std::min(window, v.size());
  return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(n), v.end(), 0.0) / static_cast<double>(n);
}

}  // namespace

VdbDiscriminatorSpec discriminator_spec_for(const EncoderSpec& encoder, double ic) {
  if (!(ic > 0.0)) throw ConfigError("ic (I_c) must be positive or inf");
  VdbDiscriminatorSpec spec;
  spec.encoder = encoder;
  spec.bottleneck = std::isfinite(ic);
  return spec;
}

DecisionGrid evaluate_grid(const VdbDiscriminator& disc, double half_width, int resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
  DecisionGrid g;
  g.coords = Vector::LinSpaced(resolution, -half_width, half_width);
  Matrix pts(static_cast<Eigen::Index>(resolution) * resolution, 2);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      pts(i * resolution + j, 0) = g.coords(j);
      pts(i * resolution + j, 1) = g.coords(i);
    }
  const Vector p = disc.prob_mean(pts);
  const Vector n = disc.input_grad_mean(pts).rowwise().norm();
  g.prob.resize(resolution, resolution);
  g.grad_norm.resize(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      g.prob(i, j) = p(i * resolution + j);
      g.grad_norm(i, j) = n(i * resolution + j);
    }
  return g;
}

void write_grid_csv(const Vector& coords, const Matrix& values, std::ostream& os) {
  os << "x,y,value\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      os << format_metric(coords(j)) << ',' << format_metric(coords(i)) << ',' << format_metric(values(i, j)) << '\n';
}

double sampled_accuracy(const VdbDiscriminator& disc, const Matrix& positive, const Matrix& negative, Rng& rng) {
  const Vector pp = disc.prob_sampled(positive, rng.normal_matrix(positive.rows(), disc.latent_dim()));
  const Vector pn = disc.prob_sampled(negative, rng.normal_matrix(negative.rows(), disc.latent_dim()));
  const double correct = static_cast<double>((pp.array() > 0.5).count() + (pn.array() < 0.5).count());
  return correct / static_cast<double>(pp.size() + pn.size());
}

void DiscOnlyConfig::validate() const {
  if (!(ic > 0.0)) throw ConfigError("ic (I_c) must be positive or inf");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (!(dual_stepsize > 0.0)) throw ConfigError("dual.stepsize must be positive");
  if (initial_beta < 0.0) throw ConfigError("dual.beta must be >= 0");
  if (grid_resolution < 2) throw ConfigError("grid.resolution must be at least 2");
  if (eval_samples < 1) throw ConfigError("eval_samples must be at least 1");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
}

DiscOnlyResult train_discriminator_only(const Distribution2D& positive, const Distribution2D& negative,
                                        const DiscOnlyConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng init = root.split("disc.init"), data = root.split("data"), noise = root.split("disc.noise");
  Rng eval = root.split("eval");

  DiscOnlyResult r;
  r.disc = VdbDiscriminator(discriminator_spec_for(cfg.encoder, cfg.ic), init);
  const ParamList params = r.disc.parameters();
  Optimizer opt(cfg.optimizer, params);
  DualState dual;
  dual.beta = cfg.initial_beta;
  dual.stepsize = cfg.dual_stepsize;
  dual.target_kl = std::isfinite(cfg.ic) ? cfg.ic : 1.0;
  r.metrics = MetricsLog({"loss", "bce_real", "bce_fake", "batch_kl", "beta", "accuracy"});

  std::vector<double> kls;
  for (int step = 1; step <= cfg.steps; ++step) {
    const Matrix a = sample(positive, cfg.batch, data);
    const Matrix b = sample(negative, cfg.batch, data);
    std::vector<Matrix> grads;
    const auto res = discriminator_loss(r.disc, a, b, dual, noise, &grads);
    if (!std::isfinite(res.loss)) diverged("discriminator loss is not finite", cfg.seed, step);
    try {
      apply_gradients(opt, params, grads, {});
    } catch (const DivergenceError& e) {
      diverged(e.what(), cfg.seed, step);
    }
    if (r.disc.bottleneck()) dual = dual_update(dual, res.batch_kl);
    kls.push_back(res.batch_kl);
    if (step % cfg.log_every == 0 || step == cfg.steps)
      r.metrics.append(step, {res.loss, res.bce_real, res.bce_fake, res.batch_kl, dual.beta, res.accuracy});
  }
  r.final_beta = dual.beta;
  r.trailing_kl = tail_mean(kls, std::max<std::size_t>(1, kls.size() / 10));

  const Matrix held_a = sample(positive, cfg.eval_samples, eval);
  const Matrix held_b = sample(negative, cfg.eval_samples, eval);
  r.accuracy = sampled_accuracy(r.disc, held_a, held_b, eval);

  r.grid = evaluate_grid(r.disc, cfg.grid_half_width, cfg.grid_resolution);
  r.max_grad_norm = r.grid.grad_norm.maxCoeff();
  double band = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < r.grid.coords.size(); ++i)
    for (Eigen::Index j = 0; j < r.grid.coords.size(); ++j)
      if (std::abs(r.grid.coords(j)) >= cfg.band_inner && std::abs(r.grid.coords(j)) <= cfg.band_outer &&
          std::abs(r.grid.coords(i)) <= cfg.band_half_height) {
        band += r.grid.grad_norm(i, j);
        ++count;
      }
  r.band_grad_norm = count ? band / count : 0.0;
  return r;
}

GeneratorNet::GeneratorNet(int noise_dim_, const std::vector<LayerSpec>& hidden, Rng& rng) : noise_dim(noise_dim_) {
  MlpSpec spec;
  spec.input_dim = noise_dim;
  spec.hidden = hidden;
  spec.output_dim = 2;
  net = Mlp(spec, rng, "gen");
}

void VganConfig::validate() const {
  target.validate();
  dual.validate();
  gp.validate();
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (noise_dim < 1) throw ConfigError("gen.noise_dim must be at least 1");
  if (disc_steps_per_gen < 1) throw ConfigError("disc_steps_per_gen must be at least 1");
  if (fixed_beta && *fixed_beta < 0.0) throw ConfigError("beta.fixed must be >= 0");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
  if (kl_window < 1) throw ConfigError("kl_window must be at least 1");
  if (eval_samples < 1) throw ConfigError("eval_samples must be at least 1");
}

VganResult train_vgan(const VganConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng disc_init = root.split("disc.init"), gen_init = root.split("gen.init");
  Rng data = root.split("data"), noise = root.split("disc.noise"), gen_noise = root.split("gen.noise");
  Rng gp_noise = root.split("gp.noise"), eval = root.split("eval");

  VganResult r;
  VdbDiscriminatorSpec dspec;
  dspec.encoder = cfg.encoder;
  dspec.bottleneck = cfg.bottleneck;
  r.disc = VdbDiscriminator(dspec, disc_init);
  r.gen = GeneratorNet(cfg.noise_dim, cfg.generator_hidden, gen_init);
  const ParamList dparams = r.disc.parameters();
  const ParamList gparams = r.gen.net.parameters();
  Optimizer dopt(cfg.disc_optimizer, dparams), gopt(cfg.gen_optimizer, gparams);
  DualState dual = cfg.dual;
  if (cfg.fixed_beta) dual.beta = *cfg.fixed_beta;
  r.metrics = MetricsLog({"disc_loss", "bce_real", "bce_fake", "gen_loss", "batch_kl", "beta", "accuracy", "gp"});

  for (int step = 1; step <= cfg.steps; ++step) {
    DiscriminatorLossResult res;
    GradientPenaltyResult gpr;
    for (int k = 0; k < cfg.disc_steps_per_gen; ++k) {
      const Matrix real = sample(cfg.target, cfg.batch, data);
      const Matrix fake = r.gen.sample(cfg.batch, gen_noise);
      std::vector<Matrix> grads, gp_grads;
      res = discriminator_loss(r.disc, real, fake, dual, noise, &grads);
      if (cfg.gp.weight > 0.0)
        gpr = gradient_penalty(r.disc, real, gp_noise.normal_matrix(real.rows(), r.disc.latent_dim()), cfg.gp,
                               &gp_grads);
      if (!std::isfinite(res.loss + gpr.value)) diverged("discriminator loss is not finite", cfg.seed, step);
      try {
        apply_gradients(dopt, dparams, grads, gp_grads);
      } catch (const DivergenceError& e) {
        diverged(e.what(), cfg.seed, step);
      }
      if (cfg.bottleneck && !cfg.fixed_beta) dual = dual_update(dual, res.batch_kl);
      r.kl_history.push_back(res.batch_kl);
      r.beta_history.push_back(dual.beta);
    }

    // Generator ascent on −log(1 − D(μ_E(g(u)))), i.e. descent on its negation.
    const Matrix u = r.gen.noise(cfg.batch, gen_noise);
    const Matrix x = r.gen.net.forward(u);
    const GeneratorLossResult g = generator_loss(r.disc, x, true);
    if (!std::isfinite(g.value)) diverged("generator loss is not finite", cfg.seed, step);
    try {
      gopt.zero_grad();
      r.gen.net.backward(-g.input_grad);
      gopt.step();
    } catch (const DivergenceError& e) {
      diverged(e.what(), cfg.seed, step);
    }

    if (step % cfg.log_every == 0 || step == cfg.steps)
      r.metrics.append(step, {res.loss + gpr.value, res.bce_real, res.bce_fake, g.value, res.batch_kl, dual.beta,
                              res.accuracy, gpr.value});
  }
  r.gen.net.clear_cache();
  r.trailing_kl = tail_mean(r.kl_history, static_cast<std::size_t>(cfg.kl_window));
  r.samples = r.gen.sample(cfg.eval_samples, eval);
  r.modes_covered = mode_coverage(cfg.target, r.samples);
  return r;
}

}  // namespace vdb

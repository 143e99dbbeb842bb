#include "vdb/il/vail.hpp"

#include <cmath>

namespace vdb {

namespace {

[[noreturn]] void diverged(const std::string& what, std::uint64_t seed, int iteration) {
  throw DivergenceError(what + " (seed " + std::to_string(seed) + ", iteration " + std::to_string(iteration) + ")");
}

Matrix draw_rows(const Matrix& pool, Eigen::Index n, Rng& rng) {
  Matrix out(n, pool.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = pool.row(static_cast<Eigen::Index>(rng.index(pool.rows())));
  return out;
}

Matrix stack_obs(const std::vector<Trajectory>& batch) {
  Eigen::Index n = 0;
  for (const auto& t : batch) n += t.size();
  Matrix out(n, batch.front().obs.cols());
  Eigen::Index r = 0;
  for (const auto& t : batch) {
    out.middleRows(r, t.size()) = t.obs;
    r += t.size();
  }
  return out;
}

}  // namespace

Vector vail_reward(const VdbDiscriminator& disc, const Matrix& states) {
  const Vector p = disc.prob_mean(states);
  Vector r(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) r(i) = neg_log_clamped(1.0 - p(i)).value;
  return r;
}

void VailConfig::validate() const {
  ppo.validate();
  gp.validate();
  if (!(ic > 0.0)) throw ConfigError("vail.ic must be positive or inf");
  if (!(dual_stepsize > 0.0)) throw ConfigError("vail.dual_stepsize must be positive");
  if (fixed_beta && !(*fixed_beta >= 0.0)) throw ConfigError("vail.fixed_beta must be >= 0");
  if (iterations < 1) throw ConfigError("vail.iterations must be at least 1");
  if (steps_per_iteration < 1) throw ConfigError("vail.steps_per_iteration must be at least 1");
  if (disc_steps < 0) throw ConfigError("vail.disc_steps must be >= 0");
  if (disc_batch < 2 || disc_batch % 2 != 0) throw ConfigError("vail.disc_batch must be a positive even number");
  if (encoder.input_dim != policy.obs_dim) throw ConfigError("vail.encoder input must match the observation size");
}

DiscriminatorLossResult vail_discriminator_step(VdbDiscriminator& disc, Optimizer& opt, DualState& dual,
                                                const Matrix& demo_states, const Matrix& agent_states,
                                                const VailConfig& cfg, Rng& rng) {
  if (demo_states.rows() == 0 || agent_states.rows() == 0) throw std::invalid_argument("vail: empty state pool");
  const Eigen::Index half = cfg.disc_batch / 2;
  const Matrix real = draw_rows(demo_states, half, rng);
  const Matrix fake = draw_rows(agent_states, half, rng);
  std::vector<Matrix> grads, gp_grads;
  const DiscriminatorLossResult res = discriminator_loss(disc, real, fake, dual, rng, &grads);
  GradientPenaltyResult gpr;
  if (cfg.gp.weight > 0.0)
    gpr = gradient_penalty(disc, real, rng.normal_matrix(real.rows(), disc.latent_dim()), cfg.gp, &gp_grads);
  if (!std::isfinite(res.loss + gpr.value)) throw DivergenceError("vail: discriminator loss is not finite");
  const ParamList params = disc.parameters();
  opt.zero_grad();
  accumulate(params, grads);
  if (!gp_grads.empty()) accumulate(params, gp_grads);
  opt.step();
  if (disc.bottleneck() && !cfg.fixed_beta) dual = dual_update(dual, res.batch_kl);
  return res;
}

VailResult vail_train(const Demonstrations& demos, const MazeSpec& spec, const VailConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (demos.transitions() == 0) throw ConfigError("vail: demonstrations are empty");
  const Rng root(cfg.seed);
  Rng init = root.split("vail.init"), upd = root.split("vail.update"), drng = root.split("vail.disc");
  const Rng rollouts = root.split("vail.rollout");
  Rng disc_init = root.split("vail.disc.init");

  VailResult r;
  r.agent = PpoAgent(cfg.policy, cfg.ppo, init);
  VdbDiscriminatorSpec ds;
  ds.encoder = cfg.encoder;
  ds.bottleneck = std::isfinite(cfg.ic);
  r.disc = VdbDiscriminator(ds, disc_init);
  Optimizer opt(cfg.disc_optimizer, r.disc.parameters());
  r.dual.target_kl = ds.bottleneck ? cfg.ic : 1.0;
  r.dual.stepsize = cfg.dual_stepsize;
  if (cfg.fixed_beta) r.dual.beta = *cfg.fixed_beta;

  std::vector<std::string> cols = ppo_metric_columns();
  for (const char* c : {"disc_loss", "batch_kl", "beta", "accuracy", "gp"}) cols.emplace_back(c);
  r.metrics = MetricsLog(cols);

  const Matrix demo_states = demos.states();
  const int episodes_per_iter = cfg.steps_per_iteration / spec.horizon;
  const int tail_from = cfg.iterations - std::max(1, cfg.iterations / 5) + 1;
  double tail_acc = 0.0;
  int tail_n = 0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const VdbDiscriminator frozen = r.disc;
    const RewardFn reward = [&frozen](const Matrix& obs, const Matrix&, const Matrix&, const Vector&) {
      return vail_reward(frozen, obs);
    };
    const auto batch = collect(r.agent.policy(), r.agent.value(), spec, RewardSource::discriminator, reward,
                               cfg.steps_per_iteration, rollouts,
                               static_cast<std::uint64_t>(it - 1) * static_cast<std::uint64_t>(episodes_per_iter));
    PpoStats ps;
    try {
      ps = r.agent.update(batch, upd);
    } catch (const DivergenceError& e) {
      diverged(e.what(), cfg.seed, it);
    }

    const Matrix agent_states = stack_obs(batch);
    double loss = 0.0, kl = 0.0, acc = 0.0;
    for (int k = 0; k < cfg.disc_steps; ++k) {
      try {
        const DiscriminatorLossResult d = vail_discriminator_step(r.disc, opt, r.dual, demo_states, agent_states, cfg, drng);
        loss += d.loss;
        kl += d.batch_kl;
        acc += d.accuracy;
      } catch (const DivergenceError& e) {
        diverged(e.what(), cfg.seed, it);
      }
    }
    const double k = std::max(1, cfg.disc_steps);
    double gp_value = 0.0;
    if (cfg.gp.weight > 0.0) {
      Rng gr = drng.split("gp.log", static_cast<std::uint64_t>(it));
      const Matrix real = draw_rows(demo_states, cfg.disc_batch / 2, gr);
      gp_value = gradient_penalty(r.disc, real, gr.normal_matrix(real.rows(), r.disc.latent_dim()), cfg.gp, nullptr).value;
    }
    std::vector<double> row = ppo_metric_row(batch, spec, ps);
    for (double v : {loss / k, kl / k, r.dual.beta, acc / k, gp_value}) row.push_back(v);
    r.metrics.append(it, row);
    if (it >= tail_from) {
      tail_acc += acc / k;
      ++tail_n;
    }
  }
  r.trailing_accuracy = tail_acc / std::max(1, tail_n);
  r.evaluation = evaluate_return(as_policy_fn(r.agent.policy(), true), spec, 50, root.split("vail.eval"));
  return r;
}

}  // namespace vdb

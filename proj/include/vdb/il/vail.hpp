#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdb/core/discriminator.hpp"
#include "vdb/nn/optimizer.hpp"
#include "vdb/rl/expert.hpp"

namespace vdb {

/// r(s) = −log(1 − D(μ_E(s))) with D clamped to [ε, 1 − ε]; always in (0, −log ε].
Vector vail_reward(const VdbDiscriminator& disc, const Matrix& states);

struct VailConfig {
  PolicySpec policy;
  PpoConfig ppo;
  EncoderSpec encoder{2, {{32, Activation::relu}}, 32, VarianceMode::per_input, InitScheme::uniform_fan_in};
  double ic = 1.0;  ///< I_c; infinity turns the bottleneck off (GAIL baseline)
  double dual_stepsize = 1e-3;
  std::optional<double> fixed_beta;  ///< holds β constant instead of the dual update
  GpConfig gp;
  OptimizerConfig disc_optimizer{OptimizerKind::adam, 1e-3};
  int iterations = 300;
  int steps_per_iteration = 2000;
  int disc_steps = 10;   ///< discriminator updates per policy update
  int disc_batch = 128;  ///< split evenly between demonstration and agent states
  std::uint64_t seed = 0;

  void validate() const;
};

/// One discriminator update on half demonstration, half agent states drawn
/// uniformly from the given pools, followed by the dual update on β.
DiscriminatorLossResult vail_discriminator_step(VdbDiscriminator& disc, Optimizer& opt, DualState& dual,
                                                const Matrix& demo_states, const Matrix& agent_states,
                                                const VailConfig& cfg, Rng& rng);

struct VailResult {
  PpoAgent agent;
  VdbDiscriminator disc;
  DualState dual;
  MetricsLog metrics;       ///< ppo_metric_columns() then disc_loss, batch_kl, beta, accuracy, gp
  ReturnStats evaluation;   ///< deterministic policy, ground-truth reward
  double trailing_accuracy = 0.0;  ///< mean discriminator accuracy over the last 20% of iterations
};

/// Alternates rollouts under the discriminator reward, a PPO update, and
/// `disc_steps` discriminator updates. Throws DivergenceError with the seed
/// and iteration on non-finite losses.
VailResult vail_train(const Demonstrations& demos, const MazeSpec& spec, const VailConfig& cfg);

}  // namespace vdb

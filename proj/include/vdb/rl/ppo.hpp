#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vdb/envs/maze.hpp"
#include "vdb/nn/optimizer.hpp"
#include "vdb/rl/policy.hpp"

namespace vdb {

/// One episode as collected: rows are time steps.
struct Trajectory {
  Matrix obs;           ///< T × obs_dim
  Matrix actions;       ///< T × action_dim, as sampled (unclamped)
  Matrix next_obs;      ///< T × obs_dim
  Vector log_probs;     ///< log π(a|s) under the collecting policy
  Vector rewards;       ///< training rewards (from the chosen source)
  Vector env_rewards;   ///< ground-truth rewards, always logged
  Vector values;        ///< T + 1 entries; the last is the bootstrap value
  bool terminal = true; ///< bootstrap value is 0 when true
  Vec2 final_position = Vec2::Zero();

  Eigen::Index size() const { return obs.rows(); }
};

enum class RewardSource { env, discriminator, recovered };

/// Batched reward for one trajectory, given (s, a, s') and log π(a|s).
using RewardFn =
    std::function<Vector(const Matrix& obs, const Matrix& actions, const Matrix& next_obs, const Vector& log_probs)>;

/// Value baseline V(s).
class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(int obs_dim, const std::vector<LayerSpec>& hidden, Rng& rng, const std::string& name = "value");

  Vector operator()(const Matrix& obs) const { return net_.evaluate<double>(obs).col(0); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  ParamList parameters() { return net_.parameters(); }

 private:
  Mlp net_;
};

/// Rolls out n_steps / horizon whole episodes. Episode e draws from
/// rng.split("rollout", first_episode + e). Training rewards come from the
/// environment or from `reward_fn`; env rewards are always recorded as well.
std::vector<Trajectory> collect(const GaussianPolicy& policy, const ValueNet& value, const MazeSpec& spec,
                                RewardSource source, const RewardFn& reward_fn, int n_steps, const Rng& rng,
                                std::uint64_t first_episode = 0);

struct Advantages {
  Vector advantages;
  Vector returns;  ///< advantages + values, the value-regression targets
};

/// δ_t = r_t + γ V_{t+1} − V_t, A_t = Σ_k (γλ)^k δ_{t+k}. Not normalized.
Advantages gae_advantages(const Trajectory& traj, double gamma, double lambda);

/// Shifts and scales to mean 0, standard deviation 1 (unchanged if constant).
Vector normalize(const Vector& v);

struct PpoConfig {
  double clip = 0.2;
  double policy_stepsize = 3e-4;
  double value_stepsize = 1e-3;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 10;
  int minibatch = 256;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;

  void validate() const;
};

/// Mean clipped surrogate (1/n) Σ min(ρA, clip(ρ, 1 ± ε) A), ρ = exp(log π − log π_old).
/// With `grads` non-null, appends its gradient with respect to the policy parameters.
struct SurrogateResult {
  double value = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;  ///< mean (log π_old − log π)
};
SurrogateResult ppo_surrogate(const GaussianPolicy& policy, const Matrix& obs, const Matrix& actions,
                              const Vector& old_log_probs, const Vector& advantages, double clip,
                              std::vector<Matrix>* grads);

struct PpoStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Policy, value baseline and their optimizers.
class PpoAgent {
 public:
  PpoAgent() = default;
  PpoAgent(const PolicySpec& policy_spec, const PpoConfig& cfg, Rng& rng);
  // The optimizers hold pointers into policy_ and value_, so copies and
  // moves re-point them at the new owner.
  PpoAgent(const PpoAgent& other);
  PpoAgent(PpoAgent&& other) noexcept;
  PpoAgent& operator=(const PpoAgent& other);
  PpoAgent& operator=(PpoAgent&& other) noexcept;

  GaussianPolicy& policy() { return policy_; }
  const GaussianPolicy& policy() const { return policy_; }
  ValueNet& value() { return value_; }
  const ValueNet& value() const { return value_; }
  const PpoConfig& config() const { return cfg_; }

  /// `epochs` passes of shuffled minibatches over the batch: ascent on the
  /// clipped surrogate plus entropy bonus, and regression of V onto the GAE
  /// returns. Throws DivergenceError on non-finite values.
  PpoStats update(const std::vector<Trajectory>& batch, Rng& rng);

 private:
  void rebind();

  PpoConfig cfg_;
  GaussianPolicy policy_;
  ValueNet value_;
  Optimizer policy_opt_;
  Optimizer value_opt_;
};

/// Policy as a PolicyFn for environment rollouts.
PolicyFn as_policy_fn(const GaussianPolicy& policy, bool deterministic);

}  // namespace vdb

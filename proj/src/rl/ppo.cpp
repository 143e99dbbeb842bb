#include "vdb/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vdb {

ValueNet::ValueNet(int obs_dim, const std::vector<LayerSpec>& hidden, Rng& rng, const std::string& name) {
  MlpSpec m;
  m.input_dim = obs_dim;
  m.hidden = hidden;
  m.output_dim = 1;
  net_ = Mlp(m, rng, name);
}

std::vector<Trajectory> collect(const GaussianPolicy& policy, const ValueNet& value, const MazeSpec& spec,
                                RewardSource source, const RewardFn& reward_fn, int n_steps, const Rng& rng,
                                std::uint64_t first_episode) {
  if (n_steps < spec.horizon || n_steps % spec.horizon != 0)
    throw ConfigError("collect: n_steps must be a positive multiple of the horizon (" + std::to_string(spec.horizon) +
                      ")");
  if (source != RewardSource::env && !reward_fn) throw ConfigError("collect: learned reward source needs a reward");
  const int episodes = n_steps / spec.horizon;
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Rng er = rng.split("rollout", first_episode + static_cast<std::uint64_t>(e));
    const int T = spec.horizon;
    Trajectory tr;
    tr.obs.resize(T, 2);
    tr.actions.resize(T, 2);
    tr.next_obs.resize(T, 2);
    tr.env_rewards.resize(T);
    EnvState s = reset(spec, er);
    for (int t = 0; t < T; ++t) {
      const Vec2 a = policy.act(s.position, er);
      const auto [next, res] = step(spec, s, a);
      tr.obs.row(t) << s.position.x(), s.position.y();
      tr.actions.row(t) << a.x(), a.y();
      tr.next_obs.row(t) << res.observation.x(), res.observation.y();
      tr.env_rewards(t) = res.reward;
      s = next;
    }
    tr.final_position = s.position;
    tr.terminal = true;
    tr.log_probs = policy.log_prob(tr.obs, tr.actions);
    tr.rewards = source == RewardSource::env ? tr.env_rewards : reward_fn(tr.obs, tr.actions, tr.next_obs, tr.log_probs);
    require_shape(tr.rewards.size() == T, "collect: reward function returned the wrong length");
    tr.values.resize(T + 1);
    tr.values.head(T) = value(tr.obs);
    tr.values(T) = 0.0;
    out.push_back(std::move(tr));
  }
  return out;
}

Advantages gae_advantages(const Trajectory& traj, double gamma, double lambda) {
  const Eigen::Index T = traj.size();
  require_shape(traj.values.size() == T + 1 && traj.rewards.size() == T, "gae: values need T + 1 entries");
  Advantages a;
  a.advantages.resize(T);
  const double bootstrap = traj.terminal ? 0.0 : traj.values(T);
  double running = 0.0;
  for (Eigen::Index t = T; t-- > 0;) {
    const double next_v = t + 1 == T ? bootstrap : traj.values(t + 1);
    const double delta = traj.rewards(t) + gamma * next_v - traj.values(t);
    running = delta + gamma * lambda * running;
    a.advantages(t) = running;
  }
  a.returns = a.advantages + traj.values.head(T);
  return a;
}

Vector normalize(const Vector& v) {
  if (v.size() == 0) return v;
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  if (!(sd > 0.0)) return Vector::Zero(v.size());
  return (v.array() - mean) / sd;
}

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo.clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda must lie in [0, 1]");
  if (epochs < 1) throw ConfigError("ppo.epochs must be at least 1");
  if (minibatch < 1) throw ConfigError("ppo.minibatch must be at least 1");
  if (!(policy_stepsize > 0.0)) throw ConfigError("ppo.policy_stepsize must be positive");
  if (!(value_stepsize > 0.0)) throw ConfigError("ppo.value_stepsize must be positive");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
}

SurrogateResult ppo_surrogate(const GaussianPolicy& policy, const Matrix& obs, const Matrix& actions,
                              const Vector& old_log_probs, const Vector& advantages, double clip,
                              std::vector<Matrix>* grads) {
  const Eigen::Index n = obs.rows();
  require_shape(old_log_probs.size() == n && advantages.size() == n, "ppo: batch length mismatch");
  if (n == 0) throw std::invalid_argument("ppo: empty batch");
  const Vector lp = policy.log_prob(obs, actions);
  SurrogateResult r;
  Vector w = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(lp(i) - old_log_probs(i));
    const double unclipped = ratio * advantages(i);
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantages(i);
    r.value += std::min(unclipped, clipped) / static_cast<double>(n);
    // The clipped branch is constant in θ; only the unclipped one carries gradient.
    if (unclipped <= clipped) w(i) = unclipped / static_cast<double>(n);
    r.clip_fraction += std::abs(ratio - 1.0) > clip ? 1.0 : 0.0;
    r.approx_kl += (old_log_probs(i) - lp(i)) / static_cast<double>(n);
  }
  r.clip_fraction /= static_cast<double>(n);
  if (grads) policy.log_prob(obs, actions, w, grads);
  return r;
}

PpoAgent::PpoAgent(const PolicySpec& policy_spec, const PpoConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  Rng prng = rng.split("policy.init"), vrng = rng.split("value.init");
  policy_ = GaussianPolicy(policy_spec, prng);
  value_ = ValueNet(policy_spec.obs_dim, policy_spec.hidden, vrng);
  OptimizerConfig po, vo;
  po.stepsize = cfg.policy_stepsize;
  po.max_grad_norm = cfg.max_grad_norm;
  vo.stepsize = cfg.value_stepsize;
  vo.max_grad_norm = cfg.max_grad_norm;
  policy_opt_ = Optimizer(po, policy_.parameters());
  value_opt_ = Optimizer(vo, value_.parameters());
}

PpoAgent::PpoAgent(const PpoAgent& other)
    : cfg_(other.cfg_),
      policy_(other.policy_),
      value_(other.value_),
      policy_opt_(other.policy_opt_),
      value_opt_(other.value_opt_) {
  rebind();
}

PpoAgent::PpoAgent(PpoAgent&& other) noexcept
    : cfg_(other.cfg_),
      policy_(std::move(other.policy_)),
      value_(std::move(other.value_)),
      policy_opt_(std::move(other.policy_opt_)),
      value_opt_(std::move(other.value_opt_)) {
  rebind();
}

PpoAgent& PpoAgent::operator=(const PpoAgent& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    policy_ = other.policy_;
    value_ = other.value_;
    policy_opt_ = other.policy_opt_;
    value_opt_ = other.value_opt_;
    rebind();
  }
  return *this;
}

PpoAgent& PpoAgent::operator=(PpoAgent&& other) noexcept {
  cfg_ = other.cfg_;
  policy_ = std::move(other.policy_);
  value_ = std::move(other.value_);
  policy_opt_ = std::move(other.policy_opt_);
  value_opt_ = std::move(other.value_opt_);
  rebind();
  return *this;
}

void PpoAgent::rebind() {
  if (policy_opt_.parameters().empty()) return;
  policy_opt_.rebind(policy_.parameters());
  value_opt_.rebind(value_.parameters());
}

PpoStats PpoAgent::update(const std::vector<Trajectory>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("ppo: empty batch");
  Eigen::Index total = 0;
  for (const auto& t : batch) total += t.size();
  Matrix obs(total, batch[0].obs.cols()), act(total, batch[0].actions.cols());
  Vector old_lp(total), adv(total), ret(total);
  Eigen::Index row = 0;
  for (const auto& t : batch) {
    const Advantages a = gae_advantages(t, cfg_.gamma, cfg_.lambda);
    obs.middleRows(row, t.size()) = t.obs;
    act.middleRows(row, t.size()) = t.actions;
    old_lp.segment(row, t.size()) = t.log_probs;
    adv.segment(row, t.size()) = a.advantages;
    ret.segment(row, t.size()) = a.returns;
    row += t.size();
  }
  adv = normalize(adv);

  PpoStats stats;
  const ParamList pparams = policy_.parameters();
  const ParamList vparams = value_.parameters();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  int batches = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Eigen::Index start = 0; start < total; start += cfg_.minibatch) {
      const Eigen::Index m = std::min<Eigen::Index>(cfg_.minibatch, total - start);
      Matrix o(m, obs.cols()), a(m, act.cols());
      Vector lp(m), ad(m), rt(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index k = order[static_cast<std::size_t>(start + i)];
        o.row(i) = obs.row(k);
        a.row(i) = act.row(k);
        lp(i) = old_lp(k);
        ad(i) = adv(k);
        rt(i) = ret(k);
      }

      std::vector<Matrix> pg;
      const SurrogateResult s = ppo_surrogate(policy_, o, a, lp, ad, cfg_.clip, &pg);
      if (!std::isfinite(s.value)) throw DivergenceError("ppo: surrogate is not finite");
      // Descent on −(surrogate + c·entropy); ∂entropy/∂log σ = 1.
      policy_opt_.zero_grad();
      accumulate(pparams, pg, -1.0);
      policy_.log_std().grad.array() -= cfg_.entropy_coef;
      policy_opt_.step();

      MlpTrace<double> trace;
      const Vector v = value_.net().evaluate<double>(o, &trace).col(0);
      const Vector err = v - rt;
      const double vloss = 0.5 * err.squaredNorm() / static_cast<double>(m);
      if (!std::isfinite(vloss)) throw DivergenceError("ppo: value loss is not finite");
      std::vector<Matrix> vg;
      value_.net().adjoint<double>(trace, Matrix(err / static_cast<double>(m)), &vg);
      value_opt_.zero_grad();
      accumulate(vparams, vg);
      value_opt_.step();

      stats.surrogate += s.value;
      stats.value_loss += vloss;
      stats.clip_fraction += s.clip_fraction;
      stats.approx_kl += s.approx_kl;
      ++batches;
    }
  }
  stats.surrogate /= batches;
  stats.value_loss /= batches;
  stats.clip_fraction /= batches;
  stats.approx_kl /= batches;
  stats.entropy = policy_.entropy();
  return stats;
}

PolicyFn as_policy_fn(const GaussianPolicy& policy, bool deterministic) {
  return [policy, deterministic](const Vec2& obs, Rng& rng) { return policy.act(obs, rng, deterministic); };
}

}  // namespace vdb

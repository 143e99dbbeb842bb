#include "vdb/il/vairl.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "vdb/nn/checkpoint.hpp"

namespace vdb {

namespace {

[[noreturn]] void diverged(const std::string& what, std::uint64_t seed, int iteration) {
  throw DivergenceError(what + " (seed " + std::to_string(seed) + ", iteration " + std::to_string(iteration) + ")");
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Vector vstack(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

VairlBatch draw_batch(const VairlBatch& pool, Eigen::Index n, Rng& rng) {
  VairlBatch b{Matrix(n, pool.s.cols()), Matrix(n, pool.s_next.cols()), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pool.s.rows())));
    b.s.row(i) = pool.s.row(k);
    b.s_next.row(i) = pool.s_next.row(k);
    b.log_pi(i) = pool.log_pi(k);
  }
  return b;
}

std::string init_name(InitScheme s) { return s == InitScheme::uniform_fan_in ? "uniform_fan_in" : "normal_scaled"; }

InitScheme parse_init(const std::string& s) {
  if (s == "uniform_fan_in") return InitScheme::uniform_fan_in;
  if (s == "normal_scaled") return InitScheme::normal_scaled;
  throw ConfigError("unknown init scheme '" + s + "'");
}

}  // namespace

VairlDiscriminator::VairlDiscriminator(const VairlSpec& spec, Rng& rng, const std::string& name) : spec_(spec) {
  if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) throw ConfigError("vairl.gamma must lie in [0, 1]");
  Rng gr = rng.split("g"), hr = rng.split("h");
  g_enc_ = Encoder(spec.encoder, gr, name + ".g");
  g_head_ = Linear(name + ".g.head", spec.encoder.latent_dim, 1, spec.encoder.init, gr);
  h_enc_ = Encoder(spec.encoder, hr, name + ".h");
  h_head_ = Linear(name + ".h.head", spec.encoder.latent_dim, 1, spec.encoder.init, hr);
}

ParamList VairlDiscriminator::parameters() {
  ParamList p = g_enc_.parameters();
  append(p, g_head_.parameters());
  append(p, h_enc_.parameters());
  append(p, h_head_.parameters());
  return p;
}

ConstParamList VairlDiscriminator::parameters() const {
  ConstParamList p = g_enc_.parameters();
  for (const Tensor* t : g_head_.parameters()) p.push_back(t);
  for (const Tensor* t : h_enc_.parameters()) p.push_back(t);
  for (const Tensor* t : h_head_.parameters()) p.push_back(t);
  return p;
}

VairlNoise draw_vairl_noise(Eigen::Index n, int latent_dim, Rng& rng) {
  VairlNoise z;
  z.g = rng.normal_matrix(n, latent_dim);
  z.h = rng.normal_matrix(n, latent_dim);
  z.h_next = rng.normal_matrix(n, latent_dim);
  return z;
}

Vector vairl_f(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next, bool sample, Rng& rng) {
  if (!sample) return disc.f<double>(s, s_next, nullptr, nullptr);
  const VairlNoise z = draw_vairl_noise(s.rows(), disc.latent_dim(), rng);
  return disc.f<double>(s, s_next, &z, nullptr);
}

double airl_prob(double f, double log_pi) { return stable_sigmoid(f - log_pi); }

Vector vairl_disc_prob(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next, const Vector& log_pi) {
  const Vector f = disc.f<double>(s, s_next, nullptr, nullptr);
  require_shape(log_pi.size() == f.size(), "vairl: log_pi length mismatch");
  Vector d(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) d(i) = airl_prob(f(i), log_pi(i));
  return d;
}

VairlLossResult vairl_loss(const VairlDiscriminator& disc, const VairlBatch& expert, const VairlBatch& agent,
                           const DualState& dual, const VairlNoise& noise, std::vector<Matrix>* grads) {
  const Eigen::Index ne = expert.s.rows(), na = agent.s.rows(), n = ne + na;
  if (ne == 0 || na == 0) throw std::invalid_argument("vairl: empty batch");
  require_shape(expert.log_pi.size() == ne && agent.log_pi.size() == na, "vairl: log_pi length mismatch");
  const Matrix s = vstack(expert.s, agent.s), s_next = vstack(expert.s_next, agent.s_next);
  const Vector lp = vstack(expert.log_pi, agent.log_pi);

  VairlTrace<double> tr;
  const Vector f = disc.f<double>(s, s_next, &noise, &tr);
  VairlLossResult r;
  Vector d_f(n);
  int correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = f(i) - lp(i);
    if (i < ne) {
      r.bce_expert += softplus(-u) / static_cast<double>(ne);
      d_f(i) = -stable_sigmoid(-u) / static_cast<double>(ne);
      correct += u > 0.0 ? 1 : 0;
    } else {
      r.bce_agent += softplus(u) / static_cast<double>(na);
      d_f(i) = stable_sigmoid(u) / static_cast<double>(na);
      correct += u < 0.0 ? 1 : 0;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  r.loss = r.bce_expert + r.bce_agent;
  double kl_weight = 0.0;
  if (disc.bottleneck()) {
    r.kl_g = kl_per_row<double>(tr.eg.mean, tr.eg.log_var).mean();
    r.kl_h = kl_per_row<double>(tr.eh.mean, tr.eh.log_var).mean();
    r.kl_h_next = kl_per_row<double>(tr.eh_next.mean, tr.eh_next.log_var).mean();
    r.batch_kl = r.kl_g + r.kl_h + r.kl_h_next;
    r.loss += dual.beta * (r.batch_kl - dual.target_kl);
    kl_weight = dual.beta / static_cast<double>(n);
  }
  if (grads) disc.f_adjoint<double>(tr, d_f, grads, kl_weight);
  return r;
}

GradientPenaltyResult vairl_gradient_penalty(const VairlDiscriminator& disc, const Matrix& s, const Matrix& s_next,
                                             const VairlNoise& noise, const GpConfig& gp, std::vector<Matrix>* grads) {
  gp.validate();
  GradientPenaltyResult r;
  if (gp.weight == 0.0) return r;
  const Eigen::Index n = s.rows();
  if (n == 0) throw std::invalid_argument("vairl gradient penalty: empty batch");
  VairlTrace<double> tr;
  disc.f<double>(s, s_next, &noise, &tr);
  const auto [gs, gs_next] = disc.f_adjoint<double>(tr, Vector::Ones(n), nullptr);
  const double dn = static_cast<double>(n);
  r.value = gp.weight * 0.5 * (gs.rowwise().squaredNorm().sum() + gs_next.rowwise().squaredNorm().sum()) / dn;
  r.mean_grad_norm = (gs.rowwise().squaredNorm() + gs_next.rowwise().squaredNorm()).cwiseSqrt().sum() / dn;
  if (grads) {
    // Same forward-over-reverse construction as the single-input penalty.
    const MatrixX<Dual> sd = make_dual(s, gs), sd_next = make_dual(s_next, gs_next);
    VairlTrace<Dual> dtr;
    disc.f<Dual>(sd, sd_next, &noise, &dtr);
    const VectorX<Dual> upstream = VectorX<Dual>::Constant(n, Dual(gp.weight / dn));
    std::vector<MatrixX<Dual>> dg;
    disc.f_adjoint<Dual>(dtr, upstream, &dg);
    for (const auto& m : dg) grads->push_back(tangent_part(m));
  }
  return r;
}

RecoveredReward::RecoveredReward(const EncoderSpec& spec, Rng& rng) {
  encoder_ = Encoder(spec, rng, "reward.g");
  head_ = Linear("reward.g.head", spec.latent_dim, 1, spec.init, rng);
}

RecoveredReward::RecoveredReward(const VairlDiscriminator& disc) {
  Rng unused(0);
  *this = RecoveredReward(disc.g_encoder().spec(), unused);
  const ConstParamList src = disc.parameters();
  const ParamList dst = parameters();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
}

ParamList RecoveredReward::parameters() {
  ParamList p = encoder_.parameters();
  append(p, head_.parameters());
  return p;
}

ConstParamList RecoveredReward::parameters() const {
  ConstParamList p = encoder_.parameters();
  for (const Tensor* t : head_.parameters()) p.push_back(t);
  return p;
}

Vector RecoveredReward::operator()(const Matrix& states) const {
  const EncoderOutput e = encoder_.evaluate<double>(states);
  return head_.evaluate<double>(e.mean).col(0);
}

void RecoveredReward::save(std::ostream& os) const {
  const EncoderSpec& s = encoder_.spec();
  os << "vdb-reward 1\n";
  os << "encoder " << s.input_dim << ' ' << s.latent_dim << ' '
     << (s.variance == VarianceMode::per_input ? "per_input" : "shared") << ' ' << init_name(s.init) << ' '
     << s.hidden.size();
  for (const LayerSpec& l : s.hidden) os << ' ' << l.width << ':' << to_string(l.activation);
  os << '\n';
  save_checkpoint(os, parameters());
}

void RecoveredReward::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  save(os);
}

RecoveredReward RecoveredReward::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "vdb-reward 1") throw ConfigError("reward: missing or unsupported version");
  if (!std::getline(is, line)) throw ConfigError("reward: missing encoder layout");
  std::istringstream ls(line);
  std::string tag, variance, init;
  EncoderSpec spec;
  std::size_t layers = 0;
  if (!(ls >> tag >> spec.input_dim >> spec.latent_dim >> variance >> init >> layers) || tag != "encoder")
    throw ConfigError("reward: malformed encoder layout");
  if (variance == "per_input") {
    spec.variance = VarianceMode::per_input;
  } else if (variance == "shared") {
    spec.variance = VarianceMode::shared;
  } else {
    throw ConfigError("reward: unknown variance mode '" + variance + "'");
  }
  spec.init = parse_init(init);
  spec.hidden.clear();
  for (std::size_t i = 0; i < layers; ++i) {
    std::string item;
    if (!(ls >> item)) throw ConfigError("reward: missing hidden layer");
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("reward: malformed hidden layer '" + item + "'");
    spec.hidden.push_back({std::stoi(item.substr(0, colon)), parse_activation(item.substr(colon + 1))});
  }
  Rng unused(0);
  RecoveredReward r(spec, unused);
  load_checkpoint(is, r.parameters());
  return r;
}

RecoveredReward RecoveredReward::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read reward checkpoint " + path.string());
  return load(is);
}

void write_reward_grid_csv(const RecoveredReward& reward, const MazeSpec& spec, int resolution, std::ostream& os) {
  if (resolution < 2) throw ConfigError("reward grid resolution must be at least 2");
  const Vector xs = Vector::LinSpaced(resolution, spec.x_min, spec.x_max);
  const Vector ys = Vector::LinSpaced(resolution, spec.y_min, spec.y_max);
  Matrix pts(static_cast<Eigen::Index>(resolution) * resolution, 2);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) pts.row(i * resolution + j) << xs(j), ys(i);
  const Vector v = reward(pts);
  os << "x,y,value\n";
  char buf[96];
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", pts(k, 0), pts(k, 1), v(k));
    os << buf;
  }
}

BetaMode parse_beta_mode(const std::string& name) {
  if (name == "adaptive") return BetaMode::adaptive;
  if (name == "zero" || name == "fixed-zero" || name == "fixed_zero") return BetaMode::fixed_zero;
  throw ConfigError("beta mode must be 'adaptive' or 'zero', got '" + name + "'");
}

std::string to_string(BetaMode mode) { return mode == BetaMode::adaptive ? "adaptive" : "zero"; }

void VairlConfig::validate() const {
  ppo.validate();
  gp.validate();
  if (!(ic > 0.0)) throw ConfigError("vairl.ic must be positive");
  if (!(dual_stepsize > 0.0)) throw ConfigError("vairl.dual_stepsize must be positive");
  if (iterations < 1) throw ConfigError("vairl.iterations must be at least 1");
  if (steps_per_iteration < 1) throw ConfigError("vairl.steps_per_iteration must be at least 1");
  if (disc_steps < 0) throw ConfigError("vairl.disc_steps must be >= 0");
  if (disc_batch < 1) throw ConfigError("vairl.disc_batch must be at least 1");
  if (disc.encoder.input_dim != policy.obs_dim) throw ConfigError("vairl.encoder input must match the observation size");
}

VairlResult vairl_train(const Demonstrations& demos, const MazeSpec& spec, const VairlConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (demos.transitions() == 0) throw ConfigError("vairl: demonstrations are empty");
  const Rng root(cfg.seed);
  Rng init = root.split("vairl.init"), upd = root.split("vairl.update"), drng = root.split("vairl.disc");
  Rng disc_init = root.split("vairl.disc.init");
  const Rng rollouts = root.split("vairl.rollout");

  VairlResult r;
  r.agent = PpoAgent(cfg.policy, cfg.ppo, init);
  r.disc = VairlDiscriminator(cfg.disc, disc_init);
  const ParamList params = r.disc.parameters();
  Optimizer opt(cfg.disc_optimizer, params);
  r.dual.target_kl = cfg.ic;
  r.dual.stepsize = cfg.dual_stepsize;
  const bool adapt = cfg.disc.bottleneck && cfg.beta_mode == BetaMode::adaptive;

  std::vector<std::string> cols = ppo_metric_columns();
  for (const char* c : {"disc_loss", "batch_kl", "kl_g", "kl_h", "kl_h_next", "beta", "accuracy", "gp"})
    cols.emplace_back(c);
  r.metrics = MetricsLog(cols);

  VairlBatch expert{demos.states(), demos.next_states(), Vector()};
  const Matrix expert_actions = demos.actions();
  const int episodes_per_iter = cfg.steps_per_iteration / spec.horizon;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const VairlDiscriminator frozen = r.disc;
    const RewardFn reward = [&frozen](const Matrix& obs, const Matrix&, const Matrix& next, const Vector&) {
      return Vector(frozen.f<double>(obs, next, nullptr, nullptr));
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

    // log π under the updated policy, for both classes.
    Eigen::Index total = 0;
    for (const auto& t : batch) total += t.size();
    VairlBatch agent{Matrix(total, 2), Matrix(total, 2), Vector(total)};
    Matrix agent_actions(total, 2);
    Eigen::Index row = 0;
    for (const auto& t : batch) {
      agent.s.middleRows(row, t.size()) = t.obs;
      agent.s_next.middleRows(row, t.size()) = t.next_obs;
      agent_actions.middleRows(row, t.size()) = t.actions;
      row += t.size();
    }
    agent.log_pi = r.agent.policy().log_prob(agent.s, agent_actions);
    expert.log_pi = r.agent.policy().log_prob(expert.s, expert_actions);

    VairlLossResult sum;
    double gp_sum = 0.0;
    for (int k = 0; k < cfg.disc_steps; ++k) {
      const VairlBatch e = draw_batch(expert, cfg.disc_batch, drng);
      const VairlBatch a = draw_batch(agent, cfg.disc_batch, drng);
      const VairlNoise z = draw_vairl_noise(2 * cfg.disc_batch, r.disc.latent_dim(), drng);
      std::vector<Matrix> grads, gp_grads;
      const VairlLossResult l = vairl_loss(r.disc, e, a, r.dual, z, &grads);
      GradientPenaltyResult g;
      if (cfg.gp.weight > 0.0)
        g = vairl_gradient_penalty(r.disc, e.s, e.s_next, draw_vairl_noise(e.s.rows(), r.disc.latent_dim(), drng),
                                   cfg.gp, &gp_grads);
      if (!std::isfinite(l.loss + g.value)) diverged("vairl: discriminator loss is not finite", cfg.seed, it);
      try {
        opt.zero_grad();
        accumulate(params, grads);
        if (!gp_grads.empty()) accumulate(params, gp_grads);
        opt.step();
      } catch (const DivergenceError& err) {
        diverged(err.what(), cfg.seed, it);
      }
      if (adapt) r.dual = dual_update(r.dual, l.batch_kl);
      sum.loss += l.loss;
      sum.batch_kl += l.batch_kl;
      sum.kl_g += l.kl_g;
      sum.kl_h += l.kl_h;
      sum.kl_h_next += l.kl_h_next;
      sum.accuracy += l.accuracy;
      gp_sum += g.value;
    }
    const double k = std::max(1, cfg.disc_steps);
    std::vector<double> m = ppo_metric_row(batch, spec, ps);
    for (double v : {sum.loss / k, sum.batch_kl / k, sum.kl_g / k, sum.kl_h / k, sum.kl_h_next / k, r.dual.beta,
                     sum.accuracy / k, gp_sum / k})
      m.push_back(v);
    r.metrics.append(it, m);
  }
  r.reward = RecoveredReward(r.disc);
  r.evaluation = evaluate_return(as_policy_fn(r.agent.policy(), true), spec, 50, root.split("vairl.eval"));
  return r;
}

void TransferConfig::validate() const {
  ppo.validate();
  if (iterations < 1) throw ConfigError("transfer.iterations must be at least 1");
  if (steps_per_iteration < 1) throw ConfigError("transfer.steps_per_iteration must be at least 1");
  if (eval_episodes < 1) throw ConfigError("transfer.eval_episodes must be at least 1");
}

TransferResult transfer(const RecoveredReward& reward, const MazeSpec& test_spec, const TransferConfig& cfg) {
  cfg.validate();
  test_spec.validate();
  const Rng root(cfg.seed);
  Rng init = root.split("transfer.init"), upd = root.split("transfer.update");
  const Rng rollouts = root.split("transfer.rollout");
  TransferResult r;
  r.agent = PpoAgent(cfg.policy, cfg.ppo, init);
  r.metrics = MetricsLog(ppo_metric_columns());
  const RewardFn fn = [&reward](const Matrix&, const Matrix&, const Matrix& next, const Vector&) {
    return reward(next);
  };
  const int episodes_per_iter = cfg.steps_per_iteration / test_spec.horizon;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const auto batch = collect(r.agent.policy(), r.agent.value(), test_spec, RewardSource::recovered, fn,
                               cfg.steps_per_iteration, rollouts,
                               static_cast<std::uint64_t>(it - 1) * static_cast<std::uint64_t>(episodes_per_iter));
    const PpoStats s = r.agent.update(batch, upd);
    r.metrics.append(it, ppo_metric_row(batch, test_spec, s));
  }
  r.evaluation =
      evaluate_return(as_policy_fn(r.agent.policy(), true), test_spec, cfg.eval_episodes, root.split("transfer.eval"));
  return r;
}

}  // namespace vdb

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vdb/rl/expert.hpp"

using namespace vdb;

namespace {

GaussianPolicy small_policy(std::uint64_t seed) {
  Rng rng(seed);
  PolicySpec spec;
  spec.hidden = {{6, Activation::tanh}};
  spec.initial_log_std = -0.3;
  return GaussianPolicy(spec, rng);
}

Trajectory random_trajectory(Rng& rng, int T) {
  Trajectory t;
  t.rewards = Vector(T);
  t.values = Vector(T + 1);
  for (int i = 0; i < T; ++i) t.rewards(i) = rng.normal();
  for (int i = 0; i <= T; ++i) t.values(i) = rng.normal();
  t.obs = Matrix::Zero(T, 2);
  return t;
}

// Direct O(T²) sum of discounted TD errors.
Vector gae_oracle(const Trajectory& t, double gamma, double lambda) {
  const Eigen::Index T = t.rewards.size();
  Vector a(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    double s = 0.0;
    for (Eigen::Index k = i; k < T; ++k) {
      const double next = k + 1 == T ? (t.terminal ? 0.0 : t.values(T)) : t.values(k + 1);
      const double delta = t.rewards(k) + gamma * next - t.values(k);
      s += std::pow(gamma * lambda, static_cast<double>(k - i)) * delta;
    }
    a(i) = s;
  }
  return a;
}

double flat_get(GaussianPolicy& p, std::size_t k) {
  for (Tensor* t : p.parameters()) {
    if (k < static_cast<std::size_t>(t->value.size())) return t->value.data()[k];
    k -= static_cast<std::size_t>(t->value.size());
  }
  return 0.0;
}

void flat_set(GaussianPolicy& p, std::size_t k, double v) {
  for (Tensor* t : p.parameters()) {
    if (k < static_cast<std::size_t>(t->value.size())) {
      t->value.data()[k] = v;
      return;
    }
    k -= static_cast<std::size_t>(t->value.size());
  }
}

std::vector<double> flatten(const std::vector<Matrix>& g) {
  std::vector<double> out;
  for (const Matrix& m : g) out.insert(out.end(), m.data(), m.data() + m.size());
  return out;
}

std::size_t parameter_count(GaussianPolicy& p) {
  std::size_t n = 0;
  for (Tensor* t : p.parameters()) n += static_cast<std::size_t>(t->value.size());
  return n;
}

}  // namespace

TEST_CASE("gae with lambda 0 is the one-step TD error") {
  Rng rng(1);
  const Trajectory t = random_trajectory(rng, 20);
  const Advantages a = gae_advantages(t, 0.9, 0.0);
  for (int i = 0; i < 20; ++i) {
    const double next = i + 1 == 20 ? 0.0 : t.values(i + 1);
    CHECK(a.advantages(i) == doctest::Approx(t.rewards(i) + 0.9 * next - t.values(i)).epsilon(1e-12));
  }
}

TEST_CASE("gae with lambda 1 and zero values is the discounted return") {
  Rng rng(2);
  Trajectory t = random_trajectory(rng, 30);
  t.values.setZero();
  const Advantages a = gae_advantages(t, 0.95, 1.0);
  double g = 0.0;
  for (int i = 29; i >= 0; --i) {
    g = t.rewards(i) + 0.95 * g;
    CHECK(a.advantages(i) == doctest::Approx(g).epsilon(1e-12));
    CHECK(a.returns(i) == doctest::Approx(g).epsilon(1e-12));
  }
}

TEST_CASE("gae matches the direct sum, with and without bootstrap") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory t = random_trajectory(rng, 1 + static_cast<int>(rng.index(40)));
    t.terminal = trial % 2 == 0;
    const double gamma = rng.uniform(0.5, 1.0), lambda = rng.uniform(0.0, 1.0);
    const Advantages a = gae_advantages(t, gamma, lambda);
    const Vector ref = gae_oracle(t, gamma, lambda);
    CHECK((a.advantages - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.returns - a.advantages - t.values.head(t.rewards.size())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("normalize gives zero mean and unit deviation") {
  Rng rng(4);
  Vector v(500);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 3.0 + 7.0 * rng.normal();
  const Vector n = normalize(v);
  CHECK(std::abs(n.mean()) < 1e-10);
  CHECK(std::abs(std::sqrt(n.array().square().mean()) - 1.0) < 1e-10);
  CHECK(normalize(Vector::Constant(5, 2.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy log-probability and entropy match the Gaussian formulas") {
  GaussianPolicy p = small_policy(5);
  Rng rng(6);
  const Matrix obs = rng.normal_matrix(10, 2), act = rng.normal_matrix(10, 2);
  const Vector lp = p.log_prob(obs, act);
  const Matrix mu = p.mean(obs);
  const double sd = std::exp(-0.3);
  for (int i = 0; i < 10; ++i) {
    double ref = 0.0;
    for (int d = 0; d < 2; ++d) {
      const double z = (act(i, d) - mu(i, d)) / sd;
      ref += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
    }
    CHECK(lp(i) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK(p.entropy() == doctest::Approx(2.0 * (0.5 * std::log(2.0 * M_PI * M_E) + std::log(sd))).epsilon(1e-12));
}

TEST_CASE("policy log-probability gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GaussianPolicy p = small_policy(seed);
    Rng rng(100 + seed);
    const Matrix obs = rng.normal_matrix(7, 2), act = rng.normal_matrix(7, 2);
    Vector w(7);
    for (int i = 0; i < 7; ++i) w(i) = rng.normal();
    std::vector<Matrix> g;
    p.log_prob(obs, act, w, &g);
    const std::vector<double> flat = flatten(g);
    REQUIRE(flat.size() == parameter_count(p));
    const double h = 1e-6;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      const double x = flat_get(p, k);
      flat_set(p, k, x + h);
      const double up = w.dot(p.log_prob(obs, act));
      flat_set(p, k, x - h);
      const double dn = w.dot(p.log_prob(obs, act));
      flat_set(p, k, x);
      const double fd = (up - dn) / (2 * h);
      CHECK(std::abs(fd - flat[k]) <= 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("ppo surrogate gradient matches finite differences, zero on clipped samples") {
  int clipped_seen = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GaussianPolicy p = small_policy(seed);
    Rng rng(200 + seed);
    const Matrix obs = rng.normal_matrix(16, 2), act = rng.normal_matrix(16, 2);
    // Old log-probs perturbed so that some ratios land outside the clip range.
    Vector old = p.log_prob(obs, act);
    Vector adv(16);
    for (int i = 0; i < 16; ++i) {
      old(i) += 0.4 * rng.normal();
      adv(i) = rng.normal();
    }
    std::vector<Matrix> g;
    const SurrogateResult s = ppo_surrogate(p, obs, act, old, adv, 0.2, &g);
    clipped_seen += s.clip_fraction > 0.0 ? 1 : 0;

    // Unclipped objective bounds the clipped one from above.
    const Vector lp = p.log_prob(obs, act);
    const double unclipped = ((lp - old).array().exp() * adv.array()).mean();
    CHECK(s.value <= unclipped + 1e-12);

    const std::vector<double> flat = flatten(g);
    const double h = 1e-6;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      const double x = flat_get(p, k);
      flat_set(p, k, x + h);
      const double up = ppo_surrogate(p, obs, act, old, adv, 0.2, nullptr).value;
      flat_set(p, k, x - h);
      const double dn = ppo_surrogate(p, obs, act, old, adv, 0.2, nullptr).value;
      flat_set(p, k, x);
      const double fd = (up - dn) / (2 * h);
      CHECK(std::abs(fd - flat[k]) <= 1e-5 * (1.0 + std::abs(fd)));
    }
  }
  CHECK(clipped_seen > 10);
}

TEST_CASE("surrogate has no gradient when every sample is clipped") {
  GaussianPolicy p = small_policy(7);
  Rng rng(8);
  const Matrix obs = rng.normal_matrix(5, 2), act = rng.normal_matrix(5, 2);
  // Ratio e^1 > 1.2 with positive advantage: the clipped branch is the minimum.
  const Vector old = p.log_prob(obs, act).array() - 1.0;
  std::vector<Matrix> g;
  const SurrogateResult s = ppo_surrogate(p, obs, act, old, Vector::Ones(5), 0.2, &g);
  CHECK(s.value == doctest::Approx(1.2));
  CHECK(s.clip_fraction == 1.0);
  for (double v : flatten(g)) CHECK(v == 0.0);
}

TEST_CASE("zero advantages leave the policy unchanged when entropy is off") {
  Rng rng(9);
  PpoConfig cfg;
  cfg.minibatch = 50;
  cfg.epochs = 2;
  PpoAgent agent(PolicySpec{}, cfg, rng);
  Trajectory t;
  t.obs = rng.normal_matrix(100, 2);
  t.actions = rng.normal_matrix(100, 2);
  t.next_obs = t.obs;
  t.log_probs = agent.policy().log_prob(t.obs, t.actions);
  // V = r everywhere and λ = 0 would still give nonzero δ through γV', so use
  // constant rewards: normalize() maps constant advantages to zero.
  t.values = Vector::Zero(101);
  t.rewards = Vector::Zero(100);
  const GaussianPolicy before = agent.policy();
  Rng urng(10);
  agent.update({t}, urng);
  const auto a = before.parameters();
  const auto b = agent.policy().parameters();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK((a[k]->value - b[k]->value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a positive advantage raises the log-probability of its action") {
  Rng rng(11);
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.minibatch = 2;
  PpoAgent agent(PolicySpec{}, cfg, rng);
  Trajectory t;
  t.obs = Matrix::Zero(2, 2);
  t.obs(1, 0) = 0.5;
  t.actions = Matrix(2, 2);
  t.actions << 0.8, -0.3, -0.5, 0.1;
  t.next_obs = t.obs;
  t.log_probs = agent.policy().log_prob(t.obs, t.actions);
  t.rewards = Vector(2);
  t.rewards << 1.0, -1.0;
  t.values = Vector::Zero(3);
  const Vector before = t.log_probs;
  Rng urng(12);
  agent.update({t}, urng);
  const Vector after = agent.policy().log_prob(t.obs, t.actions);
  CHECK(after(0) > before(0));
}

TEST_CASE("collect records exact step counts and environment rewards") {
  Rng rng(13);
  PpoAgent agent(PolicySpec{}, PpoConfig{}, rng);
  const MazeSpec spec = c_maze();
  const auto batch = collect(agent.policy(), agent.value(), spec, RewardSource::env, nullptr, 3 * spec.horizon, Rng(14));
  REQUIRE(batch.size() == 3);
  for (const Trajectory& t : batch) {
    CHECK(t.size() == spec.horizon);
    CHECK(t.values.size() == spec.horizon + 1);
    CHECK((t.rewards - t.env_rewards).cwiseAbs().maxCoeff() == 0.0);
    EnvState s;
    s.position = Vec2(t.obs(0, 0), t.obs(0, 1));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const auto [next, res] = step(spec, s, Vec2(t.actions(i, 0), t.actions(i, 1)));
      CHECK(res.reward == t.env_rewards(i));
      CHECK(res.observation.x() == t.next_obs(i, 0));
      s = next;
    }
  }
  // Same stream index gives the same episode regardless of batch position.
  const auto again = collect(agent.policy(), agent.value(), spec, RewardSource::env, nullptr, spec.horizon, Rng(14), 2);
  CHECK((again[0].actions - batch[2].actions).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(collect(agent.policy(), agent.value(), spec, RewardSource::env, nullptr, 150, Rng(14)), ConfigError);
}

TEST_CASE("a learned reward replaces the training reward only") {
  Rng rng(15);
  PpoAgent agent(PolicySpec{}, PpoConfig{}, rng);
  const MazeSpec spec = c_maze();
  // An uninformative discriminator D = 1/2 gives −log(1 − D) = log 2.
  const RewardFn half = [](const Matrix& o, const Matrix&, const Matrix&, const Vector&) {
    return Vector(Vector::Constant(o.rows(), std::log(2.0)));
  };
  const auto batch = collect(agent.policy(), agent.value(), spec, RewardSource::discriminator, half, spec.horizon, Rng(16));
  CHECK(batch[0].rewards.cwiseAbs().minCoeff() == doctest::Approx(std::log(2.0)));
  CHECK(batch[0].env_rewards.maxCoeff() < 0.0);
  CHECK_THROWS_AS(collect(agent.policy(), agent.value(), spec, RewardSource::discriminator, nullptr, spec.horizon, Rng(16)),
                  ConfigError);
}

TEST_CASE("copied agents keep training their own parameters") {
  Rng rng(17);
  PpoConfig cfg;
  cfg.entropy_coef = 0.1;
  cfg.epochs = 1;
  PpoAgent original(PolicySpec{}, cfg, rng);
  PpoAgent copy = original;
  const MazeSpec spec = open_box();
  const auto batch = collect(copy.policy(), copy.value(), spec, RewardSource::env, nullptr, spec.horizon, Rng(18));
  const double before = copy.policy().log_std().value(0, 0);
  Rng urng(19);
  copy.update(batch, urng);
  CHECK(copy.policy().log_std().value(0, 0) != before);
  CHECK(original.policy().log_std().value(0, 0) == before);
}

TEST_CASE("ppo expert solves the C-maze and its demonstrations replay exactly") {
  ExpertConfig cfg;
  cfg.demo_episodes = 10;
  cfg.eval_episodes = 20;
  cfg.seed = 3;
  const MazeSpec spec = c_maze();
  const ExpertResult r = train_expert(spec, cfg);
  CHECK_MESSAGE(r.succeeded, r.failure);
  const PolicyFn zero = [](const Vec2&, Rng&) { return Vec2(0.0, 0.0); };
  const ReturnStats z = evaluate_return(zero, spec, 20, Rng(1));
  // Returns are negative; at least five times better means a fifth of the cost.
  CHECK(r.evaluation.mean >= z.mean / 5.0);
  CHECK(r.metrics.size() == static_cast<std::size_t>(cfg.iterations));

  std::stringstream ss;
  write_demonstrations(r.demos, ss);
  const Demonstrations back = read_demonstrations(ss);
  REQUIRE(back.episodes.size() == r.demos.episodes.size());
  CHECK(back.transitions() == r.demos.transitions());
  CHECK((back.states() - r.demos.states()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(replay_matches(back, spec));
  Demonstrations tampered = back;
  tampered.episodes[0].actions[5].x() += 1e-3;
  CHECK_FALSE(replay_matches(tampered, spec));

  ExpertConfig short_cfg = cfg;
  short_cfg.iterations = 3;
  const ExpertResult a = train_expert(spec, short_cfg), b = train_expert(spec, short_cfg);
  CHECK((a.demos.states() - b.demos.states()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.evaluation.mean == b.evaluation.mean);
}

TEST_CASE("demonstration reader rejects malformed files") {
  std::istringstream bad_version("# vdb-demos 2\n");
  CHECK_THROWS_AS(read_demonstrations(bad_version), ConfigError);
  std::istringstream bad_row("# vdb-demos 1\nepisode,t,x,y,ax,ay,nx,ny,r\n0,0,1,2\n");
  CHECK_THROWS_AS(read_demonstrations(bad_row), ConfigError);
}

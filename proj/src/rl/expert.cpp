#include "vdb/rl/expert.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace vdb {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix stack(const std::vector<Episode>& eps, std::vector<Vec2> Episode::*field) {
  std::size_t n = 0;
  for (const auto& e : eps) n += (e.*field).size();
  Matrix m(static_cast<Eigen::Index>(n), 2);
  Eigen::Index r = 0;
  for (const auto& e : eps)
    for (const Vec2& v : e.*field) m.row(r++) << v.x(), v.y();
  return m;
}

}  // namespace

std::size_t Demonstrations::transitions() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.rewards.size();
  return n;
}

Matrix Demonstrations::states() const { return stack(episodes, &Episode::observations); }
Matrix Demonstrations::next_states() const { return stack(episodes, &Episode::next_observations); }
Matrix Demonstrations::actions() const { return stack(episodes, &Episode::actions); }

void write_demonstrations(const Demonstrations& demos, std::ostream& os) {
  os << "# vdb-demos 1\n";
  os << "episode,t,x,y,ax,ay,nx,ny,r\n";
  for (std::size_t e = 0; e < demos.episodes.size(); ++e) {
    const Episode& ep = demos.episodes[e];
    for (std::size_t t = 0; t < ep.rewards.size(); ++t)
      os << e << ',' << t << ',' << fmt(ep.observations[t].x()) << ',' << fmt(ep.observations[t].y()) << ','
         << fmt(ep.actions[t].x()) << ',' << fmt(ep.actions[t].y()) << ',' << fmt(ep.next_observations[t].x()) << ','
         << fmt(ep.next_observations[t].y()) << ',' << fmt(ep.rewards[t]) << '\n';
  }
}

Demonstrations read_demonstrations(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# vdb-demos 1") throw ConfigError("demos: missing or unsupported version");
  if (!std::getline(is, line) || line != "episode,t,x,y,ax,ay,nx,ny,r") throw ConfigError("demos: bad header");
  Demonstrations d;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 9) throw ConfigError("demos: malformed row '" + line + "'");
    const auto e = static_cast<std::size_t>(v[0]);
    if (e == d.episodes.size()) d.episodes.emplace_back();
    if (e + 1 != d.episodes.size()) throw ConfigError("demos: episodes out of order");
    Episode& ep = d.episodes.back();
    ep.observations.emplace_back(v[2], v[3]);
    ep.actions.emplace_back(v[4], v[5]);
    ep.next_observations.emplace_back(v[6], v[7]);
    ep.rewards.push_back(v[8]);
    ep.final_position = ep.next_observations.back();
  }
  return d;
}

bool replay_matches(const Demonstrations& demos, const MazeSpec& spec) {
  for (const Episode& ep : demos.episodes) {
    if (ep.observations.empty()) continue;
    EnvState s;
    s.position = ep.observations.front();
    for (std::size_t t = 0; t < ep.actions.size(); ++t) {
      if (s.position != ep.observations[t]) return false;
      const auto [next, res] = step(spec, s, ep.actions[t]);
      if (res.observation != ep.next_observations[t] || res.reward != ep.rewards[t]) return false;
      s = next;
    }
  }
  return true;
}

void ExpertConfig::validate() const {
  ppo.validate();
  if (iterations < 1) throw ConfigError("expert.iterations must be at least 1");
  if (steps_per_iteration < 1) throw ConfigError("expert.steps_per_iteration must be at least 1");
  if (eval_episodes < 1) throw ConfigError("expert.eval_episodes must be at least 1");
  if (demo_episodes < 1) throw ConfigError("expert.demo_episodes must be at least 1");
}

std::vector<std::string> ppo_metric_columns() {
  return {"env_return", "train_return", "goal_fraction", "surrogate", "value_loss", "entropy", "clip_fraction",
          "approx_kl"};
}

std::vector<double> ppo_metric_row(const std::vector<Trajectory>& batch, const MazeSpec& spec, const PpoStats& s) {
  double env_ret = 0.0, train_ret = 0.0, goal = 0.0;
  for (const auto& t : batch) {
    env_ret += t.env_rewards.sum();
    train_ret += t.rewards.sum();
    goal += in_goal_region(spec, t.final_position) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(batch.size());
  return {env_ret / n, train_ret / n, goal / n, s.surrogate, s.value_loss, s.entropy, s.clip_fraction, s.approx_kl};
}

ExpertResult train_expert(const MazeSpec& spec, const ExpertConfig& cfg) {
  cfg.validate();
  spec.validate();
  const Rng root(cfg.seed);
  Rng init = root.split("expert.init"), upd = root.split("expert.update");
  const Rng rollouts = root.split("expert.rollout");
  ExpertResult r;
  r.agent = PpoAgent(cfg.policy, cfg.ppo, init);
  r.metrics = MetricsLog(ppo_metric_columns());
  const int episodes_per_iter = cfg.steps_per_iteration / spec.horizon;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const auto batch = collect(r.agent.policy(), r.agent.value(), spec, RewardSource::env, nullptr,
                               cfg.steps_per_iteration, rollouts,
                               static_cast<std::uint64_t>(it - 1) * static_cast<std::uint64_t>(episodes_per_iter));
    const PpoStats s = r.agent.update(batch, upd);
    r.metrics.append(it, ppo_metric_row(batch, spec, s));
  }
  const PolicyFn greedy = as_policy_fn(r.agent.policy(), true);
  r.evaluation = evaluate_return(greedy, spec, cfg.eval_episodes, root.split("expert.eval"));
  const Rng demo_rng = root.split("expert.demos");
  for (int e = 0; e < cfg.demo_episodes; ++e) {
    Rng er = demo_rng.split("episode", static_cast<std::uint64_t>(e));
    r.demos.episodes.push_back(rollout(spec, greedy, er));
  }
  r.succeeded = r.evaluation.goal_fraction >= cfg.goal_fraction_required;
  if (!r.succeeded)
    r.failure = "expert reached the goal region in " + fmt(100.0 * r.evaluation.goal_fraction) +
                "% of evaluation episodes (need " + fmt(100.0 * cfg.goal_fraction_required) + "%)";
  return r;
}

}  // namespace vdb

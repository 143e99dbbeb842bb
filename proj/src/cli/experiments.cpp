#include "vdb/cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>

#include "vdb/bounds/bounds.hpp"
#include "vdb/check/gradcheck.hpp"
#include "vdb/il/vail.hpp"
#include "vdb/il/vairl.hpp"
#include "vdb/nn/checkpoint.hpp"
#include "vdb/synth/vgan.hpp"

namespace fs = std::filesystem;

namespace vdb {

namespace {

// A run that finished but whose built-in check did not hold.
struct CheckFailure : std::runtime_error {
  RunSummary summary;
  CheckFailure(const std::string& what, RunSummary s) : std::runtime_error(what), summary(std::move(s)) {}
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void write_summary(const RunSummary& s, const fs::path& path) {
  std::ofstream os = open_out(path);
  os << "key,value\n";
  for (const auto& [k, v] : s) os << k << ',' << format_metric(v) << '\n';
}

// Validates every key, then echoes the resolved configuration.
void begin(const RunConfig& c, const fs::path& out) {
  c.require_all_used();
  fs::create_directories(out);
  c.write(out / "config.txt");
}

std::string ic_label(double ic) {
  if (std::isinf(ic)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ic);
  return buf;
}

void write_episodes(const std::vector<Episode>& eps, const fs::path& path) {
  std::ofstream os = open_out(path);
  os << "episode,t,x,y,ax,ay,r\n";
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (std::size_t t = 0; t < eps[e].rewards.size(); ++t)
      os << e << ',' << t << ',' << format_metric(eps[e].observations[t].x()) << ','
         << format_metric(eps[e].observations[t].y()) << ',' << format_metric(eps[e].actions[t].x()) << ','
         << format_metric(eps[e].actions[t].y()) << ',' << format_metric(eps[e].rewards[t]) << '\n';
}

std::vector<Episode> greedy_episodes(const GaussianPolicy& policy, const MazeSpec& spec, int n, const Rng& rng) {
  std::vector<Episode> eps;
  const PolicyFn fn = as_policy_fn(policy, true);
  for (int e = 0; e < n; ++e) {
    Rng er = rng.split("episode", static_cast<std::uint64_t>(e));
    eps.push_back(rollout(spec, fn, er));
  }
  return eps;
}

PpoConfig read_ppo(RunConfig& c) {
  PpoConfig p;
  p.clip = c.get_double("ppo.clip", p.clip);
  p.policy_stepsize = c.get_double("ppo.policy_lr", p.policy_stepsize);
  p.value_stepsize = c.get_double("ppo.value_lr", p.value_stepsize);
  p.gamma = c.get_double("ppo.gamma", p.gamma);
  p.lambda = c.get_double("ppo.lambda", p.lambda);
  p.epochs = c.get_int("ppo.epochs", p.epochs);
  p.minibatch = c.get_int("ppo.minibatch", p.minibatch);
  p.entropy_coef = c.get_double("ppo.entropy_coef", p.entropy_coef);
  p.max_grad_norm = c.get_double("ppo.max_grad_norm", p.max_grad_norm);
  p.validate();
  return p;
}

// β schedule: "adaptive", "zero" (= fixed:0) or "fixed:<value>".
std::optional<double> parse_fixed_beta(const std::string& key, const std::string& mode) {
  if (mode == "adaptive") return std::nullopt;
  if (mode == "zero") return 0.0;
  if (mode.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string v = mode.substr(6);
      const double b = std::stod(v, &used);
      if (used == v.size() && b >= 0.0 && std::isfinite(b)) return b;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(key + ": expected adaptive, zero or fixed:<beta >= 0>, got '" + mode + "'");
}

// Expert demonstrations: loaded from `demos` when given, otherwise trained.
struct ExpertSetup {
  Demonstrations demos;
  double expert_return = std::nan("");
  double expert_goal = std::nan("");
  bool trained = false;
  ExpertConfig cfg;
  std::string path;
};

ExpertSetup read_expert(RunConfig& c, std::uint64_t seed) {
  ExpertSetup e;
  e.path = c.get_string("demos", "");
  e.cfg.seed = seed;
  e.cfg.iterations = c.get_int("expert.iterations", e.cfg.iterations);
  e.cfg.steps_per_iteration = c.get_int("expert.steps_per_iteration", e.cfg.steps_per_iteration);
  e.cfg.demo_episodes = c.get_int("expert.demo_episodes", e.cfg.demo_episodes);
  e.cfg.eval_episodes = c.get_int("expert.eval_episodes", e.cfg.eval_episodes);
  e.cfg.ppo.entropy_coef = c.get_double("expert.entropy_coef", e.cfg.ppo.entropy_coef);
  e.cfg.validate();
  return e;
}

void prepare_expert(ExpertSetup& e, const MazeSpec& spec, const fs::path& out) {
  if (!e.path.empty()) {
    std::ifstream is(e.path);
    if (!is) throw ConfigError("demos: cannot read " + e.path);
    e.demos = read_demonstrations(is);
    if (!replay_matches(e.demos, spec)) throw ConfigError("demos: " + e.path + " does not replay in maze " + spec.name);
    return;
  }
  const ExpertResult r = train_expert(spec, e.cfg);
  e.trained = true;
  e.demos = r.demos;
  e.expert_return = r.evaluation.mean;
  e.expert_goal = r.evaluation.goal_fraction;
  r.metrics.write_csv((out / "expert_metrics.csv").string());
  std::ofstream os = open_out(out / "demos.csv");
  write_demonstrations(r.demos, os);
  save_checkpoint(out / "expert_policy.ckpt", r.agent.policy().parameters());
  if (!r.succeeded) {
    RunSummary s{{"expert_return", r.evaluation.mean}, {"expert_goal_fraction", r.evaluation.goal_fraction}};
    throw CheckFailure("expert training failed: " + r.failure, s);
  }
}

RunSummary run_vgan(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  VganConfig v;
  v.seed = seed;
  const std::string target = c.get_string("vgan.target", "ring8");
  v.target = [&] {
    switch (parse_distribution(target)) {
      case DistributionKind::gaussian: return Distribution2D::gaussian(Vec2::Zero(), 1.0);
      case DistributionKind::two_gaussians: return Distribution2D::two_gaussians();
      default: return Distribution2D::ring();
    }
  }();
  const double ic = c.get_double("vgan.ic", 0.5);
  if (!(ic > 0.0)) throw ConfigError("vgan.ic must be positive or inf");
  v.bottleneck = std::isfinite(ic);
  v.dual.target_kl = v.bottleneck ? ic : 1.0;
  v.dual.stepsize = c.get_double("vgan.dual_stepsize", v.dual.stepsize);
  v.fixed_beta = parse_fixed_beta("vgan.beta_mode", c.get_string("vgan.beta_mode", "adaptive"));
  v.steps = c.get_int("vgan.steps", v.steps);
  v.batch = c.get_int("vgan.batch", v.batch);
  v.disc_optimizer.stepsize = c.get_double("vgan.disc_lr", v.disc_optimizer.stepsize);
  v.gen_optimizer.stepsize = c.get_double("vgan.gen_lr", v.gen_optimizer.stepsize);
  v.gp.weight = c.get_double("vgan.gp", 0.0);
  v.encoder.latent_dim = c.get_int("vgan.latent_dim", v.encoder.latent_dim);
  const std::string variance = c.get_string("vgan.variance", "per_input");
  if (variance != "per_input" && variance != "shared")
    throw ConfigError("vgan.variance must be per_input or shared, got '" + variance + "'");
  v.encoder.variance = variance == "shared" ? VarianceMode::shared : VarianceMode::per_input;
  v.kl_window = c.get_int("vgan.kl_window", v.kl_window);
  v.log_every = c.get_int("vgan.log_every", v.log_every);
  v.eval_samples = c.get_int("vgan.eval_samples", v.eval_samples);
  const int floor_pairs = c.get_int("vgan.floor_samples", 400);
  const double grid_half_width = c.get_double("vgan.grid_half_width", 3.0);
  const int grid_resolution = c.get_int("vgan.grid_resolution", 61);
  if (!(grid_half_width > 0.0) || grid_resolution < 2) throw ConfigError("vgan.grid: need half width > 0 and resolution >= 2");
  v.validate();
  begin(c, out);

  const VganResult r = train_vgan(v);
  r.metrics.write_csv((out / "metrics.csv").string());
  {
    std::ofstream os = open_out(out / "samples.csv");
    os << "x,y\n";
    for (Eigen::Index i = 0; i < r.samples.rows(); ++i)
      os << format_metric(r.samples(i, 0)) << ',' << format_metric(r.samples(i, 1)) << '\n';
  }
  {
    const DecisionGrid g = evaluate_grid(r.disc, grid_half_width, grid_resolution);
    std::ofstream gd = open_out(out / "grid_D.csv"), gg = open_out(out / "grid_gradnorm.csv");
    write_grid_csv(g.coords, g.prob, gd);
    write_grid_csv(g.coords, g.grad_norm, gg);
  }
  save_checkpoint(out / "disc.ckpt", r.disc.parameters());
  save_checkpoint(out / "gen.ckpt", r.gen.net.parameters());
  RunSummary s{{"trailing_kl", r.trailing_kl},
               {"modes_covered", r.modes_covered},
               {"final_beta", r.metrics.last("beta")},
               {"final_accuracy", r.metrics.last("accuracy")}};
  if (v.encoder.variance == VarianceMode::shared && v.bottleneck) {
    Rng fr = Rng(seed).split("floor.check");
    const Matrix gen = r.gen.sample(floor_pairs, fr);
    const Matrix real = sample(v.target, floor_pairs, fr);
    const FloorCheckResult f = empirical_floor_check(r.disc.encoder(), gen, real, ic);
    std::ofstream hk = open_out(out / "pointwise_kl_hist.csv"), hc = open_out(out / "log_coefficient_hist.csv");
    write_histogram_csv(f.pointwise_kl, 40, hk);
    write_histogram_csv(f.log_coefficients, 40, hc);
    s["floor_log_c"] = f.log_floor;
    s["floor_pairs"] = static_cast<double>(f.pairs);
    s["floor_violation_fraction"] = f.violation_fraction;
    s["floor_min_log_coefficient"] = f.min_log_coefficient;
    s["floor_max_pointwise_kl"] = f.max_pointwise_kl;
    s["floor_conditional_pairs"] = static_cast<double>(f.conditional_pairs);
    s["floor_conditional_violations"] = static_cast<double>(f.conditional_violations);
    if (f.conditional_violations > 0)
      throw CheckFailure("coefficient floor violated on pairs that satisfy the pointwise KL bound", s);
  }
  return s;
}

RunSummary run_fig2(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  const std::vector<double> ics =
      c.get_doubles("fig2.ic", {std::numeric_limits<double>::infinity(), 1.0, 0.5, 0.1});
  DiscOnlyConfig base;
  base.seed = seed;
  base.steps = c.get_int("fig2.steps", base.steps);
  base.batch = c.get_int("fig2.batch", base.batch);
  base.optimizer.stepsize = c.get_double("fig2.lr", base.optimizer.stepsize);
  base.dual_stepsize = c.get_double("fig2.dual_stepsize", base.dual_stepsize);
  base.grid_resolution = c.get_int("fig2.grid_resolution", base.grid_resolution);
  base.grid_half_width = c.get_double("fig2.grid_half_width", base.grid_half_width);
  const double sep = c.get_double("fig2.separation", 4.0);
  if (!(sep > 0.0)) throw ConfigError("fig2.separation must be positive");
  for (double ic : ics)
    if (!(ic > 0.0)) throw ConfigError("fig2.ic values must be positive or inf");
  base.validate();
  begin(c, out);

  const auto a = Distribution2D::gaussian(Vec2(-sep, 0.0), 1.0), b = Distribution2D::gaussian(Vec2(sep, 0.0), 1.0);
  MetricsLog summary({"ic", "max_grad_norm", "band_grad_norm", "accuracy", "trailing_kl", "final_beta"});
  RunSummary s;
  long row = 0;
  for (double ic : ics) {
    DiscOnlyConfig cfg = base;
    cfg.ic = ic;
    const DiscOnlyResult r = train_discriminator_only(a, b, cfg);
    const std::string label = ic_label(ic);
    std::ofstream gd = open_out(out / ("grid_D_" + label + ".csv")), gg = open_out(out / ("grid_gradnorm_" + label + ".csv"));
    write_grid_csv(r.grid.coords, r.grid.prob, gd);
    write_grid_csv(r.grid.coords, r.grid.grad_norm, gg);
    r.metrics.write_csv((out / ("metrics_" + label + ".csv")).string());
    summary.append(++row, {ic, r.max_grad_norm, r.band_grad_norm, r.accuracy, r.trailing_kl, r.final_beta});
    s["max_grad_norm@" + label] = r.max_grad_norm;
    s["band_grad_norm@" + label] = r.band_grad_norm;
    s["accuracy@" + label] = r.accuracy;
    s["trailing_kl@" + label] = r.trailing_kl;
  }
  summary.write_csv((out / "metrics.csv").string());
  return s;
}

void read_maze_key(RunConfig& c, MazeSpec& spec, const std::string& fallback) {
  spec = parse_maze(c.get_string("maze", fallback));
}

RunSummary run_vail(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  MazeSpec spec;
  read_maze_key(c, spec, "c");
  ExpertSetup expert = read_expert(c, seed);
  VailConfig v;
  v.seed = seed;
  v.ppo = read_ppo(c);
  v.ic = c.get_double("vail.ic", v.ic);
  v.fixed_beta = parse_fixed_beta("vail.beta_mode", c.get_string("vail.beta_mode", "adaptive"));
  v.gp.weight = c.get_double("vail.gp", 0.0);
  v.dual_stepsize = c.get_double("vail.dual_stepsize", v.dual_stepsize);
  v.disc_optimizer.stepsize = c.get_double("vail.disc_lr", v.disc_optimizer.stepsize);
  v.iterations = c.get_int("vail.iterations", v.iterations);
  v.steps_per_iteration = c.get_int("vail.steps_per_iteration", v.steps_per_iteration);
  v.disc_steps = c.get_int("vail.disc_steps", v.disc_steps);
  v.disc_batch = c.get_int("vail.disc_batch", v.disc_batch);
  v.encoder.latent_dim = c.get_int("vail.latent_dim", v.encoder.latent_dim);
  v.validate();
  begin(c, out);

  prepare_expert(expert, spec, out);
  const VailResult r = vail_train(expert.demos, spec, v);
  r.metrics.write_csv((out / "metrics.csv").string());
  save_checkpoint(out / "policy.ckpt", r.agent.policy().parameters());
  save_checkpoint(out / "disc.ckpt", r.disc.parameters());
  write_episodes(greedy_episodes(r.agent.policy(), spec, 5, Rng(seed).split("trajectories")), out / "trajectories.csv");
  RunSummary s{{"eval_return", r.evaluation.mean},
               {"eval_goal_fraction", r.evaluation.goal_fraction},
               {"trailing_accuracy", r.trailing_accuracy},
               {"final_beta", r.dual.beta},
               {"final_kl", r.metrics.last("batch_kl")}};
  if (expert.trained) {
    s["expert_return"] = expert.expert_return;
    s["expert_goal_fraction"] = expert.expert_goal;
    s["return_ratio"] = r.evaluation.mean / expert.expert_return;
  }
  return s;
}

TransferConfig read_transfer(RunConfig& c, std::uint64_t seed, const PpoConfig& ppo) {
  TransferConfig t;
  t.seed = seed;
  t.ppo = ppo;
  t.iterations = c.get_int("transfer.iterations", t.iterations);
  t.steps_per_iteration = c.get_int("transfer.steps_per_iteration", t.steps_per_iteration);
  t.eval_episodes = c.get_int("transfer.eval_episodes", t.eval_episodes);
  t.validate();
  return t;
}

RunSummary add_transfer(const RecoveredReward& reward, const MazeSpec& test, const TransferConfig& t,
                        const fs::path& out, const std::string& prefix, RunSummary s) {
  const TransferResult tr = transfer(reward, test, t);
  tr.metrics.write_csv((out / (prefix + "metrics.csv")).string());
  write_episodes(greedy_episodes(tr.agent.policy(), test, 5, Rng(t.seed).split("transfer.trajectories")),
                 out / (prefix + "trajectories.csv"));
  save_checkpoint(out / (prefix + "policy.ckpt"), tr.agent.policy().parameters());
  s["transfer_return"] = tr.evaluation.mean;
  s["transfer_return_std"] = tr.evaluation.stddev;
  s["transfer_goal_fraction"] = tr.evaluation.goal_fraction;
  return s;
}

RunSummary run_vairl(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  MazeSpec spec;
  read_maze_key(c, spec, "c");
  ExpertSetup expert = read_expert(c, seed);
  VairlConfig v;
  v.seed = seed;
  v.ppo = read_ppo(c);
  v.ic = c.get_double("vairl.ic", v.ic);
  v.beta_mode = parse_beta_mode(c.get_string("vairl.beta_mode", "adaptive"));
  v.disc.bottleneck = c.get_bool("vairl.bottleneck", true);
  v.disc.gamma = c.get_double("vairl.gamma", v.ppo.gamma);
  v.gp.weight = c.get_double("vairl.gp", 0.0);
  v.dual_stepsize = c.get_double("vairl.dual_stepsize", v.dual_stepsize);
  v.disc_optimizer.stepsize = c.get_double("vairl.disc_lr", v.disc_optimizer.stepsize);
  v.iterations = c.get_int("vairl.iterations", v.iterations);
  v.steps_per_iteration = c.get_int("vairl.steps_per_iteration", v.steps_per_iteration);
  v.disc_steps = c.get_int("vairl.disc_steps", v.disc_steps);
  v.disc_batch = c.get_int("vairl.disc_batch", v.disc_batch);
  v.disc.encoder.latent_dim = c.get_int("vairl.latent_dim", v.disc.encoder.latent_dim);
  const bool do_transfer = c.get_bool("transfer.enabled", true);
  const MazeSpec test = parse_maze(c.get_string("transfer.maze", spec.mirrored ? spec.name : "mirrored-" + spec.name));
  const TransferConfig t = read_transfer(c, seed, v.ppo);
  v.validate();
  begin(c, out);

  prepare_expert(expert, spec, out);
  const VairlResult r = vairl_train(expert.demos, spec, v);
  r.metrics.write_csv((out / "metrics.csv").string());
  r.reward.save(out / "reward.ckpt");
  save_checkpoint(out / "disc.ckpt", r.disc.parameters());
  save_checkpoint(out / "policy.ckpt", r.agent.policy().parameters());
  {
    std::ofstream os = open_out(out / "reward_grid.csv");
    write_reward_grid_csv(r.reward, spec, 41, os);
  }
  write_episodes(greedy_episodes(r.agent.policy(), spec, 5, Rng(seed).split("trajectories")), out / "trajectories.csv");
  RunSummary s{{"eval_return", r.evaluation.mean},
               {"eval_goal_fraction", r.evaluation.goal_fraction},
               {"final_beta", r.dual.beta},
               {"final_kl", r.metrics.last("batch_kl")},
               {"final_accuracy", r.metrics.last("accuracy")}};
  if (expert.trained) s["expert_return"] = expert.expert_return;
  if (do_transfer) s = add_transfer(r.reward, test, t, out, "transfer_", s);
  return s;
}

RunSummary run_transfer(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  MazeSpec spec;
  read_maze_key(c, spec, "mirrored-c");
  const std::string path = c.require_string("transfer.reward");
  const TransferConfig t = read_transfer(c, seed, read_ppo(c));
  const RecoveredReward reward = RecoveredReward::load(fs::path(path));
  begin(c, out);
  {
    std::ofstream os = open_out(out / "reward_grid.csv");
    write_reward_grid_csv(reward, spec, 41, os);
  }
  const TransferResult tr = transfer(reward, spec, t);
  tr.metrics.write_csv((out / "metrics.csv").string());
  write_episodes(greedy_episodes(tr.agent.policy(), spec, 5, Rng(seed).split("trajectories")), out / "trajectories.csv");
  save_checkpoint(out / "policy.ckpt", tr.agent.policy().parameters());
  return {{"transfer_return", tr.evaluation.mean},
          {"transfer_return_std", tr.evaluation.stddev},
          {"transfer_goal_fraction", tr.evaluation.goal_fraction}};
}

RunSummary run_bounds(RunConfig& c, const fs::path& out) {
  const int k = c.get_int("bounds.k", 2);
  const std::string grid = c.get_string("bounds.ic_grid", "0.0001:10:100");
  const std::string spacing = c.get_string("bounds.spacing", "log");
  const std::string report_name = c.get_string("bounds.report", "report.csv");
  if (k < 1) throw ConfigError("bounds.k must be at least 1");
  if (spacing != "log" && spacing != "linear") throw ConfigError("bounds.spacing must be log or linear");
  if (report_name.find('/') != std::string::npos) throw ConfigError("bounds.report must be a file name");
  double lo = 0.0, hi = 0.0;
  int n = 0;
  {
    const auto a = grid.find(':'), b = grid.rfind(':');
    if (a == std::string::npos || a == b) throw ConfigError("bounds.ic_grid must look like lo:hi:n");
    RunConfig tmp;
    tmp.set("lo", grid.substr(0, a));
    tmp.set("hi", grid.substr(a + 1, b - a - 1));
    tmp.set("n", grid.substr(b + 1));
    try {
      lo = tmp.get_double("lo", 0.0);
      hi = tmp.get_double("hi", 0.0);
      n = tmp.get_int("n", 0);
    } catch (const ConfigError&) {
      throw ConfigError("bounds.ic_grid must look like lo:hi:n, got '" + grid + "'");
    }
  }
  const std::vector<double> ics = make_grid(lo, hi, n, spacing == "log" ? GridSpacing::log : GridSpacing::linear);
  begin(c, out);
  const BoundReport r = bound_report(ics, k);
  {
    std::ofstream os = open_out(out / report_name);
    write_bound_csv(r, os);
  }
  {
    std::ofstream os = open_out(out / "bounds_summary.txt");
    write_bound_summary(r, os);
  }
  RunSummary s{{"lower_below_upper", r.lower_below_upper},   {"floor_positive", r.floor_positive},
               {"lower_decreasing", r.lower_decreasing},     {"upper_increasing", r.upper_increasing},
               {"floor_decreasing", r.floor_decreasing},     {"floor_at_smallest_ic", r.floor_at_smallest_ic},
               {"floor_limit", r.floor_limit},               {"rows", static_cast<double>(r.ic.size())}};
  if (!(r.lower_below_upper && r.floor_positive && r.lower_decreasing && r.upper_increasing && r.floor_decreasing))
    throw CheckFailure("a bound property does not hold on the grid; see bounds_summary.txt", s);
  return s;
}

RunSummary run_gradcheck(RunConfig& c, std::uint64_t seed, const fs::path& out) {
  GradCheckConfig g;
  g.seed = seed;
  g.configs = c.get_int("gradcheck.configs", g.configs);
  g.rtol = c.get_double("gradcheck.rtol", g.rtol);
  g.atol = c.get_double("gradcheck.atol", g.atol);
  g.step = c.get_double("gradcheck.step", g.step);
  g.validate();
  begin(c, out);
  const GradCheckReport r = run_gradchecks(g);
  {
    std::ofstream os = open_out(out / "gradcheck.csv");
    write_gradcheck_csv(r, os);
  }
  RunSummary s;
  std::string failed;
  for (const GradCheckCase& k : r.cases) {
    s["mismatches@" + k.name] = static_cast<double>(k.mismatches);
    if (!k.passed() && failed.empty()) failed = k.name + ": " + k.first_failure;
  }
  if (!failed.empty()) throw CheckFailure("gradient check failed, " + failed, s);
  return s;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"vgan", "fig2", "vail", "vairl", "transfer", "bounds", "gradcheck"};
  return kinds;
}

fs::path default_output_root() {
  const char* env = std::getenv("VDB_LAB_OUT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

MazeSpec parse_maze(const std::string& name) {
  const std::string suffix = "-mirrored";
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
    return maze_by_name("mirrored-" + name.substr(0, name.size() - suffix.size()));
  return maze_by_name(name);
}

RunOutcome run(RunConfig config, const fs::path& out_dir) {
  RunOutcome o;
  try {
    const std::string kind = config.require_string("experiment");
    const std::uint64_t seed = config.get_u64("seed", 0);
    if (kind == "vgan") {
      o.summary = run_vgan(config, seed, out_dir);
    } else if (kind == "fig2") {
      o.summary = run_fig2(config, seed, out_dir);
    } else if (kind == "vail") {
      o.summary = run_vail(config, seed, out_dir);
    } else if (kind == "vairl") {
      o.summary = run_vairl(config, seed, out_dir);
    } else if (kind == "transfer") {
      o.summary = run_transfer(config, seed, out_dir);
    } else if (kind == "bounds") {
      o.summary = run_bounds(config, out_dir);
    } else if (kind == "gradcheck") {
      o.summary = run_gradcheck(config, seed, out_dir);
    } else {
      throw ConfigError("experiment: unknown kind '" + kind + "'");
    }
  } catch (const ConfigError& e) {
    o.exit_code = kExitUsage;
    o.message = e.what();
    return o;
  } catch (const DivergenceError& e) {
    o.exit_code = kExitDivergence;
    o.message = e.what();
  } catch (const CheckFailure& e) {
    o.exit_code = kExitCheckFailed;
    o.message = e.what();
    o.summary = e.summary;
  }
  if (fs::exists(out_dir)) {
    write_summary(o.summary, out_dir / "summary.csv");
    if (o.exit_code != kExitOk) {
      std::ofstream os(out_dir / "error.txt");
      os << o.message << '\n';
    }
  }
  return o;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SweepOutcome sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values,
                   const std::vector<std::uint64_t>& seeds, const fs::path& out_dir) {
  if (values.empty()) throw ConfigError("sweep: the value list is empty");
  if (seeds.empty()) throw ConfigError("sweep: the seed list is empty");
  if (axis.empty() || axis == "seed" || axis == "experiment") throw ConfigError("sweep: invalid axis '" + axis + "'");
  SweepOutcome s;
  for (const std::string& value : values)
    for (std::uint64_t seed : seeds) {
      RunConfig c = base;
      c.set(axis, value);
      c.set("seed", std::to_string(seed));
      SweepRow row{value, seed, run(c, out_dir / (axis + "=" + value) / ("seed-" + std::to_string(seed)))};
      if (row.outcome.exit_code != kExitOk && s.exit_code == kExitOk) s.exit_code = row.outcome.exit_code;
      s.rows.push_back(std::move(row));
    }

  std::set<std::string> keys;
  for (const auto& r : s.rows)
    for (const auto& [k, v] : r.outcome.summary) keys.insert(k);
  fs::create_directories(out_dir);
  std::ofstream os = open_out(out_dir / "summary.csv");
  os << axis << ",seed,exit_code";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  for (const auto& r : s.rows) {
    os << r.value << ',' << r.seed << ',' << r.outcome.exit_code;
    for (const auto& k : keys) {
      const auto it = r.outcome.summary.find(k);
      os << ',' << (it == r.outcome.summary.end() ? "" : format_metric(it->second));
    }
    os << '\n';
  }
  for (const std::string& value : values) {
    os << value << ",median,";
    for (const auto& k : keys) {
      std::vector<double> xs;
      for (const auto& r : s.rows)
        if (r.value == value && r.outcome.exit_code == kExitOk) {
          const auto it = r.outcome.summary.find(k);
          if (it != r.outcome.summary.end()) xs.push_back(it->second);
        }
      os << ',' << (xs.empty() ? "" : format_metric(median(xs)));
    }
    os << '\n';
  }
  return s;
}

}  // namespace vdb

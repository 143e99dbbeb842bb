// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Pass criterion names as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "vdb/bounds/bounds.hpp"
#include "vdb/check/gradcheck.hpp"
#include "vdb/cli/experiments.hpp"
#include "vdb/core/dual_state.hpp"
#include "vdb/core/kl.hpp"
#include "vdb/il/vail.hpp"
#include "vdb/il/vairl.hpp"
#include "vdb/synth/vgan.hpp"

using namespace vdb;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<double>& xs, const char* f = "%.3g") {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + fmt(f, xs[i]);
  return s;
}

constexpr int kSeeds = 5;

// The expert and its demonstrations are shared by the imitation criteria.
const ExpertResult& c_maze_expert() {
  static const ExpertResult expert = [] {
    ExpertConfig cfg;
    cfg.seed = 0;
    return train_expert(c_maze(), cfg);
  }();
  return expert;
}

Verdict gradient_correctness() {
  const GradCheckReport r = run_gradchecks(GradCheckConfig{});
  long entries = 0, mismatches = 0;
  std::string first;
  for (const auto& c : r.cases) {
    entries += c.entries;
    mismatches += c.mismatches;
    if (!c.passed() && first.empty()) first = "; first: " + c.name + " " + c.first_failure;
  }
  return {r.passed() && r.cases.size() == 11,
          std::to_string(r.cases.size()) + " components x 100 configs, " + std::to_string(entries) +
              " entries, " + std::to_string(mismatches) + " outside rtol 1e-4" + first};
}

Verdict kl_monte_carlo() {
  Rng rng(20);
  const int n = 1000000;
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng tr = rng.split("trial", static_cast<std::uint64_t>(trial));
    const int k = 1 + static_cast<int>(tr.index(4));
    const Vector mu = tr.normal_matrix(k, 1);
    const Vector var = (tr.normal_matrix(k, 1)).array().exp();
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < n; ++s) {
      double log_ratio = 0.0;
      for (int d = 0; d < k; ++d) {
        const double eps = tr.normal();
        const double z = mu(d) + std::sqrt(var(d)) * eps;
        log_ratio += -0.5 * std::log(var(d)) - 0.5 * eps * eps + 0.5 * z * z;
      }
      sum += log_ratio;
      sum_sq += log_ratio * log_ratio;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    const double z = std::abs(mean - kl_to_standard_normal(mu, var)) / se;
    worst = std::max(worst, z);
    if (z > 3.0) ++failures;
  }
  return {failures == 0, "20 draws of (mu, var) at 1e6 samples, worst deviation " + fmt("%.2f", worst) + " SE (limit 3)"};
}

Verdict constraint_enforcement() {
  int within = 0;
  std::vector<double> kls;
  for (int s = 0; s < kSeeds; ++s) {
    VganConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.dual.target_kl = 0.5;
    const VganResult r = train_vgan(cfg);
    kls.push_back(r.trailing_kl);
    if (std::abs(r.trailing_kl - 0.5) <= 0.05) ++within;
  }
  return {within >= 4, "ring-of-8, I_c 0.5, trailing KL per seed [" + join(kls) + "], " + std::to_string(within) +
                           "/5 within +-10% (need 4)"};
}

Verdict discriminator_ordering() {
  const std::vector<double> ics{kUnconstrained, 1.0, 0.5, 0.1};
  const auto a = Distribution2D::gaussian(Vec2(-4.0, 0.0), 1.0), b = Distribution2D::gaussian(Vec2(4.0, 0.0), 1.0);
  std::vector<double> max_grad, acc;
  for (double ic : ics) {
    std::vector<double> g, ac;
    for (int s = 0; s < kSeeds; ++s) {
      DiscOnlyConfig cfg;
      cfg.ic = ic;
      cfg.seed = static_cast<std::uint64_t>(s);
      const DiscOnlyResult r = train_discriminator_only(a, b, cfg);
      g.push_back(r.max_grad_norm);
      ac.push_back(r.accuracy);
    }
    max_grad.push_back(median(g));
    acc.push_back(median(ac));
  }
  bool ordered = true, capped = true;
  for (std::size_t i = 1; i < ics.size(); ++i) {
    ordered = ordered && max_grad[i] <= max_grad[i - 1];
    capped = capped && acc[0] > acc[i];
  }
  return {ordered && capped, "I_c inf,1,0.5,0.1: median max |grad D| [" + join(max_grad) +
                                 "], median held-out accuracy [" + join(acc, "%.4f") + "]"};
}

Verdict bottleneck_bounds() {
  const BoundReport r = bound_report(make_grid(1e-4, 10.0, 200, GridSpacing::log), 2);
  const double l = sigma_bounds(0.5, 2).lower;
  const bool closed = std::abs(l - std::exp(-1.5)) <= 1e-12;

  VganConfig cfg;
  cfg.seed = 0;
  cfg.target = Distribution2D::two_gaussians();
  cfg.encoder.variance = VarianceMode::shared;
  cfg.dual.target_kl = 0.5;
  const VganResult v = train_vgan(cfg);
  Rng fr = Rng(0).split("floor.check");
  const Matrix gen = v.gen.sample(2000, fr);
  const Matrix real = sample(cfg.target, 2000, fr);
  const FloorCheckResult f = empirical_floor_check(v.disc.encoder(), gen, real, 0.5);
  const bool floor_ok = f.conditional_pairs > 0 && f.conditional_violations == 0;
  return {r.lower_below_upper && closed && r.floor_positive && r.floor_decreasing && floor_ok,
          std::string("l<U on 200 points: ") + (r.lower_below_upper ? "yes" : "no") + ", |l(0.5,2)-e^-1.5| " +
              fmt("%.1e", std::abs(l - std::exp(-1.5))) + ", C positive " + (r.floor_positive ? "yes" : "no") +
              ", C decreasing " + (r.floor_decreasing ? "yes" : "no") + ", shared-variance run: " +
              std::to_string(f.conditional_violations) + " violations in " + std::to_string(f.conditional_pairs) +
              " conditional pairs"};
}

Verdict dual_update_suite() {
  bool clamp = true, monotone = true, recurrence = true;
  DualState d;
  d.target_kl = 0.5;
  d.stepsize = 0.3;
  for (double kl : {0.0, 0.1, 0.49}) clamp = clamp && dual_update(d, kl).beta == 0.0;
  d.beta = 0.01;
  clamp = clamp && dual_update(d, 0.0).beta == 0.0;

  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    DualState s;
    s.beta = rng.uniform(0.0, 1.0);
    s.stepsize = rng.uniform(1e-6, 1e-1);
    s.target_kl = rng.uniform(0.01, 2.0);
    const double a = rng.uniform(0.0, 3.0), b = rng.uniform(0.0, 3.0);
    const double ba = dual_update(s, a).beta, bb = dual_update(s, b).beta;
    monotone = monotone && ba >= 0.0 && (a <= b ? ba <= bb : ba >= bb);
  }

  DualState loop;
  loop.stepsize = 1e-3;
  loop.target_kl = 0.5;
  double oracle = 0.0;
  for (int n = 0; n < 5000; ++n) {
    const double kl = rng.uniform(0.0, 1.2);
    loop = dual_update(loop, kl);
    oracle = std::max(0.0, oracle + 1e-3 * (kl - 0.5));
    recurrence = recurrence && loop.beta == oracle;
  }
  return {clamp && monotone && recurrence, std::string("clamp ") + (clamp ? "ok" : "broken") + ", monotone over 10000 pairs " +
                                               (monotone ? "ok" : "broken") + ", 5000-step recurrence " +
                                               (recurrence ? "exact" : "differs")};
}

Verdict vail_imitation() {
  const ExpertResult& expert = c_maze_expert();
  if (!expert.succeeded) return {false, "expert failed: " + expert.failure};
  const double er = expert.evaluation.mean;
  std::vector<double> ratio, returns, vail_acc, gail_acc;
  for (int s = 0; s < kSeeds; ++s) {
    VailConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    const VailResult v = vail_train(expert.demos, c_maze(), cfg);
    returns.push_back(v.evaluation.mean);
    ratio.push_back(v.evaluation.mean / er);
    vail_acc.push_back(v.trailing_accuracy);
    cfg.ic = kUnconstrained;
    gail_acc.push_back(vail_train(expert.demos, c_maze(), cfg).trailing_accuracy);
  }
  const double mr = median(ratio), va = median(vail_acc), ga = median(gail_acc);
  const bool close = std::abs(mr - 1.0) <= 0.25;
  return {close && va < ga, "expert return " + fmt("%.2f", er) + ", VAIL returns [" + join(returns) +
                                "], median ratio " + fmt("%.3f", mr) + " (limit 1 +- 0.25); median accuracy VAIL " +
                                fmt("%.3f", va) + " vs GAIL " + fmt("%.3f", ga)};
}

Verdict vairl_transfer() {
  const ExpertResult& expert = c_maze_expert();
  if (!expert.succeeded) return {false, "expert failed: " + expert.failure};
  const MazeSpec test = mirror(c_maze());
  std::vector<double> vairl, ablation, plain, goal;
  auto train_and_transfer = [&](VairlConfig cfg) {
    const VairlResult r = vairl_train(expert.demos, c_maze(), cfg);
    TransferConfig t;
    t.seed = cfg.seed;
    return transfer(r.reward, test, t).evaluation;
  };
  for (int s = 0; s < kSeeds; ++s) {
    VairlConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    const ReturnStats v = train_and_transfer(cfg);
    vairl.push_back(v.mean);
    goal.push_back(v.goal_fraction);
    cfg.beta_mode = BetaMode::fixed_zero;
    ablation.push_back(train_and_transfer(cfg).mean);
    cfg.beta_mode = BetaMode::adaptive;
    cfg.disc.bottleneck = false;
    plain.push_back(train_and_transfer(cfg).mean);
  }
  const double mv = median(vairl), ma = median(ablation), mg = median(goal);
  return {mv >= ma && mg >= 0.5,
          "mirrored C-maze median transfer return VAIRL " + fmt("%.2f", mv) + " [" + join(vairl) +
              "] vs beta=0 ablation " + fmt("%.2f", ma) + " [" + join(ablation) + "]; VAIRL median goal fraction " +
              fmt("%.2f", mg) + " (need 0.5); plain AIRL without encoder, for reference, " + fmt("%.2f", median(plain))};
}

Verdict environment_symmetry() {
  bool exact = true;
  for (const MazeSpec& m : {c_maze(), s_maze()}) {
    const MazeSpec r = mirror(m);
    const PolicyFn pi = [](const Vec2& o, Rng& rng) {
      return Vec2(std::sin(7.0 * o.x()) + 0.3 * rng.normal(), 0.8 - o.y() + 0.3 * rng.normal());
    };
    const PolicyFn pi_r = mirror_policy(m, pi);
    for (std::uint64_t e = 0; e < 50; ++e) {
      Rng a(e), b(e);
      const Episode ea = rollout(m, pi, a), eb = rollout(r, pi_r, b);
      exact = exact && ea.total_reward() == eb.total_reward() && ea.rewards == eb.rewards;
    }
  }
  MazeSpec wide = open_box();
  wide.x_min = wide.y_min = -4.0;
  wide.x_max = wide.y_max = 4.0;
  wide.goal = Vec2(0.0, 0.0);
  wide.damping = 0.0;
  wide.max_accel = 0.25;
  wide.start_mean = Vec2(-2.25, 0.0);
  EnvState w;
  w.position = Vec2(-2.25, 0.0);
  const double stepped = step(wide, w, Vec2(1.0, 0.0)).second.reward;
  const double direct = ground_truth_reward(wide, Vec2(2.0, 0.0), Vec2(1.0, 0.0));
  EnvState g;
  g.position = open_box().goal;
  const double at_goal = step(open_box(), g, Vec2::Zero()).second.reward;
  const bool spot = stepped == -2.001 && direct == -2.001 && at_goal == 0.0;
  return {exact && spot, std::string("mirrored policy in mirrored C and S mazes, 100 episodes: ") +
                             (exact ? "identical rewards" : "rewards differ") + "; d=2, a=(1,0) reward " +
                             fmt("%.6g", stepped) + " (exact double compare), at goal " + fmt("%g", at_goal + 0.0)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "vdb_lab_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const ExpertResult& expert = c_maze_expert();
  {
    std::ofstream os(root / "demos.csv");
    write_demonstrations(expert.demos, os);
  }
  std::vector<std::vector<std::pair<std::string, std::string>>> runs{
      {{"experiment", "vgan"}, {"vgan.steps", "300"}, {"seed", "4"}},
      {{"experiment", "fig2"}, {"fig2.steps", "200"}, {"fig2.grid_resolution", "31"}, {"seed", "4"}},
      {{"experiment", "vail"}, {"demos", (root / "demos.csv").string()}, {"vail.iterations", "4"}, {"seed", "4"}},
      {{"experiment", "vairl"}, {"demos", (root / "demos.csv").string()}, {"vairl.iterations", "3"},
       {"vairl.disc_steps", "5"}, {"transfer.iterations", "3"}, {"seed", "4"}},
      {{"experiment", "gradcheck"}, {"gradcheck.configs", "3"}, {"seed", "4"}},
  };
  int identical = 0;
  std::string failed;
  for (const auto& kv : runs) {
    RunConfig c;
    for (const auto& [k, v] : kv) c.set(k, v);
    const std::string kind = kv[0].second;
    const RunOutcome a = run(c, root / (kind + "_a")), b = run(c, root / (kind + "_b"));
    const std::string file = kind == "gradcheck" ? "gradcheck.csv" : "metrics.csv";
    const std::string ma = slurp(root / (kind + "_a") / file);
    bool same = a.exit_code == kExitOk && b.exit_code == kExitOk && !ma.empty() &&
                ma == slurp(root / (kind + "_b") / file);
    if (kind == "vairl") same = same && slurp(root / "vairl_a" / "transfer_metrics.csv") ==
                                            slurp(root / "vairl_b" / "transfer_metrics.csv");
    if (same) ++identical;
    else failed += " " + kind;
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(runs.size()),
          std::to_string(identical) + "/" + std::to_string(runs.size()) +
              " experiment kinds byte-identical on repeat (vgan, fig2, vail, vairl + transfer, gradcheck)" +
              (failed.empty() ? "" : "; differ:" + failed)};
}

struct Criterion {
  std::string name;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"gradient-correctness", gradient_correctness},
      {"kl-monte-carlo", kl_monte_carlo},
      {"constraint-enforcement", constraint_enforcement},
      {"discriminator-ordering", discriminator_ordering},
      {"bottleneck-bounds", bottleneck_bounds},
      {"dual-update", dual_update_suite},
      {"vail-imitation", vail_imitation},
      {"vairl-transfer", vairl_transfer},
      {"environment-symmetry", environment_symmetry},
      {"determinism", determinism},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %-24s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", c.name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matched\n");
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}

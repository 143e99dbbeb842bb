#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vdb/cli/metrics_log.hpp"
#include "vdb/rl/ppo.hpp"

namespace vdb {

/// Expert demonstrations: whole episodes of (s, a, s') with ground-truth rewards.
struct Demonstrations {
  std::vector<Episode> episodes;

  std::size_t transitions() const;
  Matrix states() const;       ///< every s, stacked
  Matrix next_states() const;  ///< every s', stacked
  Matrix actions() const;
};

/// Versioned CSV: "# vdb-demos 1" then episode,t,x,y,ax,ay,nx,ny,r with %.17g values.
void write_demonstrations(const Demonstrations& demos, std::ostream& os);
Demonstrations read_demonstrations(std::istream& is);

/// Replays the logged actions from each episode's first state (zero velocity)
/// and reports whether every logged successor is reproduced bit-for-bit.
bool replay_matches(const Demonstrations& demos, const MazeSpec& spec);

struct ExpertConfig {
  PolicySpec policy;
  PpoConfig ppo;
  int iterations = 100;
  int steps_per_iteration = 2000;
  int eval_episodes = 50;
  int demo_episodes = 100;
  double goal_fraction_required = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ExpertResult {
  PpoAgent agent;
  MetricsLog metrics;
  ReturnStats evaluation;  ///< deterministic (mean-action) policy
  Demonstrations demos;
  bool succeeded = false;  ///< goal_fraction ≥ goal_fraction_required
  std::string failure;     ///< reason when !succeeded
};

/// PPO on the ground-truth reward, then deterministic demonstrations.
ExpertResult train_expert(const MazeSpec& spec, const ExpertConfig& cfg);

/// Per-iteration metric columns shared by every PPO training loop.
std::vector<std::string> ppo_metric_columns();
std::vector<double> ppo_metric_row(const std::vector<Trajectory>& batch, const MazeSpec& spec, const PpoStats& s);

}  // namespace vdb

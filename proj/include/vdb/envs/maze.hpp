#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vdb/nn/rng.hpp"

namespace vdb {

/// Axis-aligned wall rectangle [x0, x1] × [y0, y1]. A zero-thickness
/// rectangle is a segment.
struct Wall {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(const Vec2& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
  bool operator==(const Wall&) const = default;
};

/// Point-mass maze. Actions are normalized to [−1, 1] per axis; the applied
/// acceleration is max_accel · a. Dynamics with dt = 1:
///   v' = (1 − damping) v + max_accel · a,   p' = p + v'
/// with the box edges and walls blocking motion one axis at a time.
struct MazeSpec {
  std::string name = "box";
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
  std::vector<Wall> walls;
  Vec2 start_mean = Vec2(0.0, -0.7);
  double start_radius = 0.05;
  Vec2 goal = Vec2(0.0, 0.7);
  double max_accel = 0.1;
  double damping = 0.0;
  int horizon = 100;
  double goal_tolerance = 0.1;  ///< goal region radius as a fraction of the maze width
  bool mirrored = false;

  double width() const { return x_max - x_min; }
  double goal_radius() const { return goal_tolerance * width(); }

  /// Start disc and goal in free space, positive extents, horizon ≥ 1.
  void validate() const;
  bool operator==(const MazeSpec&) const = default;
};

/// Reconstructed C-shaped maze: one wall across the middle with a gap on the
/// right, start below it, goal above it, both on the vertical centerline.
MazeSpec c_maze();
/// Reconstructed S-shaped maze: two staggered walls, twice the C-maze force limit.
MazeSpec s_maze();
/// Wall-free box with the C-maze dynamics.
MazeSpec open_box();
/// "c", "s" or "box", optionally prefixed with "mirrored-".
MazeSpec maze_by_name(std::string_view name);

/// Reflection about the vertical centerline x = (x_min + x_max) / 2. Toggles
/// `mirrored` and preserves every other field.
MazeSpec mirror(const MazeSpec& spec);
double mirror_x(const MazeSpec& spec, double x);

bool in_free_space(const MazeSpec& spec, const Vec2& p);

struct EnvState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  int t = 0;
};

struct StepResult {
  Vec2 observation = Vec2::Zero();  ///< position only; velocity is hidden
  double reward = 0.0;
  bool done = false;
};

/// Uniform start in the disc around start_mean. In a mirrored maze the x
/// offset is reflected, so the same draws give mirror-image starts.
EnvState reset(const MazeSpec& spec, Rng& rng);

Vec2 clamp_action(const Vec2& a);

/// r = −‖p − goal‖ − 10⁻³ ‖a‖² for the post-step position p and the clamped action a.
double ground_truth_reward(const MazeSpec& spec, const Vec2& position, const Vec2& action);

std::pair<EnvState, StepResult> step(const MazeSpec& spec, const EnvState& state, const Vec2& action);

bool in_goal_region(const MazeSpec& spec, const Vec2& p);

/// Action from the current observation; the rng supplies exploration noise.
using PolicyFn = std::function<Vec2(const Vec2& observation, Rng& rng)>;

/// Reflects a policy for use in the mirrored maze: π'(s) = M π(M s).
PolicyFn mirror_policy(const MazeSpec& original, PolicyFn policy);

struct Episode {
  std::vector<Vec2> observations;  ///< observation before each action, horizon entries
  std::vector<Vec2> actions;       ///< clamped actions
  std::vector<double> rewards;     ///< ground-truth rewards
  std::vector<Vec2> next_observations;
  Vec2 final_position = Vec2::Zero();

  double total_reward() const;
};

Episode rollout(const MazeSpec& spec, const PolicyFn& policy, Rng& rng);

struct ReturnStats {
  double mean = 0.0;
  double stddev = 0.0;
  double goal_fraction = 0.0;  ///< episodes ending inside the goal region
  std::vector<double> returns;
};

/// Episode e draws its start and policy noise from rng.split("episode", e).
ReturnStats evaluate_return(const PolicyFn& policy, const MazeSpec& spec, int episodes, const Rng& rng);

/// Plain-text geometry: one keyword per line.
void write_maze(const MazeSpec& spec, std::ostream& os);
MazeSpec read_maze(std::istream& is);

/// CSV with columns t,x,y,ax,ay,r.
void write_trajectory_csv(const Episode& episode, std::ostream& os);

}  // namespace vdb

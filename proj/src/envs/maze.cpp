#include "vdb/envs/maze.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace vdb {

namespace {

constexpr double kActionCost = 1e-3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Whether moving along one axis from `from` to `to` (other coordinate fixed)
// leaves the box or sweeps through a wall.
bool blocked(const MazeSpec& spec, const Vec2& from, const Vec2& to) {
  if (to.x() < spec.x_min || to.x() > spec.x_max || to.y() < spec.y_min || to.y() > spec.y_max) return true;
  const double lx = std::min(from.x(), to.x()), hx = std::max(from.x(), to.x());
  const double ly = std::min(from.y(), to.y()), hy = std::max(from.y(), to.y());
  for (const Wall& w : spec.walls)
    if (hx >= w.x0 && lx <= w.x1 && hy >= w.y0 && ly <= w.y1) return true;
  return false;
}

}  // namespace

void MazeSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("maze: box extents must be positive");
  if (horizon < 1) throw ConfigError("maze.horizon must be at least 1");
  if (!(max_accel > 0.0)) throw ConfigError("maze.max_accel must be positive");
  if (!(damping >= 0.0 && damping <= 1.0)) throw ConfigError("maze.damping must lie in [0, 1]");
  if (!(start_radius >= 0.0)) throw ConfigError("maze.start_radius must be >= 0");
  if (!(goal_tolerance > 0.0)) throw ConfigError("maze.goal_tolerance must be positive");
  for (const Wall& w : walls)
    if (w.x1 < w.x0 || w.y1 < w.y0) throw ConfigError("maze: wall with inverted corners");
  if (!in_free_space(*this, goal)) throw ConfigError("maze: goal is not in free space");
  // The start disc is checked on its centre and a ring of boundary points.
  for (int k = 0; k <= 16; ++k) {
    const double a = 2.0 * M_PI * k / 16;
    const Vec2 p = k == 16 ? start_mean : Vec2(start_mean + start_radius * Vec2(std::cos(a), std::sin(a)));
    if (!in_free_space(*this, p)) throw ConfigError("maze: start region is not in free space");
  }
}

MazeSpec c_maze() {
  MazeSpec m;
  m.name = "c";
  m.walls = {{-1.0, -0.05, 0.2, 0.05}};
  m.damping = 0.5;
  m.max_accel = 0.1;
  m.validate();
  return m;
}

MazeSpec s_maze() {
  MazeSpec m;
  m.name = "s";
  m.walls = {{-1.0, -0.38, 0.4, -0.28}, {-0.4, 0.28, 1.0, 0.38}};
  m.start_mean = Vec2(0.0, -0.75);
  m.goal = Vec2(0.0, 0.75);
  m.damping = 0.5;
  m.max_accel = 0.2;
  m.validate();
  return m;
}

MazeSpec open_box() {
  MazeSpec m;
  m.name = "box";
  m.damping = 0.5;
  m.validate();
  return m;
}

MazeSpec maze_by_name(std::string_view name) {
  constexpr std::string_view prefix = "mirrored-";
  if (name.substr(0, prefix.size()) == prefix) return mirror(maze_by_name(name.substr(prefix.size())));
  if (name == "c" || name == "c-maze") return c_maze();
  if (name == "s" || name == "s-maze") return s_maze();
  if (name == "box") return open_box();
  throw ConfigError("maze: unknown maze '" + std::string(name) + "'");
}

double mirror_x(const MazeSpec& spec, double x) { return (spec.x_min + spec.x_max) - x; }

MazeSpec mirror(const MazeSpec& spec) {
  MazeSpec m = spec;
  for (Wall& w : m.walls) {
    const double a = mirror_x(spec, w.x1), b = mirror_x(spec, w.x0);
    w.x0 = a;
    w.x1 = b;
  }
  m.start_mean.x() = mirror_x(spec, spec.start_mean.x());
  m.goal.x() = mirror_x(spec, spec.goal.x());
  m.mirrored = !spec.mirrored;
  return m;
}

bool in_free_space(const MazeSpec& spec, const Vec2& p) {
  if (p.x() < spec.x_min || p.x() > spec.x_max || p.y() < spec.y_min || p.y() > spec.y_max) return false;
  for (const Wall& w : spec.walls)
    if (w.contains(p)) return false;
  return true;
}

EnvState reset(const MazeSpec& spec, Rng& rng) {
  // Uniform in the disc: radius √u · R, angle uniform.
  const double r = spec.start_radius * std::sqrt(rng.uniform());
  const double a = 2.0 * M_PI * rng.uniform();
  double ox = r * std::cos(a);
  const double oy = r * std::sin(a);
  if (spec.mirrored) ox = -ox;
  EnvState s;
  s.position = Vec2(spec.start_mean.x() + ox, spec.start_mean.y() + oy);
  return s;
}

Vec2 clamp_action(const Vec2& a) { return a.cwiseMax(-1.0).cwiseMin(1.0); }

double ground_truth_reward(const MazeSpec& spec, const Vec2& position, const Vec2& action) {
  return -(position - spec.goal).norm() - kActionCost * action.squaredNorm();
}

std::pair<EnvState, StepResult> step(const MazeSpec& spec, const EnvState& state, const Vec2& action) {
  const Vec2 a = clamp_action(action);
  EnvState next = state;
  next.velocity = (1.0 - spec.damping) * state.velocity + spec.max_accel * a;
  Vec2 p = state.position;
  const Vec2 px(p.x() + next.velocity.x(), p.y());
  if (blocked(spec, p, px)) {
    next.velocity.x() = 0.0;
  } else {
    p = px;
  }
  const Vec2 py(p.x(), p.y() + next.velocity.y());
  if (blocked(spec, p, py)) {
    next.velocity.y() = 0.0;
  } else {
    p = py;
  }
  next.position = p;
  next.t = state.t + 1;
  StepResult r;
  r.observation = p;
  r.reward = ground_truth_reward(spec, p, a);
  r.done = next.t >= spec.horizon;
  return {next, r};
}

bool in_goal_region(const MazeSpec& spec, const Vec2& p) { return (p - spec.goal).norm() <= spec.goal_radius(); }

PolicyFn mirror_policy(const MazeSpec& original, PolicyFn policy) {
  return [original, policy = std::move(policy)](const Vec2& obs, Rng& rng) {
    const Vec2 a = policy(Vec2(mirror_x(original, obs.x()), obs.y()), rng);
    return Vec2(-a.x(), a.y());
  };
}

double Episode::total_reward() const {
  double s = 0.0;
  for (double r : rewards) s += r;
  return s;
}

Episode rollout(const MazeSpec& spec, const PolicyFn& policy, Rng& rng) {
  Episode ep;
  EnvState s = reset(spec, rng);
  for (;;) {
    const Vec2 obs = s.position;
    const Vec2 a = clamp_action(policy(obs, rng));
    const auto [next, res] = step(spec, s, a);
    ep.observations.push_back(obs);
    ep.actions.push_back(a);
    ep.rewards.push_back(res.reward);
    ep.next_observations.push_back(res.observation);
    s = next;
    if (res.done) break;
  }
  ep.final_position = s.position;
  return ep;
}

ReturnStats evaluate_return(const PolicyFn& policy, const MazeSpec& spec, int episodes, const Rng& rng) {
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  ReturnStats st;
  int reached = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng er = rng.split("episode", static_cast<std::uint64_t>(e));
    const Episode ep = rollout(spec, policy, er);
    st.returns.push_back(ep.total_reward());
    reached += in_goal_region(spec, ep.final_position) ? 1 : 0;
  }
  for (double r : st.returns) st.mean += r / episodes;
  for (double r : st.returns) st.stddev += (r - st.mean) * (r - st.mean) / episodes;
  st.stddev = std::sqrt(st.stddev);
  st.goal_fraction = static_cast<double>(reached) / episodes;
  return st;
}

void write_maze(const MazeSpec& spec, std::ostream& os) {
  os << "maze " << spec.name << '\n'
     << "box " << fmt(spec.x_min) << ' ' << fmt(spec.x_max) << ' ' << fmt(spec.y_min) << ' ' << fmt(spec.y_max) << '\n'
     << "start " << fmt(spec.start_mean.x()) << ' ' << fmt(spec.start_mean.y()) << ' ' << fmt(spec.start_radius)
     << '\n'
     << "goal " << fmt(spec.goal.x()) << ' ' << fmt(spec.goal.y()) << '\n'
     << "goal_tolerance " << fmt(spec.goal_tolerance) << '\n'
     << "max_accel " << fmt(spec.max_accel) << '\n'
     << "damping " << fmt(spec.damping) << '\n'
     << "horizon " << spec.horizon << '\n'
     << "mirrored " << (spec.mirrored ? 1 : 0) << '\n';
  for (const Wall& w : spec.walls)
    os << "wall " << fmt(w.x0) << ' ' << fmt(w.y0) << ' ' << fmt(w.x1) << ' ' << fmt(w.y1) << '\n';
}

MazeSpec read_maze(std::istream& is) {
  MazeSpec m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "maze") {
      ls >> m.name;
    } else if (key == "box") {
      ls >> m.x_min >> m.x_max >> m.y_min >> m.y_max;
    } else if (key == "start") {
      ls >> m.start_mean.x() >> m.start_mean.y() >> m.start_radius;
    } else if (key == "goal") {
      ls >> m.goal.x() >> m.goal.y();
    } else if (key == "goal_tolerance") {
      ls >> m.goal_tolerance;
    } else if (key == "max_accel") {
      ls >> m.max_accel;
    } else if (key == "damping") {
      ls >> m.damping;
    } else if (key == "horizon") {
      ls >> m.horizon;
    } else if (key == "mirrored") {
      int f = 0;
      ls >> f;
      m.mirrored = f != 0;
    } else if (key == "wall") {
      Wall w;
      ls >> w.x0 >> w.y0 >> w.x1 >> w.y1;
      m.walls.push_back(w);
    } else {
      throw ConfigError("maze file: unknown key '" + key + "'");
    }
    if (ls.fail()) throw ConfigError("maze file: malformed line '" + line + "'");
  }
  m.validate();
  return m;
}

void write_trajectory_csv(const Episode& episode, std::ostream& os) {
  os << "t,x,y,ax,ay,r\n";
  for (std::size_t t = 0; t < episode.rewards.size(); ++t)
    os << t << ',' << fmt(episode.observations[t].x()) << ',' << fmt(episode.observations[t].y()) << ','
       << fmt(episode.actions[t].x()) << ',' << fmt(episode.actions[t].y()) << ',' << fmt(episode.rewards[t]) << '\n';
}

}  // namespace vdb

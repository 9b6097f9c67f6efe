#include "rover/simkin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rover {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline float clamp_unit(float v) { return std::min(1.0f, std::max(-1.0f, v)); }
}  // namespace

void RoverGeometry::validate() const {
  const double half_diag = 0.5 * std::hypot(footprint_x_m, footprint_y_m);
  if (collision_radius_m < 0.9 * half_diag)
    throw std::invalid_argument("collision radius smaller than 0.9 x half footprint diagonal");
}

RoverGeometry RoverGeometry::six_wheel() {
  RoverGeometry g;
  const double hx = g.footprint_x_m / 2.0, hy = g.footprint_y_m / 2.0;
  g.wheel_offsets = {{{hx, hy}, {hx, -hy}, {0.0, hy}, {0.0, -hy}, {-hx, hy}, {-hx, -hy}}};
  g.steerable = {true, true, false, false, true, true};
  g.validate();
  return g;
}

std::array<WheelSetpoint, 6> ackermann_setpoints(const Action& action, const RoverGeometry& geom,
                                                 const SimConfig& sim) {
  const double v = clamp_unit(action.v_lin) * sim.v_lin_max_mps;
  const double w = clamp_unit(action.v_ang) * sim.v_ang_max_rps;

  std::array<WheelSetpoint, 6> out{};

  // wheel velocity -> (steer in (-pi/2, pi/2], signed speed)
  auto from_velocity = [](double vx, double vy) {
    WheelSetpoint s;
    const double mag = std::hypot(vx, vy);
    if (mag < 1e-12) return s;
    double ang = std::atan2(vy, vx);
    double sign = 1.0;
    if (ang > kPi / 2.0) {
      ang -= kPi;
      sign = -1.0;
    } else if (ang <= -kPi / 2.0) {
      ang += kPi;
      sign = -1.0;
    }
    s.steer_rad = ang;
    s.speed_mps = sign * mag;
    return s;
  };

  const double ratio = std::fabs(v) / std::max(std::fabs(w), sim.ratio_eps);
  if (ratio < sim.point_turn_ratio) {
    // rotate about the rover center: velocity = w x p
    for (int i = 0; i < 6; ++i) {
      const auto& p = geom.wheel_offsets[i];
      out[i] = from_velocity(-w * p[1], w * p[0]);
    }
    return out;
  }
  if (std::fabs(w) < 1e-12) {
    for (int i = 0; i < 6; ++i) out[i] = WheelSetpoint{0.0, v};
    return out;
  }
  // instantaneous center of rotation on the middle-axle line at (0, v/w)
  const double r = v / w;
  for (int i = 0; i < 6; ++i) {
    const auto& p = geom.wheel_offsets[i];
    out[i] = from_velocity(w * (r - p[1]), w * p[0]);
  }
  return out;
}

Contact check_collision(const RoverState& state, const TerrainMap& map, const RoverGeometry& geom,
                        const SimConfig& sim) {
  if (map.rocks().empty()) return Contact::none;
  static thread_local std::vector<int> cand;
  map.rocks_near_idx(state.x, state.y, geom.collision_radius_m, cand);
  if (cand.empty()) return Contact::none;

  bool climbable = false;
  for (int k = 0; k < sim.collision_rays; ++k) {
    const double ang = state.yaw + kTwoPi * k / sim.collision_rays;
    const double dx = std::cos(ang), dy = std::sin(ang);
    for (int id : cand) {
      const Rock& rock = map.rock(id);
      // distance from the rock center to the ray segment [0, collision_radius]
      const double rx = rock.cx - state.x, ry = rock.cy - state.y;
      double t = rx * dx + ry * dy;
      t = std::clamp(t, 0.0, geom.collision_radius_m);
      const double ex = rx - t * dx, ey = ry - t * dy;
      if (ex * ex + ey * ey <= rock.radius_m * rock.radius_m) {
        if (!rock.climbable) return Contact::fatal;
        climbable = true;
      }
    }
  }
  return climbable ? Contact::climbable_contact : Contact::none;
}

RoverState reset_state(double spawn_x, double spawn_y, const TerrainMap& map,
                       const SimConfig& sim, Rng& rng) {
  RoverState s;
  s.spawn_x = s.x = spawn_x;
  s.spawn_y = s.y = spawn_y;
  s.yaw = wrap_pi(rng.uniform(-kPi, kPi));
  s.prev_action = Action{0.0f, 0.0f};
  s.steps_elapsed = 0;
  s.alive = true;

  for (int attempt = 0; attempt < sim.goal_resample_limit; ++attempt) {
    const double ang = rng.uniform(0.0, kTwoPi);
    const double gx = spawn_x + sim.goal_spawn_radius_m * std::cos(ang);
    const double gy = spawn_y + sim.goal_spawn_radius_m * std::sin(ang);
    bool clear = true;
    for (const Rock& r : map.rocks_near(gx, gy, sim.goal_rock_clearance_m))
      if (!r.climbable) {
        clear = false;
        break;
      }
    if (clear) {
      s.goal_x = gx;
      s.goal_y = gy;
      return s;
    }
  }
  throw std::runtime_error("goal sampling failed: terrain too dense around spawn");
}

void integrate_control_step(RoverState& state, const Action& a, const SimConfig& sim) {
  const double v = clamp_unit(a.v_lin) * sim.v_lin_max_mps;
  const double w = clamp_unit(a.v_ang) * sim.v_ang_max_rps;
  const double ratio = std::fabs(v) / std::max(std::fabs(w), sim.ratio_eps);
  const bool point_turn = ratio < sim.point_turn_ratio;
  for (int k = 0; k < sim.substeps_per_control; ++k) {
    if (!point_turn) {
      state.x += v * std::cos(state.yaw) * sim.physics_dt_s;
      state.y += v * std::sin(state.yaw) * sim.physics_dt_s;
    }
    state.yaw = wrap_pi(state.yaw + w * sim.physics_dt_s);
  }
}

StepOutcome step_env(RoverState& state, const Action& action, const TerrainMap& map,
                     const SimConfig& sim, const RoverGeometry& geom,
                     const RewardWeights& rewards, double edge_margin_m) {
  if (!std::isfinite(action.v_lin) || !std::isfinite(action.v_ang))
    throw std::invalid_argument("NaN action component");
  const Action applied{clamp_unit(action.v_lin), clamp_unit(action.v_ang)};
  const Action prev = state.prev_action;

  integrate_control_step(state, applied, sim);
  state.steps_elapsed += 1;

  const double dx = state.goal_x - state.x, dy = state.goal_y - state.y;
  const double d = std::hypot(dx, dy);
  const double theta = wrap_pi(std::atan2(dy, dx) - state.yaw);

  StepOutcome out;
  const bool out_of_bounds = state.x < edge_margin_m || state.y < edge_margin_m ||
                             state.x > map.params().extent_m - edge_margin_m ||
                             state.y > map.params().extent_m - edge_margin_m;
  if (out_of_bounds || check_collision(state, map, geom, sim) == Contact::fatal)
    out.cause = Termination::collision;
  else if (d <= sim.goal_radius_m)
    out.cause = Termination::goal_reached;
  else if (state.steps_elapsed >= sim.max_episode_steps)
    out.cause = Termination::timeout;

  out.reward = total_reward(d, applied, prev, theta, out.cause, rewards);
  state.prev_action = applied;
  return out;
}

// ---------------------------------------------------------------------------
// VecEnv
// ---------------------------------------------------------------------------

namespace {

/// Fixed spawn slots on a grid in the map interior, leaving room for the goal
/// circle and the observation margin.
std::vector<std::array<double, 2>> spawn_grid(const TerrainMap& map, const SimConfig& sim,
                                              double edge_margin, int n) {
  const double extent = map.params().extent_m;
  const double keep_out = edge_margin + sim.goal_spawn_radius_m + 0.5;
  const double lo = keep_out, hi = extent - keep_out;
  if (hi <= lo)
    throw std::invalid_argument("map too small for the goal circle plus sampling margin");
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::vector<std::array<double, 2>> slots;
  for (int i = 0; i < n; ++i) {
    const int ix = i % side, iy = i / side;
    const double fx = side == 1 ? 0.5 : static_cast<double>(ix) / (side - 1);
    const double fy = side == 1 ? 0.5 : static_cast<double>(iy) / (side - 1);
    slots.push_back({lo + fx * (hi - lo), lo + fy * (hi - lo)});
  }
  return slots;
}

/// Moves a blocked spawn point along a deterministic spiral until the rover
/// no longer starts inside a non-climbable rock.
std::array<double, 2> clear_spawn(std::array<double, 2> p, const TerrainMap& map,
                                  const RoverGeometry& geom, const SimConfig& sim,
                                  double edge_margin) {
  const double extent = map.params().extent_m;
  auto blocked = [&](double x, double y) {
    RoverState probe;
    probe.x = x;
    probe.y = y;
    return check_collision(probe, map, geom, sim) == Contact::fatal;
  };
  if (!blocked(p[0], p[1])) return p;
  const double keep_out = edge_margin + sim.goal_spawn_radius_m + 0.5;
  for (int step = 1; step < 200; ++step) {
    const double r = 0.25 * step;
    const double ang = 2.39996322972865332 * step;  // golden-angle spiral
    const double x = std::clamp(p[0] + r * std::cos(ang), keep_out, extent - keep_out);
    const double y = std::clamp(p[1] + r * std::sin(ang), keep_out, extent - keep_out);
    if (!blocked(x, y)) return {x, y};
  }
  throw std::runtime_error("could not find a collision-free spawn slot");
}

}  // namespace

std::vector<std::array<double, 2>> spawn_slots(const TerrainMap& map, const SimConfig& sim,
                                               const RoverGeometry& geom, double edge_margin_m,
                                               int n) {
  auto slots = spawn_grid(map, sim, edge_margin_m, n);
  for (auto& s : slots) s = clear_spawn(s, map, geom, sim, edge_margin_m);
  return slots;
}

VecEnv::VecEnv(const TerrainMap& map, SamplePattern pattern, SimConfig sim, RoverGeometry geom,
               RewardWeights rewards, int n_envs, uint64_t seed, bool parallel)
    : map_(&map),
      pattern_(std::move(pattern)),
      sim_(sim),
      geom_(geom),
      rewards_(rewards),
      parallel_(parallel) {
  if (n_envs < 1) throw std::invalid_argument("need at least one environment");
  geom_.validate();
  rewards_.validate();
  edge_margin_ = pattern_.margin_m + sim_.edge_safety_m;

  auto slots = spawn_slots(map, sim_, geom_, edge_margin_, n_envs);
  states_.resize(n_envs);
  returns_.assign(n_envs, 0.0);
  reset_rngs_.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    reset_rngs_.emplace_back(derive_seed(seed, "env_reset", static_cast<uint64_t>(i)));
    states_[i] = reset_state(slots[i][0], slots[i][1], map, sim_, reset_rngs_[i]);
  }
  just_reset_.resize(n_envs);
  for (int i = 0; i < n_envs; ++i) just_reset_[i] = i;
}

void VecEnv::reset_all() {
  just_reset_.clear();
  for (int i = 0; i < size(); ++i) {
    states_[i] = reset_state(states_[i].spawn_x, states_[i].spawn_y, *map_, sim_, reset_rngs_[i]);
    returns_[i] = 0.0;
    just_reset_.push_back(i);
  }
}

std::vector<Observation> VecEnv::observe_all() const {
  std::vector<Observation> out(states_.size());
#pragma omp parallel for schedule(static) if (parallel_)
  for (int i = 0; i < size(); ++i) out[i] = observe(states_[i], *map_, pattern_);
  return out;
}

std::vector<StepResult> VecEnv::step(const std::vector<Action>& actions) {
  if (actions.size() != states_.size())
    throw std::invalid_argument("action batch size does not match environment count");
  for (const Action& a : actions)
    if (!std::isfinite(a.v_lin) || !std::isfinite(a.v_ang))
      throw std::invalid_argument("NaN action component");

  const int n = size();
  std::vector<StepResult> results(n);
  std::vector<EpisodeStats> finished(n);
  std::vector<unsigned char> did_finish(n, 0);
  std::exception_ptr error;

#pragma omp parallel for schedule(static) if (parallel_)
  for (int i = 0; i < n; ++i) {
    try {
      RoverState& s = states_[i];
      const StepOutcome outcome =
          step_env(s, actions[i], *map_, sim_, geom_, rewards_, edge_margin_);
      returns_[i] += outcome.reward;

      StepResult& res = results[i];
      res.reward = static_cast<float>(outcome.reward);
      res.terminated = outcome.cause != Termination::none;
      res.cause = outcome.cause;

      if (res.terminated) {
        finished[i] = EpisodeStats{i, returns_[i], s.steps_elapsed, outcome.cause};
        did_finish[i] = 1;
        returns_[i] = 0.0;
        s = reset_state(s.spawn_x, s.spawn_y, *map_, sim_, reset_rngs_[i]);
      }
      res.observation = observe(s, *map_, pattern_);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  just_reset_.clear();
  for (int i = 0; i < n; ++i)
    if (did_finish[i]) {
      completed_.push_back(finished[i]);
      just_reset_.push_back(i);
    }
  return results;
}

std::vector<EpisodeStats> VecEnv::drain_episodes() {
  std::vector<EpisodeStats> out;
  out.swap(completed_);
  return out;
}

}  // namespace rover

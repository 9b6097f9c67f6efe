#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rover/obs.hpp"
#include "rover/reward.hpp"
#include "rover/rng.hpp"
#include "rover/terrain.hpp"

namespace rover {

struct RoverGeometry {
  double footprint_x_m = 1.03;
  double footprint_y_m = 1.05;
  // wheel order: FL, FR, ML, MR, RL, RR; x forward, y left
  std::array<std::array<double, 2>, 6> wheel_offsets;
  std::array<bool, 6> steerable;
  double collision_radius_m = 0.74;

  void validate() const;
  static RoverGeometry six_wheel();
};

struct SimConfig {
  double v_lin_max_mps = 0.5;
  double v_ang_max_rps = 0.6;
  double physics_dt_s = 1.0 / 60.0;
  int substeps_per_control = 12;  // 60 Hz physics, 5 Hz control
  double point_turn_ratio = 0.15;
  double ratio_eps = 1e-6;
  double goal_radius_m = 0.25;
  int max_episode_steps = 600;
  double goal_spawn_radius_m = 9.0;
  double goal_rock_clearance_m = 1.0;
  int goal_resample_limit = 100;
  int collision_rays = 16;
  double edge_safety_m = 0.1;  // added to the pattern margin for the kill boundary
};

struct WheelSetpoint {
  double steer_rad = 0;
  double speed_mps = 0;
};

/// Per-wheel steering angles and drive speeds for the commanded twist. In
/// Ackermann mode every wheel velocity is tangent to a circle about a common
/// instantaneous center of rotation on the middle-axle line; below the
/// point-turn ratio the wheels align tangent to a rover-centered circle.
std::array<WheelSetpoint, 6> ackermann_setpoints(const Action& action, const RoverGeometry& geom,
                                                 const SimConfig& sim);

enum class Contact { none, climbable_contact, fatal };

/// Casts `collision_rays` radial segments of length collision_radius_m from
/// the rover center and classifies the nearest rock contact. Climbable
/// contacts are reported but non-fatal.
Contact check_collision(const RoverState& state, const TerrainMap& map,
                        const RoverGeometry& geom, const SimConfig& sim);

struct StepResult {
  Observation observation;
  float reward = 0;
  bool terminated = false;
  Termination cause = Termination::none;
};

/// Spawns the rover at its fixed slot with uniform random yaw and a goal
/// drawn uniformly on the spawn circle, re-sampled until it clears all
/// non-climbable rocks. Throws after goal_resample_limit attempts.
RoverState reset_state(double spawn_x, double spawn_y, const TerrainMap& map,
                       const SimConfig& sim, Rng& rng);

struct EpisodeStats {
  int env = 0;
  double episode_return = 0;
  int steps = 0;
  Termination cause = Termination::none;
};

struct StepOutcome {
  double reward = 0;
  Termination cause = Termination::none;
};

/// Core single-environment transition: clamps the action, integrates one
/// control period, evaluates termination (fatal rock contact or leaving the
/// observable region => collision; goal radius; step limit) and the reward.
/// Does not reset or observe.
StepOutcome step_env(RoverState& state, const Action& action, const TerrainMap& map,
                     const SimConfig& sim, const RoverGeometry& geom,
                     const RewardWeights& rewards, double edge_margin_m);

/// Fixed spawn positions on a grid in the map interior, nudged off any
/// non-climbable rock. Leaves room for the goal circle plus `edge_margin_m`.
std::vector<std::array<double, 2>> spawn_slots(const TerrainMap& map, const SimConfig& sim,
                                               const RoverGeometry& geom, double edge_margin_m,
                                               int n);

/// Vectorized environment: N independent rovers on one immutable map. Each
/// slot owns its RNG stream, so batch-parallel stepping is bitwise equal to
/// sequential stepping and independent of worker count.
class VecEnv {
 public:
  VecEnv(const TerrainMap& map, SamplePattern pattern, SimConfig sim, RoverGeometry geom,
         RewardWeights rewards, int n_envs, uint64_t seed, bool parallel = true);

  int size() const { return static_cast<int>(states_.size()); }
  const RoverState& state(int i) const { return states_[i]; }
  const SamplePattern& pattern() const { return pattern_; }
  const SimConfig& sim() const { return sim_; }
  const TerrainMap& map() const { return *map_; }

  void set_parallel(bool p) { parallel_ = p; }

  std::vector<Observation> observe_all() const;

  /// Steps every env by one control period (12 physics substeps), computes
  /// rewards and termination, and auto-resets finished episodes. The returned
  /// observation is the one the next action should be computed from.
  std::vector<StepResult> step(const std::vector<Action>& actions);

  /// Envs that were reset during the latest step (or by reset_all).
  const std::vector<int>& just_reset() const { return just_reset_; }

  /// Completed-episode statistics accumulated since the last drain.
  std::vector<EpisodeStats> drain_episodes();

  void reset_all();

 private:
  const TerrainMap* map_;
  SamplePattern pattern_;
  SimConfig sim_;
  RoverGeometry geom_;
  RewardWeights rewards_;
  bool parallel_ = true;
  std::vector<RoverState> states_;
  std::vector<Rng> reset_rngs_;
  std::vector<double> returns_;  // running episode return per env
  std::vector<EpisodeStats> completed_;
  std::vector<int> just_reset_;
  double edge_margin_ = 0;
};

/// One control step of the planar unicycle model; exposed for the kinematics
/// tests. Does not evaluate rewards or termination.
void integrate_control_step(RoverState& state, const Action& clamped, const SimConfig& sim);

}  // namespace rover

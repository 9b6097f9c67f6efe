#pragma once

#include <array>
#include <vector>

#include "rover/terrain.hpp"

namespace rover {

struct Action {
  float v_lin = 0.0f;  // normalized linear velocity, [-1, 1]
  float v_ang = 0.0f;  // normalized angular velocity, [-1, 1]
};

struct RoverState {
  double x = 0, y = 0;
  double yaw = 0;  // (-pi, pi]
  Action prev_action;
  double goal_x = 0, goal_y = 0;
  int steps_elapsed = 0;
  bool alive = true;
  double spawn_x = 0, spawn_y = 0;
};

struct PatternConfig {
  double dense_halfwidth_m = 1.0;
  double dense_pitch_m = 0.05;
  double sparse_pitch_m = 0.15;
  double sparse_min_m = 1.0;
  double sparse_max_m = 4.0;

  void validate() const;
  /// Reduced footprint for fast desk-scale experiments.
  static PatternConfig compact();
  /// Minimal footprint for unit-test-scale training.
  static PatternConfig tiny();
};

/// Fixed body-frame sample offsets: a dense square grid around the rover and
/// a sparse annulus out to the sensing range. Ordering is row-major (y outer,
/// x inner) and deterministic for a given config.
struct SamplePattern {
  PatternConfig config;
  std::vector<std::array<double, 2>> dense;
  std::vector<std::array<double, 2>> sparse;
  double margin_m = 0;  // max offset norm; required clearance from map edges

  int k_dense() const { return static_cast<int>(dense.size()); }
  int k_sparse() const { return static_cast<int>(sparse.size()); }
};

SamplePattern build_pattern(const PatternConfig& config);

/// Proprioceptive tuple plus egocentric heightmaps, heights relative to the
/// rover's own ground height. Serialization order everywhere is
/// (distance, heading, prev_action[2], dense, sparse).
struct Observation {
  float distance_m = 0;
  float heading_rad = 0;  // positive when the goal is to the rover's left
  Action prev_action;
  std::vector<float> dense;
  std::vector<float> sparse;
};

double wrap_pi(double a);

/// Throws std::out_of_range if the rover is closer than the pattern margin to
/// a map edge (never clamps).
Observation observe(const RoverState& state, const TerrainMap& map, const SamplePattern& pattern);

}  // namespace rover

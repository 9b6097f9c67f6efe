#pragma once

#include <cmath>
#include <stdexcept>

#include "rover/obs.hpp"

namespace rover {

enum class Termination { none, goal_reached, collision, timeout };

/// Reward weights are stored as magnitudes; the penalty terms apply their own
/// minus signs, so each penalty is negative exactly once.
struct RewardWeights {
  double w_d = 1.0;
  double w_a = 0.01;
  double w_v = 0.005;
  double w_h = 0.05;
  double collision_penalty = -10.0;
  double heading_limit_rad = 115.0 * 3.14159265358979323846 / 180.0;

  void validate() const {
    if (w_d < 0 || w_a < 0 || w_v < 0 || w_h < 0)
      throw std::invalid_argument("reward weights must be non-negative magnitudes");
    if (collision_penalty > 0) throw std::invalid_argument("collision_penalty must be <= 0");
  }
};

/// w_d / (1 + d/3): 1 at the goal, decaying with distance.
inline double distance_reward(double d, const RewardWeights& w) {
  if (!(d >= 0)) throw std::invalid_argument("distance must be non-negative");
  return w.w_d / (1.0 + d / 3.0);
}

/// -w_a * sum_i (a_i - a_prev_i)^2 over the two action components.
inline double oscillation_penalty(const Action& a, const Action& a_prev,
                                  const RewardWeights& w) {
  const double d0 = static_cast<double>(a.v_lin) - a_prev.v_lin;
  const double d1 = static_cast<double>(a.v_ang) - a_prev.v_ang;
  return -w.w_a * (d0 * d0 + d1 * d1);
}

/// -w_v * |v_lin| when driving backwards, else 0.
inline double velocity_penalty(double v_lin, const RewardWeights& w) {
  return v_lin < 0.0 ? -w.w_v * std::fabs(v_lin) : 0.0;
}

/// -w_h * |theta| when the goal heading magnitude exceeds the limit, else 0.
inline double heading_penalty(double theta, const RewardWeights& w) {
  return std::fabs(theta) > w.heading_limit_rad ? -w.w_h * std::fabs(theta) : 0.0;
}

inline double total_reward(double d, const Action& a, const Action& a_prev, double theta,
                           Termination cause, const RewardWeights& w) {
  double r = distance_reward(d, w) + oscillation_penalty(a, a_prev, w) +
             velocity_penalty(a.v_lin, w) + heading_penalty(theta, w);
  if (cause == Termination::collision) r += w.collision_penalty;
  return r;
}

}  // namespace rover

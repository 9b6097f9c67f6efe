#pragma once

// Independent oracles shared by the unit tests and the acceptance suite.
// These deliberately re-derive results along a different route than the
// implementation they check.

#include <array>
#include <cmath>
#include <vector>

#include "rover/simkin.hpp"

namespace rovertest {

/// Max pairwise distance between intersections of the steered wheels' axle
/// lines. For a consistent setpoint assignment every well-conditioned pair
/// meets at the instantaneous center of rotation. Near-parallel pairs
/// (sin of the axle angle difference below 1e-4) are skipped: their
/// intersection is numerically unbounded and carries no evidence either way
/// (coincident diagonal axles in a point turn, near-straight driving).
inline double icr_spread(const std::array<rover::WheelSetpoint, 6>& sp,
                         const rover::RoverGeometry& g) {
  std::vector<std::array<long double, 4>> lines;  // px, py, axle dir x, axle dir y
  for (int i = 0; i < 6; ++i) {
    if (!g.steerable[i]) continue;
    const long double a = sp[i].steer_rad;
    lines.push_back({(long double)g.wheel_offsets[i][0], (long double)g.wheel_offsets[i][1],
                     -sinl(a), cosl(a)});
  }
  std::vector<std::array<long double, 2>> pts;
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      const auto& A = lines[i];
      const auto& B = lines[j];
      const long double det = A[2] * (-B[3]) - (-B[2]) * A[3];
      if (fabsl(det) < 1e-4l) continue;
      const long double rx = B[0] - A[0], ry = B[1] - A[1];
      const long double t = (rx * (-B[3]) - (-B[2]) * ry) / det;
      pts.push_back({A[0] + t * A[2], A[1] + t * A[3]});
    }
  long double spread = 0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      spread = std::max(spread, hypotl(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
  return double(spread);
}

/// Collision classification by quadratic ray-circle intersection against
/// every rock (no spatial index, no point-to-segment distances).
inline rover::Contact collision_oracle(const rover::RoverState& s,
                                       const std::vector<rover::Rock>& rocks,
                                       const rover::RoverGeometry& g,
                                       const rover::SimConfig& sim) {
  bool fatal = false, climb = false;
  for (int k = 0; k < sim.collision_rays; ++k) {
    const double ang = s.yaw + 2.0 * 3.14159265358979323846 * k / sim.collision_rays;
    const double dx = std::cos(ang), dy = std::sin(ang);
    for (const rover::Rock& r : rocks) {
      const double ox = s.x - r.cx, oy = s.y - r.cy;
      const double b = 2.0 * (ox * dx + oy * dy);
      const double c = ox * ox + oy * oy - r.radius_m * r.radius_m;
      const double disc = b * b - 4.0 * c;
      if (disc < 0) continue;
      const double sq = std::sqrt(disc);
      const double t0 = (-b - sq) / 2.0, t1 = (-b + sq) / 2.0;
      if (t0 <= g.collision_radius_m && t1 >= 0.0) (r.climbable ? climb : fatal) = true;
    }
  }
  return fatal ? rover::Contact::fatal
               : (climb ? rover::Contact::climbable_contact : rover::Contact::none);
}

/// Brute-force generalized advantage estimate: the nested discounted sum
/// A_t = sum_l (gamma*lambda)^l delta_{t+l}, truncated at episode boundaries.
inline std::vector<double> gae_oracle(const std::vector<double>& rewards,
                                      const std::vector<double>& values,
                                      const std::vector<unsigned char>& dones,
                                      double bootstrap_value, double gamma, double lambda) {
  const int T = static_cast<int>(rewards.size());
  auto value_after = [&](int t) {
    return t + 1 < T ? values[t + 1] : bootstrap_value;
  };
  std::vector<double> adv(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double acc = 0.0, scale = 1.0;
    for (int l = t; l < T; ++l) {
      const double mask = dones[l] ? 0.0 : 1.0;
      const double delta = rewards[l] + gamma * mask * value_after(l) - values[l];
      acc += scale * delta;
      if (dones[l]) break;
      scale *= gamma * lambda;
    }
    adv[t] = acc;
  }
  return adv;
}

}  // namespace rovertest

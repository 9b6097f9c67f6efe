#include "rover/obs.hpp"

#include <cmath>
#include <stdexcept>

namespace rover {

void PatternConfig::validate() const {
  if (dense_halfwidth_m <= 0 || dense_pitch_m <= 0 || sparse_pitch_m <= 0 || sparse_min_m < 0 ||
      sparse_max_m <= sparse_min_m)
    throw std::invalid_argument("invalid sample pattern config");
}

PatternConfig PatternConfig::compact() {
  PatternConfig c;
  c.dense_halfwidth_m = 0.5;
  c.dense_pitch_m = 0.05;
  c.sparse_pitch_m = 0.15;
  c.sparse_min_m = 0.5;
  c.sparse_max_m = 2.0;
  return c;
}

PatternConfig PatternConfig::tiny() {
  PatternConfig c;
  c.dense_halfwidth_m = 0.2;
  c.dense_pitch_m = 0.1;
  c.sparse_pitch_m = 0.3;
  c.sparse_min_m = 0.3;
  c.sparse_max_m = 0.9;
  return c;
}

SamplePattern build_pattern(const PatternConfig& config) {
  config.validate();
  SamplePattern p;
  p.config = config;

  const int nd = static_cast<int>(std::floor(config.dense_halfwidth_m / config.dense_pitch_m +
                                             1e-9));
  for (int iy = -nd; iy <= nd; ++iy)
    for (int ix = -nd; ix <= nd; ++ix)
      p.dense.push_back({ix * config.dense_pitch_m, iy * config.dense_pitch_m});

  const int ns = static_cast<int>(std::floor(config.sparse_max_m / config.sparse_pitch_m + 1e-9));
  for (int iy = -ns; iy <= ns; ++iy)
    for (int ix = -ns; ix <= ns; ++ix) {
      const double x = ix * config.sparse_pitch_m, y = iy * config.sparse_pitch_m;
      const double r = std::hypot(x, y);
      if (r > config.sparse_min_m && r <= config.sparse_max_m) p.sparse.push_back({x, y});
    }

  double margin = 0;
  for (const auto& o : p.dense) margin = std::max(margin, std::hypot(o[0], o[1]));
  for (const auto& o : p.sparse) margin = std::max(margin, std::hypot(o[0], o[1]));
  p.margin_m = margin;
  return p;
}

double wrap_pi(double a) {
  a = std::fmod(a, 6.283185307179586476925286766559);
  if (a > 3.14159265358979323846) a -= 6.283185307179586476925286766559;
  if (a <= -3.14159265358979323846) a += 6.283185307179586476925286766559;
  return a;
}

Observation observe(const RoverState& state, const TerrainMap& map,
                    const SamplePattern& pattern) {
  const double extent = map.params().extent_m;
  const double m = pattern.margin_m;
  if (state.x < m || state.y < m || state.x > extent - m || state.y > extent - m)
    throw std::out_of_range("rover too close to map edge for heightmap sampling");

  Observation o;
  const double dx = state.goal_x - state.x, dy = state.goal_y - state.y;
  o.distance_m = static_cast<float>(std::hypot(dx, dy));
  o.heading_rad = static_cast<float>(wrap_pi(std::atan2(dy, dx) - state.yaw));
  o.prev_action = state.prev_action;

  const double base = map.height_at(state.x, state.y);
  const double c = std::cos(state.yaw), s = std::sin(state.yaw);
  auto fill = [&](const std::vector<std::array<double, 2>>& offsets, std::vector<float>& out) {
    out.resize(offsets.size());
    for (size_t i = 0; i < offsets.size(); ++i) {
      const double wx = state.x + c * offsets[i][0] - s * offsets[i][1];
      const double wy = state.y + s * offsets[i][0] + c * offsets[i][1];
      out[i] = static_cast<float>(map.height_at(wx, wy) - base);
    }
  };
  fill(pattern.dense, o.dense);
  fill(pattern.sparse, o.sparse);
  return o;
}

}  // namespace rover

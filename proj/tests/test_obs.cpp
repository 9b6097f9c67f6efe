#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rover/obs.hpp"

using namespace rover;

namespace {
TerrainMap flat_map(double extent = 40.0, double bias = 0.0) {
  TerrainParams p;
  p.extent_m = extent;
  p.cell_m = 0.05;
  p.rock_density_per_m2 = 0;
  const int nodes = p.cells_per_side() + 1;
  return TerrainMap::from_data(p, std::vector<float>(size_t(nodes) * nodes, float(bias)), {});
}

RoverState mid_state(double extent) {
  RoverState s;
  s.x = s.y = extent / 2;
  return s;
}
}  // namespace

TEST_CASE("default pattern dimensions") {
  auto p = build_pattern(PatternConfig{});
  CHECK(p.k_dense() == 1681);  // 41 x 41 at 5 cm over [-1, 1]^2
  CHECK(p.k_sparse() > 0);
  for (const auto& o : p.sparse) {
    const double r = std::hypot(o[0], o[1]);
    CHECK(r > 1.0);
    CHECK(r <= 4.0);
  }
  CHECK(p.margin_m <= 4.0 + 1e-12);
  CHECK(p.margin_m > 3.9);
}

TEST_CASE("pattern ordering is deterministic") {
  auto a = build_pattern(PatternConfig{});
  auto b = build_pattern(PatternConfig{});
  CHECK(a.dense == b.dense);
  CHECK(a.sparse == b.sparse);
}

TEST_CASE("heading convention: ahead 0, behind pi, left positive") {
  auto map = flat_map();
  auto pat = build_pattern(PatternConfig::tiny());
  RoverState s = mid_state(40.0);
  s.yaw = 0.7;

  const double ahead = 5.0;
  s.goal_x = s.x + ahead * std::cos(s.yaw);
  s.goal_y = s.y + ahead * std::sin(s.yaw);
  CHECK(observe(s, map, pat).heading_rad == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(observe(s, map, pat).distance_m == doctest::Approx(5.0));

  s.goal_x = s.x - ahead * std::cos(s.yaw);
  s.goal_y = s.y - ahead * std::sin(s.yaw);
  CHECK(std::fabs(observe(s, map, pat).heading_rad) ==
        doctest::Approx(3.14159265358979).epsilon(1e-6));

  // goal 90 degrees to the rover's left => heading +pi/2
  s.goal_x = s.x + ahead * std::cos(s.yaw + 1.5707963267948966);
  s.goal_y = s.y + ahead * std::sin(s.yaw + 1.5707963267948966);
  CHECK(observe(s, map, pat).heading_rad == doctest::Approx(1.5707963267948966).epsilon(1e-6));
}

TEST_CASE("flat terrain gives all-zero heightmaps") {
  auto map = flat_map();
  auto pat = build_pattern(PatternConfig::compact());
  RoverState s = mid_state(40.0);
  s.yaw = 1.234;
  auto o = observe(s, map, pat);
  for (float v : o.dense) CHECK(v == 0.0f);
  for (float v : o.sparse) CHECK(v == 0.0f);
}

TEST_CASE("heights are relative: constant elevation offset cancels") {
  auto zero = flat_map(40.0, 0.0);
  auto high = flat_map(40.0, 3.25);
  auto pat = build_pattern(PatternConfig::compact());
  RoverState s = mid_state(40.0);
  s.yaw = -2.1;
  auto a = observe(s, zero, pat);
  auto b = observe(s, high, pat);
  for (size_t i = 0; i < a.dense.size(); ++i)
    CHECK(std::fabs(double(a.dense[i]) - b.dense[i]) < 1e-9);
  for (size_t i = 0; i < a.sparse.size(); ++i)
    CHECK(std::fabs(double(a.sparse[i]) - b.sparse[i]) < 1e-9);
}

TEST_CASE("egocentricity: common translation leaves the observation unchanged") {
  // two maps whose grids encode the same surface shifted by whole cells
  TerrainParams p;
  p.extent_m = 30.0;
  p.cell_m = 0.5;
  p.rock_density_per_m2 = 0;
  const int nodes = p.cells_per_side() + 1;
  auto surf = [](double x, double y) {
    return 0.3 * std::sin(0.37 * x) + 0.2 * std::cos(0.21 * y + 0.5);
  };
  const double shift = 4.0;  // 8 whole cells
  std::vector<float> h0(size_t(nodes) * nodes), h1(size_t(nodes) * nodes);
  for (int iy = 0; iy < nodes; ++iy)
    for (int ix = 0; ix < nodes; ++ix) {
      h0[size_t(iy) * nodes + ix] = float(surf(ix * p.cell_m, iy * p.cell_m));
      h1[size_t(iy) * nodes + ix] = float(surf(ix * p.cell_m - shift, iy * p.cell_m - shift));
    }
  auto m0 = TerrainMap::from_data(p, h0, {});
  auto m1 = TerrainMap::from_data(p, h1, {});
  auto pat = build_pattern(PatternConfig::tiny());

  RoverState s0;
  s0.x = s0.y = 12.0;
  s0.yaw = 0.9;
  s0.goal_x = 15.0;
  s0.goal_y = 10.0;
  RoverState s1 = s0;
  s1.x += shift;
  s1.y += shift;
  s1.goal_x += shift;
  s1.goal_y += shift;

  auto a = observe(s0, m0, pat);
  auto b = observe(s1, m1, pat);
  CHECK(a.distance_m == doctest::Approx(b.distance_m).epsilon(1e-9));
  CHECK(a.heading_rad == doctest::Approx(b.heading_rad).epsilon(1e-9));
  for (size_t i = 0; i < a.dense.size(); ++i)
    CHECK(std::fabs(double(a.dense[i]) - b.dense[i]) < 1e-9);
  for (size_t i = 0; i < a.sparse.size(); ++i)
    CHECK(std::fabs(double(a.sparse[i]) - b.sparse[i]) < 1e-9);
}

TEST_CASE("margin violation is an explicit error") {
  auto map = flat_map();
  auto pat = build_pattern(PatternConfig{});  // 4 m margin
  RoverState s;
  s.x = 2.0;
  s.y = 20.0;
  CHECK_THROWS_AS((void)observe(s, map, pat), std::out_of_range);
  s.x = 20.0;
  CHECK_NOTHROW((void)observe(s, map, pat));
}

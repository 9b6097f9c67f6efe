#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "rover/terrain.hpp"
#include "test_util.hpp"

using namespace rover;

namespace {
TerrainParams small_params(uint64_t seed = 1) {
  TerrainParams p;
  p.seed = seed;
  p.extent_m = 50.0;
  p.cell_m = 0.05;
  p.rock_density_per_m2 = 0.05;
  p.small_rock_fraction = 0.5;
  return p;
}
}  // namespace

TEST_CASE("same params and seed give bit-identical maps") {
  auto a = generate_terrain(small_params(42));
  auto b = generate_terrain(small_params(42));
  CHECK(a.heights() == b.heights());
  REQUIRE(a.rocks().size() == b.rocks().size());
  for (size_t i = 0; i < a.rocks().size(); ++i) {
    CHECK(a.rocks()[i].cx == b.rocks()[i].cx);
    CHECK(a.rocks()[i].radius_m == b.rocks()[i].radius_m);
    CHECK(a.rocks()[i].climbable == b.rocks()[i].climbable);
  }
}

TEST_CASE("parallel and serial generation agree bitwise") {
  auto a = generate_terrain(small_params(3), true);
  auto b = generate_terrain(small_params(3), false);
  CHECK(a.heights() == b.heights());
}

TEST_CASE("degenerate flat terrain") {
  TerrainParams p = small_params(7);
  p.hill_amplitude_m = 0;
  p.bump_amplitude_m = 0;
  p.rock_density_per_m2 = 0;
  auto m = generate_terrain(p);
  CHECK(m.rocks().empty());
  for (float h : m.heights()) CHECK(h == 0.0f);
  CHECK(m.height_at(25.0, 13.37) == 0.0);
}

TEST_CASE("invalid parameters are rejected") {
  TerrainParams p = small_params();
  p.extent_m = -1;
  CHECK_THROWS(generate_terrain(p));
  p = small_params();
  p.cell_m = 0.07;  // extent/cell not integral
  CHECK_THROWS(generate_terrain(p));
  p = small_params();
  p.hill_wavelength_m = p.bump_wavelength_m;
  CHECK_THROWS(generate_terrain(p));
  p = small_params();
  p.bump_amplitude_m = std::nan("");
  CHECK_THROWS(generate_terrain(p));
}

TEST_CASE("rock count matches the density target and the sampler expectation") {
  // 0.05 / m^2 on a 50 m map -> 125 expected
  double total = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) total += double(generate_terrain(small_params(s + 1)).rocks().size());
  const double mean = total / seeds;
  CHECK(mean > 0.8 * 125.0);
  CHECK(mean < 1.2 * 125.0);

  // every generated rock obeys the climbable <=> height threshold rule
  auto m = generate_terrain(small_params(11));
  for (const Rock& r : m.rocks())
    CHECK(r.climbable == (r.height_m <= m.params().climb_height_threshold_m));
}

TEST_CASE("blue-noise points respect the minimum spacing") {
  Rng rng(5);
  auto pts = poisson_disc(0.5, 49.5, 1.0, rng);
  CHECK(pts.size() > 100);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const double d = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      CHECK(d >= 1.0 - 1e-9);
    }
}

TEST_CASE("height_at interpolates bilinearly") {
  TerrainParams p;
  p.extent_m = 1.0;
  p.cell_m = 0.5;  // 2x2 cells, 3x3 nodes
  p.rock_density_per_m2 = 0;
  std::vector<float> h(9, 0.0f);
  h[4] = 1.0f;  // center node (0.5, 0.5)
  auto m = TerrainMap::from_data(p, h, {});

  CHECK(m.height_at(0.5, 0.5) == doctest::Approx(1.0));   // node identity
  CHECK(m.height_at(0.0, 0.0) == doctest::Approx(0.0));
  CHECK(m.height_at(0.25, 0.25) == doctest::Approx(0.25));  // cell-center average
  CHECK_THROWS_AS((void)m.height_at(1.5, 0.5), std::out_of_range);
  CHECK_THROWS_AS((void)m.height_at(0.5, -0.01), std::out_of_range);
}

TEST_CASE("height_at node queries return stored grid values exactly") {
  auto m = generate_terrain(small_params(21));
  const double c = m.params().cell_m;
  for (int iy : {0, 17, 400, 999})
    for (int ix : {0, 3, 500, 1000}) {
      // avoid rock footprints: probe pure-ground nodes only
      if (!m.rocks_near(ix * c, iy * c, 1e-6).empty()) continue;
      CHECK(m.height_at(ix * c, iy * c) == doctest::Approx(m.node(ix, iy)).epsilon(1e-12));
    }
}

TEST_CASE("height is continuous across cell edges") {
  TerrainParams p = small_params(31);
  p.rock_density_per_m2 = 0;
  auto m = generate_terrain(p);
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const double edge_x = (1 + rng.uniform_int(900)) * p.cell_m;
    const double y = rng.uniform(0.0, p.extent_m);
    const double left = m.height_at(std::nextafter(edge_x, 0.0), y);
    const double right = m.height_at(std::nextafter(edge_x, p.extent_m), y);
    CHECK(std::fabs(left - right) < 1e-9);
  }
}

TEST_CASE("rock footprints raise the surface by the rock height") {
  TerrainParams p = small_params(41);
  p.hill_amplitude_m = 0;
  p.bump_amplitude_m = 0;
  auto m = generate_terrain(p);
  REQUIRE(!m.rocks().empty());
  const Rock& r = m.rocks().front();
  CHECK(m.height_at(r.cx, r.cy) == doctest::Approx(r.height_m));
  CHECK(m.height_at(r.cx + r.radius_m + 0.01, r.cy) == doctest::Approx(0.0));
}

TEST_CASE("rocks_near equals brute force on random rock sets") {
  TerrainParams p = small_params(0);
  p.rock_density_per_m2 = 0;
  Rng rng(123);
  std::vector<Rock> rocks;
  for (int i = 0; i < 1000; ++i) {
    Rock r;
    r.radius_m = rng.uniform(0.05, 0.5);
    r.cx = rng.uniform(r.radius_m, p.extent_m - r.radius_m);
    r.cy = rng.uniform(r.radius_m, p.extent_m - r.radius_m);
    r.height_m = rng.uniform(0.05, 0.2);
    r.climbable = true;
    rocks.push_back(r);
  }
  const int n_cells = p.cells_per_side() + 1;
  auto m = TerrainMap::from_data(p, std::vector<float>(size_t(n_cells) * n_cells, 0.f), rocks);

  for (int q = 0; q < 300; ++q) {
    const double x = rng.uniform(0.0, p.extent_m), y = rng.uniform(0.0, p.extent_m);
    const double rad = rng.uniform(0.05, 3.0);
    auto got = m.rocks_near(x, y, rad);
    std::multiset<double> got_set, want_set;
    for (const auto& r : got) got_set.insert(r.cx * 1e4 + r.cy);
    for (const auto& r : rocks) {
      const double rr = rad + r.radius_m;
      if ((r.cx - x) * (r.cx - x) + (r.cy - y) * (r.cy - y) <= rr * rr)
        want_set.insert(r.cx * 1e4 + r.cy);
    }
    CHECK(got_set == want_set);
  }
}

TEST_CASE("rocks_near boundary is inclusive") {
  TerrainParams p = small_params(0);
  p.rock_density_per_m2 = 0;
  const int nodes = p.cells_per_side() + 1;
  Rock r;
  r.cx = 25.0;
  r.cy = 25.0;
  r.radius_m = 0.3;
  r.height_m = 0.1;
  r.climbable = true;
  auto m = TerrainMap::from_data(p, std::vector<float>(size_t(nodes) * nodes, 0.f), {r});
  const double eps = 1e-9;
  CHECK(m.rocks_near(25.0 + 0.3 + 0.5 - eps, 25.0, 0.5).size() == 1);
  CHECK(m.rocks_near(25.0, 25.0, 0.1).size() == 1);  // query inside the rock
  CHECK(m.rocks_near(25.35, 25.0, 0.1).size() == 1);  // overlapping discs
  CHECK(m.rocks_near(25.0 + 0.3 + 0.5 + 1e-6, 25.0, 0.5).empty());
  auto empty_map = TerrainMap::from_data(p, std::vector<float>(size_t(nodes) * nodes, 0.f), {});
  CHECK(empty_map.rocks_near(25.0, 25.0, 5.0).empty());
}

TEST_CASE("save and load round-trip exactly") {
  rovertest::TmpDir tmp("terrain");
  auto m = generate_terrain(small_params(77));
  m.save(tmp.str());
  auto n = TerrainMap::load(tmp.str());
  CHECK(n.heights() == m.heights());
  REQUIRE(n.rocks().size() == m.rocks().size());
  for (size_t i = 0; i < m.rocks().size(); ++i) {
    CHECK(n.rocks()[i].cx == m.rocks()[i].cx);
    CHECK(n.rocks()[i].height_m == m.rocks()[i].height_m);
  }
  CHECK(n.params().seed == m.params().seed);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rover/simkin.hpp"

using namespace rover;
using rovertest::icr_spread;

namespace {
constexpr double kPi = 3.14159265358979323846;

TerrainMap flat_map(double extent = 40.0, std::vector<Rock> rocks = {}) {
  TerrainParams p;
  p.extent_m = extent;
  p.cell_m = 0.05;
  p.rock_density_per_m2 = 0;
  const int nodes = p.cells_per_side() + 1;
  return TerrainMap::from_data(p, std::vector<float>(size_t(nodes) * nodes, 0.f),
                               std::move(rocks));
}

Rock make_rock(double x, double y, double r, bool climbable) {
  Rock rock;
  rock.cx = x;
  rock.cy = y;
  rock.radius_m = r;
  rock.height_m = climbable ? 0.15 : 0.4;
  rock.climbable = climbable;
  return rock;
}
}  // namespace

TEST_CASE("straight-line setpoints: zero steer, equal speeds") {
  const auto g = RoverGeometry::six_wheel();
  const SimConfig sim;
  auto sp = ackermann_setpoints({0.5f, 0.0f}, g, sim);
  for (const auto& w : sp) {
    CHECK(w.steer_rad == doctest::Approx(0.0));
    CHECK(w.speed_mps == doctest::Approx(0.25));
  }
}

TEST_CASE("point turn: opposite wheel speeds left/right, zero translation") {
  const auto g = RoverGeometry::six_wheel();
  const SimConfig sim;
  auto sp = ackermann_setpoints({0.0f, 0.5f}, g, sim);
  // wheel order pairs: (0,1) front, (2,3) middle, (4,5) rear
  for (int pair = 0; pair < 3; ++pair) {
    const auto& l = sp[2 * pair];
    const auto& r = sp[2 * pair + 1];
    CHECK(l.speed_mps == doctest::Approx(-r.speed_mps).epsilon(1e-12));
    CHECK(std::fabs(l.speed_mps) > 0.0);
  }
}

TEST_CASE("ackermann: inner wheel steers harder, all axles meet at one ICR") {
  const auto g = RoverGeometry::six_wheel();
  const SimConfig sim;
  auto sp = ackermann_setpoints({0.5f, 0.2f}, g, sim);
  // left turn: front-left (inner) steer exceeds front-right (outer)
  CHECK(sp[0].steer_rad > sp[1].steer_rad);
  CHECK(sp[0].steer_rad > 0.0);
  CHECK(icr_spread(sp, g) < 1e-9);
  // middle wheels stay straight
  CHECK(sp[2].steer_rad == doctest::Approx(0.0));
  CHECK(sp[3].steer_rad == doctest::Approx(0.0));
}

TEST_CASE("ICR consistency over random actions") {
  const auto g = RoverGeometry::six_wheel();
  const SimConfig sim;
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const Action a{float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))};
    auto sp = ackermann_setpoints(a, g, sim);
    CHECK(icr_spread(sp, g) < 1e-9);
  }
}

TEST_CASE("step integration: straight drive covers v*dt") {
  auto map = flat_map();
  SimConfig sim;
  RoverState s;
  s.x = s.y = 20.0;
  s.yaw = 0.3;
  integrate_control_step(s, {1.0f, 0.0f}, sim);
  CHECK(std::hypot(s.x - 20.0, s.y - 20.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(s.yaw == doctest::Approx(0.3));
}

TEST_CASE("step integration: point turn changes yaw only") {
  SimConfig sim;
  RoverState s;
  s.x = s.y = 20.0;
  s.yaw = 0.0;
  integrate_control_step(s, {0.0f, 1.0f}, sim);
  CHECK(s.x == 20.0);
  CHECK(s.y == 20.0);
  CHECK(s.yaw == doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("point-turn rule fires exactly on the velocity ratio") {
  SimConfig sim;
  RoverState s;
  s.x = s.y = 20.0;
  // |v|/|w| = (0.1*0.5)/(1.0*0.6) = 0.0833 < 0.15 -> no translation
  integrate_control_step(s, {0.1f, 1.0f}, sim);
  CHECK(s.x == 20.0);
  CHECK(s.y == 20.0);
  // ratio 0.5*0.5/0.6 = 0.416 -> drives
  integrate_control_step(s, {0.5f, 1.0f}, sim);
  CHECK(std::hypot(s.x - 20.0, s.y - 20.0) > 0.0);
}

TEST_CASE("collision classification matches a brute-force oracle") {
  Rng rng(55);
  const auto g = RoverGeometry::six_wheel();
  const SimConfig sim;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Rock> rocks;
    const int n = 1 + rng.uniform_int(30);
    for (int i = 0; i < n; ++i)
      rocks.push_back(make_rock(rng.uniform(1, 39), rng.uniform(1, 39),
                                rng.uniform(0.05, 0.5), rng.uniform() < 0.5));
    auto map = flat_map(40.0, rocks);
    for (int q = 0; q < 100; ++q) {
      RoverState s;
      s.x = rng.uniform(2, 38);
      s.y = rng.uniform(2, 38);
      s.yaw = rng.uniform(-kPi, kPi);
      const Contact got = check_collision(s, map, g, sim);
      CHECK(got == rovertest::collision_oracle(s, rocks, g, sim));
    }
  }
}

TEST_CASE("rock overlapping the rover center is fatal") {
  auto map = flat_map(40.0, {make_rock(20.0, 20.0, 0.3, false)});
  RoverState s;
  s.x = 20.1;
  s.y = 20.0;
  CHECK(check_collision(s, map, RoverGeometry::six_wheel(), SimConfig{}) == Contact::fatal);
  auto empty = flat_map();
  CHECK(check_collision(s, empty, RoverGeometry::six_wheel(), SimConfig{}) == Contact::none);
}

TEST_CASE("reset: goal on the 9 m circle, deterministic per stream") {
  auto map = flat_map(40.0);
  SimConfig sim;
  Rng rng_a(derive_seed(9, "env_reset", 0));
  Rng rng_b(derive_seed(9, "env_reset", 0));
  auto s1 = reset_state(20.0, 20.0, map, sim, rng_a);
  auto s2 = reset_state(20.0, 20.0, map, sim, rng_b);
  CHECK(std::hypot(s1.goal_x - 20.0, s1.goal_y - 20.0) == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(s1.yaw == s2.yaw);
  CHECK(s1.goal_x == s2.goal_x);
  CHECK(s1.steps_elapsed == 0);
}

TEST_CASE("reset fails on over-dense terrain after the resample limit") {
  // ring of non-climbable rocks fully covering the goal circle
  std::vector<Rock> ring;
  for (int i = 0; i < 60; ++i) {
    const double a = 2.0 * kPi * i / 60.0;
    ring.push_back(make_rock(20.0 + 9.0 * std::cos(a), 20.0 + 9.0 * std::sin(a), 0.5, false));
  }
  auto map = flat_map(40.0, ring);
  SimConfig sim;
  Rng rng(1);
  CHECK_THROWS_AS((void)reset_state(20.0, 20.0, map, sim, rng), std::runtime_error);
}

TEST_CASE("batch stepping equals sequential stepping bitwise") {
  auto map = flat_map(40.0, {make_rock(24.0, 20.0, 0.4, false), make_rock(18.0, 22.0, 0.3, true)});
  auto pat = build_pattern(PatternConfig::tiny());
  const int n = 16;
  VecEnv par(map, pat, SimConfig{}, RoverGeometry::six_wheel(), RewardWeights{}, n, 77, true);
  VecEnv seq(map, pat, SimConfig{}, RoverGeometry::six_wheel(), RewardWeights{}, n, 77, false);

  Rng arng(5);
  for (int t = 0; t < 120; ++t) {
    std::vector<Action> acts;
    for (int i = 0; i < n; ++i)
      acts.push_back({float(arng.uniform(-1, 1)), float(arng.uniform(-1, 1))});
    auto rp = par.step(acts);
    auto rs = seq.step(acts);
    for (int i = 0; i < n; ++i) {
      CHECK(rp[i].reward == rs[i].reward);
      CHECK(rp[i].cause == rs[i].cause);
      CHECK(par.state(i).x == seq.state(i).x);
      CHECK(par.state(i).y == seq.state(i).y);
      CHECK(par.state(i).yaw == seq.state(i).yaw);
      CHECK(rp[i].observation.distance_m == rs[i].observation.distance_m);
    }
  }
}

TEST_CASE("termination exclusivity and goal detection") {
  auto map = flat_map(40.0);
  auto pat = build_pattern(PatternConfig::tiny());
  SimConfig sim;
  VecEnv env(map, pat, sim, RoverGeometry::six_wheel(), RewardWeights{}, 1, 3);

  // drive straight at the goal using the true heading
  int guard = 0;
  while (guard++ < 2000) {
    auto obs = env.observe_all();
    const float h = obs[0].heading_rad;
    Action a;
    if (std::fabs(h) > 0.2) {
      a = {0.0f, h > 0 ? 1.0f : -1.0f};
    } else {
      a = {1.0f, std::clamp(2.0f * h, -1.0f, 1.0f)};
    }
    auto res = env.step({a});
    if (res[0].terminated) {
      CHECK(res[0].cause == Termination::goal_reached);
      break;
    }
  }
  CHECK(guard < 2000);
  auto eps = env.drain_episodes();
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].cause == Termination::goal_reached);
  CHECK(eps[0].steps > 0);
}

TEST_CASE("timeout fires at the step limit") {
  auto map = flat_map(40.0);
  auto pat = build_pattern(PatternConfig::tiny());
  SimConfig sim;
  sim.max_episode_steps = 25;
  VecEnv env(map, pat, sim, RoverGeometry::six_wheel(), RewardWeights{}, 1, 3);
  for (int t = 0; t < 24; ++t) {
    auto r = env.step({Action{0.0f, 0.0f}});
    CHECK(!r[0].terminated);
  }
  auto r = env.step({Action{0.0f, 0.0f}});
  CHECK(r[0].terminated);
  CHECK(r[0].cause == Termination::timeout);
}

TEST_CASE("rotational invariance on a flat map with rotated rocks") {
  const double rot = 0.83;
  const double cx = 20.0, cy = 20.0;
  auto rotate = [&](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    return std::array<double, 2>{cx + dx * std::cos(rot) - dy * std::sin(rot),
                                 cy + dx * std::sin(rot) + dy * std::cos(rot)};
  };
  std::vector<Rock> rocks = {make_rock(23.0, 20.5, 0.4, false), make_rock(18.5, 18.0, 0.3, false)};
  std::vector<Rock> rocks_rot;
  for (const Rock& r : rocks) {
    Rock q = r;
    auto p = rotate(r.cx, r.cy);
    q.cx = p[0];
    q.cy = p[1];
    rocks_rot.push_back(q);
  }
  auto map_a = flat_map(40.0, rocks);
  auto map_b = flat_map(40.0, rocks_rot);
  SimConfig sim;

  RoverState sa;
  sa.x = cx;
  sa.y = cy;
  sa.yaw = 0.2;
  RoverState sb;
  sb.x = cx;
  sb.y = cy;
  sb.yaw = wrap_pi(0.2 + rot);

  Rng arng(31);
  for (int t = 0; t < 100; ++t) {
    const Action a{float(arng.uniform(-1, 1)), float(arng.uniform(-1, 1))};
    integrate_control_step(sa, a, sim);
    integrate_control_step(sb, a, sim);
  }
  auto pa = rotate(sa.x, sa.y);
  CHECK(std::fabs(pa[0] - sb.x) < 1e-6);
  CHECK(std::fabs(pa[1] - sb.y) < 1e-6);
  CHECK(std::fabs(wrap_pi(sa.yaw + rot - sb.yaw)) < 1e-6);
}

TEST_CASE("mismatched batch sizes and NaN actions are rejected") {
  auto map = flat_map();
  auto pat = build_pattern(PatternConfig::tiny());
  VecEnv env(map, pat, SimConfig{}, RoverGeometry::six_wheel(), RewardWeights{}, 2, 1);
  CHECK_THROWS(env.step({Action{0, 0}}));
  CHECK_THROWS(env.step({Action{0, 0}, Action{std::nanf(""), 0}}));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rover/reward.hpp"

using namespace rover;

static const RewardWeights W{};

TEST_CASE("distance reward formula values") {
  CHECK(distance_reward(0.0, W) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(distance_reward(3.0, W) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(distance_reward(9.0, W) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS(distance_reward(-0.1, W));
}

TEST_CASE("distance reward is strictly decreasing with range (0, w_d]") {
  double prev = distance_reward(0.0, W);
  CHECK(prev == 1.0);
  for (double d = 0.5; d < 200.0; d += 0.5) {
    const double r = distance_reward(d, W);
    CHECK(r < prev);
    CHECK(r > 0.0);
    prev = r;
  }
}

TEST_CASE("oscillation penalty") {
  CHECK(oscillation_penalty({0.3f, -0.7f}, {0.3f, -0.7f}, W) == doctest::Approx(0.0));
  CHECK(oscillation_penalty({1.f, 0.f}, {0.f, 0.f}, W) == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(oscillation_penalty({1.f, -1.f}, {-1.f, 1.f}, W) == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(oscillation_penalty({0.9f, 0.1f}, {0.f, 0.f}, W) <= 0.0);
}

TEST_CASE("velocity penalty") {
  CHECK(velocity_penalty(0.7, W) == 0.0);
  CHECK(velocity_penalty(-0.4, W) == doctest::Approx(-0.002).epsilon(1e-12));
  CHECK(velocity_penalty(0.0, W) == 0.0);
}

TEST_CASE("heading penalty in radians with the 115 degree limit") {
  const double deg = 3.14159265358979323846 / 180.0;
  CHECK(heading_penalty(90.0 * deg, W) == 0.0);
  CHECK(heading_penalty(120.0 * deg, W) == doctest::Approx(-0.10471975511966).epsilon(1e-10));
  CHECK(heading_penalty(3.14159265358979323846, W) ==
        doctest::Approx(-0.15707963267949).epsilon(1e-10));
  CHECK(heading_penalty(-120.0 * deg, W) == doctest::Approx(-0.10471975511966).epsilon(1e-10));
  CHECK(heading_penalty(115.0 * deg, W) == 0.0);  // limit itself is not penalized
}

TEST_CASE("total reward composition") {
  const Action steady{0.5f, 0.0f};
  // only the distance term fires
  CHECK(total_reward(3.0, steady, steady, 0.0, Termination::none, W) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // fatal collision adds the penalty once
  CHECK(total_reward(3.0, steady, steady, 0.0, Termination::collision, W) ==
        doctest::Approx(-9.5).epsilon(1e-12));
  // far away, all-zero action: positive and vanishing
  const Action zero{0.0f, 0.0f};
  const double far = total_reward(1e9, zero, zero, 0.0, Termination::none, W);
  CHECK(far > 0.0);
  CHECK(far < 1e-8);
}

TEST_CASE("penalties are never positive and bound the total") {
  rover::Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const Action a{float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))};
    const Action p{float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))};
    const double th = rng.uniform(-3.14159265358979, 3.14159265358979);
    const double d = rng.uniform(0.0, 30.0);
    CHECK(oscillation_penalty(a, p, W) <= 0.0);
    CHECK(velocity_penalty(a.v_lin, W) <= 0.0);
    CHECK(heading_penalty(th, W) <= 0.0);
    CHECK(total_reward(d, a, p, th, Termination::none, W) <= W.w_d);
  }
}

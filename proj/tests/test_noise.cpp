#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rover/noise.hpp"

using namespace rover;

TEST_CASE("mode frequencies match the table probabilities") {
  const auto table = NoiseTable::train_mix();
  Rng rng(101);
  int counts[3] = {0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[int(sample_mode(table, rng))]++;
  CHECK(std::fabs(counts[0] / double(n) - 0.6) < 0.02);
  CHECK(std::fabs(counts[1] / double(n) - 0.3) < 0.02);
  CHECK(std::fabs(counts[2] / double(n) - 0.1) < 0.02);
}

TEST_CASE("degenerate mode table always picks the certain mode") {
  NoiseTable t = NoiseTable::train_mix();
  t.modes[0].probability = 1.0;
  t.modes[1].probability = 0.0;
  t.modes[2].probability = 0.0;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) CHECK(sample_mode(t, rng) == NoiseMode::low);
}

TEST_CASE("mode sequence is reproducible per seed") {
  const auto table = NoiseTable::train_mix();
  Rng a(55), b(55);
  for (int i = 0; i < 200; ++i) CHECK(sample_mode(table, a) == sample_mode(table, b));
}

TEST_CASE("identity mode leaves the input untouched and unaliased") {
  NoiseModeSpec spec{0.0, 0.0, 0.0, 1.0};
  std::vector<float> clean{0.5f, -0.25f, 0.0f, 3.0f};
  Rng rng(1);
  auto noisy = apply_noise(clean, spec, 0.0, rng);
  CHECK(noisy == clean);
  noisy[0] = 99.0f;
  CHECK(clean[0] == 0.5f);
}

TEST_CASE("low mode statistics: std within 3%, zero count exact") {
  const auto table = NoiseTable::train_mix();
  const auto& spec = mode_spec(table, NoiseMode::low);
  const int k = 100000;
  std::vector<float> clean(k, 0.0f);
  Rng rng(202);
  auto noisy = apply_noise(clean, spec, 0.0, rng);

  int zeros = 0;
  double sum = 0, sum2 = 0;
  int n = 0;
  for (float v : noisy) {
    if (v == 0.0f) {
      ++zeros;
      continue;
    }
    sum += v;
    sum2 += double(v) * v;
    ++n;
  }
  // exactly floor(0.10 * k) zeroed (jitter never lands on exact 0.0f)
  CHECK(zeros == k / 10);
  const double mean = sum / n;
  const double std = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::fabs(std - 0.1) < 0.003);
  CHECK(std::fabs(mean) < 3.0 * 0.1 / std::sqrt(double(n)));
}

TEST_CASE("offset mode: per-episode bias is recoverable from the mean") {
  const auto table = NoiseTable::train_mix();
  Rng ep_rng(7);
  // force the offset mode and draw its episode state
  EpisodeNoise ep;
  ep.mode = NoiseMode::low_offset;
  ep.offset_m = ep_rng.normal(0.0, mode_spec(table, ep.mode).offset_std_m);

  const int k = 100000;
  std::vector<float> clean(k, 0.2f);
  Rng rng(99);
  auto noisy = apply_noise(clean, table, ep, rng);
  double sum = 0;
  int n = 0;
  for (int i = 0; i < k; ++i) {
    if (noisy[i] == 0.0f) continue;  // zeroed points
    sum += double(noisy[i]) - clean[i];
    ++n;
  }
  const double est = sum / n;
  CHECK(std::fabs(est - ep.offset_m) < 3.0 * 0.1 / std::sqrt(double(n)));
}

TEST_CASE("zeroing selects distinct points") {
  NoiseModeSpec spec{0.0, 0.0, 0.25, 1.0};
  std::vector<float> clean(40, 1.0f);
  Rng rng(17);
  auto noisy = apply_noise(clean, spec, 0.0, rng);
  int zeros = 0;
  for (float v : noisy) zeros += v == 0.0f;
  CHECK(zeros == 10);  // exactly floor(0.25 * 40), no double-zeroing
}

TEST_CASE("presets") {
  CHECK(noise_preset_from_string("train-mix") == NoisePreset::train_mix);
  CHECK(noise_preset_from_string("eval-noise") == NoisePreset::eval_noise);
  CHECK(noise_preset_from_string("none") == NoisePreset::none);
  CHECK_THROWS(noise_preset_from_string("bogus"));
  const auto ev = NoiseTable::eval_noise();
  CHECK(mode_spec(ev, NoiseMode::low).point_std_m == 0.1);
  CHECK(mode_spec(ev, NoiseMode::low).zero_fraction == 0.10);
  CHECK(mode_spec(ev, NoiseMode::low).offset_std_m == 0.0);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(sample_mode(ev, rng) == NoiseMode::low);
}

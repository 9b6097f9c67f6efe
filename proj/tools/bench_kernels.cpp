// Benchmarks the OpenMP kernels against their serial reference paths on the
// shapes that dominate training, and checks the results stay bitwise equal.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "rover/kernels.hpp"
#include "rover/noise.hpp"
#include "rover/rng.hpp"
#include "rover/simkin.hpp"
#include "rover/terrain.hpp"

using namespace rover;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

template <class F>
double time_best(F&& fn, int reps = 5) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, seconds(t0, Clock::now()));
  }
  return best;
}

void bench_gemm(const char* name, int B, int K, int N) {
  Rng rng(1);
  std::vector<float> x(size_t(B) * K), w(size_t(K) * N);
  for (auto& v : x) v = float(rng.normal());
  for (auto& v : w) v = float(rng.normal());
  std::vector<float> y_ser(size_t(B) * N), y_par(size_t(B) * N);

  const double flops = 2.0 * B * K * N;
  const double ts = time_best([&] {
    std::memset(y_ser.data(), 0, y_ser.size() * 4);
    kern::gemm_xw(x.data(), w.data(), y_ser.data(), B, K, N, false);
  });
  const double tp = time_best([&] {
    std::memset(y_par.data(), 0, y_par.size() * 4);
    kern::gemm_xw(x.data(), w.data(), y_par.data(), B, K, N, true);
  });
  const bool equal = y_ser == y_par;
  std::printf("%-28s serial %7.2f ms (%5.1f GF/s)  omp %7.2f ms (%5.1f GF/s)  x%.2f  %s\n", name,
              ts * 1e3, flops / ts / 1e9, tp * 1e3, flops / tp / 1e9, ts / tp,
              equal ? "bitwise-equal" : "MISMATCH");
}

void bench_terrain() {
  TerrainParams p;
  p.seed = 7;
  const double ts = time_best([&] { (void)generate_terrain(p, false); }, 2);
  const double tp = time_best([&] { (void)generate_terrain(p, true); }, 2);
  const auto a = generate_terrain(p, false);
  const auto b = generate_terrain(p, true);
  std::printf("%-28s serial %7.2f ms              omp %7.2f ms              x%.2f  %s\n",
              "terrain 60m @ 5cm", ts * 1e3, tp * 1e3, ts / tp,
              a.heights() == b.heights() ? "bitwise-equal" : "MISMATCH");
}

void bench_step_batch() {
  TerrainParams tp_;
  tp_.seed = 3;
  tp_.extent_m = 40.0;
  tp_.hill_amplitude_m = 0.5;
  const TerrainMap map = generate_terrain(tp_);
  const auto pattern = build_pattern(PatternConfig::compact());
  const int n = 64, steps = 25;
  VecEnv ser(map, pattern, SimConfig{}, RoverGeometry::six_wheel(), RewardWeights{}, n, 5, false);
  VecEnv par(map, pattern, SimConfig{}, RoverGeometry::six_wheel(), RewardWeights{}, n, 5, true);
  Rng arng(9);
  std::vector<std::vector<Action>> acts(steps, std::vector<Action>(n));
  for (auto& row : acts)
    for (auto& a : row) a = Action{float(arng.uniform(-1, 1)), float(arng.uniform(-1, 1))};

  const auto t0 = Clock::now();
  for (int t = 0; t < steps; ++t) (void)ser.step(acts[t]);
  const auto t1 = Clock::now();
  for (int t = 0; t < steps; ++t) (void)par.step(acts[t]);
  const auto t2 = Clock::now();
  bool equal = true;
  for (int i = 0; i < n; ++i)
    equal &= ser.state(i).x == par.state(i).x && ser.state(i).yaw == par.state(i).yaw;
  const double ts = seconds(t0, t1), tp = seconds(t1, t2);
  std::printf("%-28s serial %7.2f ms              omp %7.2f ms              x%.2f  %s\n",
              "step+observe 64 envs x25", ts * 1e3, tp * 1e3, ts / tp,
              equal ? "bitwise-equal" : "MISMATCH");
}

void bench_noise() {
  const auto table = NoiseTable::train_mix();
  const auto& spec = mode_spec(table, NoiseMode::low);
  std::vector<float> clean(1681 + 2000, 0.1f);
  Rng rng(4);
  const double t = time_best([&] {
    for (int i = 0; i < 64; ++i) (void)apply_noise(clean, spec, 0.01, rng);
  });
  std::printf("%-28s %7.2f ms per 64 heightmaps\n", "heightmap noise", t * 1e3);
}

}  // namespace

int main() {
  std::printf("training-shape kernels (serial reference vs OpenMP):\n");
  bench_gemm("gemm rollout 64x1681x60", 64, 1681, 60);
  bench_gemm("gemm update 960x1681x60", 960, 1681, 60);
  bench_gemm("gemm trunk 960x44x512", 960, 44, 512);
  bench_gemm("gemm trunk 960x512x256", 960, 512, 256);
  bench_gemm("gemm gru 64x256x256", 64, 256, 256);
  std::printf("\nsimulation kernels:\n");
  bench_terrain();
  bench_step_batch();
  bench_noise();
  return 0;
}

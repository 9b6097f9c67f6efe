#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "rover/kernels.hpp"
#include "rover/rng.hpp"

using namespace rover;

namespace {
std::vector<float> random_vec(size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}
}  // namespace

TEST_CASE("gemm_xw parallel path is bitwise equal to the serial reference") {
  Rng rng(7);
  for (auto [B, K, N] : {std::tuple{1, 1, 1}, {5, 7, 3}, {64, 1681, 60}, {33, 44, 512}}) {
    auto x = random_vec(static_cast<size_t>(B) * K, rng);
    auto w = random_vec(static_cast<size_t>(K) * N, rng);
    std::vector<float> y_ser(static_cast<size_t>(B) * N, 0.f), y_par = y_ser;
    kern::gemm_xw(x.data(), w.data(), y_ser.data(), B, K, N, false);
    kern::gemm_xw(x.data(), w.data(), y_par.data(), B, K, N, true);
    CHECK(y_ser == y_par);
  }
}

TEST_CASE("gemm_dy_wt parallel path is bitwise equal to the serial reference") {
  Rng rng(8);
  const int B = 37, K = 129, N = 65;
  auto dy = random_vec(static_cast<size_t>(B) * N, rng);
  auto w = random_vec(static_cast<size_t>(K) * N, rng);
  std::vector<float> a(static_cast<size_t>(B) * K, 0.f), b = a;
  kern::gemm_dy_wt(dy.data(), w.data(), a.data(), B, K, N, false);
  kern::gemm_dy_wt(dy.data(), w.data(), b.data(), B, K, N, true);
  CHECK(a == b);
}

TEST_CASE("gemm_xt_dy parallel path is bitwise equal to the serial reference") {
  Rng rng(9);
  const int B = 50, K = 201, N = 30;
  auto x = random_vec(static_cast<size_t>(B) * K, rng);
  auto dy = random_vec(static_cast<size_t>(B) * N, rng);
  std::vector<float> a(static_cast<size_t>(K) * N, 0.f), b = a;
  kern::gemm_xt_dy(x.data(), dy.data(), a.data(), B, K, N, false);
  kern::gemm_xt_dy(x.data(), dy.data(), b.data(), B, K, N, true);
  CHECK(a == b);
}

TEST_CASE("gemm results match a plain triple-loop oracle") {
  Rng rng(10);
  const int B = 6, K = 11, N = 5;
  auto x = random_vec(static_cast<size_t>(B) * K, rng);
  auto w = random_vec(static_cast<size_t>(K) * N, rng);
  std::vector<float> y(static_cast<size_t>(B) * N, 0.f);
  kern::gemm_xw(x.data(), w.data(), y.data(), B, K, N);
  for (int b = 0; b < B; ++b)
    for (int n = 0; n < N; ++n) {
      double acc = 0;
      for (int k = 0; k < K; ++k) acc += double(x[b * K + k]) * double(w[k * N + n]);
      CHECK(y[b * N + n] == doctest::Approx(acc).epsilon(1e-4));
    }
}

TEST_CASE("row results are independent of which rows share a batch") {
  // per-row determinism underpins the on-policy ratio == 1 property
  Rng rng(11);
  const int K = 97, N = 33;
  auto w = random_vec(static_cast<size_t>(K) * N, rng);
  auto row = random_vec(K, rng);
  std::vector<float> big(static_cast<size_t>(4) * K);
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < K; ++k) big[b * K + k] = b == 2 ? row[k] : rng.normal();
  std::vector<float> y1(N, 0.f), y4(static_cast<size_t>(4) * N, 0.f);
  kern::gemm_xw(row.data(), w.data(), y1.data(), 1, K, N);
  kern::gemm_xw(big.data(), w.data(), y4.data(), 4, K, N);
  for (int n = 0; n < N; ++n) CHECK(y1[n] == y4[2 * N + n]);
}

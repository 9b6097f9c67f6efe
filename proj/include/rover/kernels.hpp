#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

// Dense compute kernels. Every kernel has a serial reference path (parallel =
// false) and an OpenMP path; both call the same noinline row kernels, so the
// results are bitwise identical for any thread count. Parallelism is only ever
// over independent output rows/slices -- no cross-thread reductions.
namespace rover::kern {

template <class T>
[[gnu::noinline]] inline void row_axpy(T* __restrict dst, const T* __restrict src, T a, int n) {
  for (int i = 0; i < n; ++i) dst[i] += a * src[i];
}

template <class T>
[[gnu::noinline]] inline T row_dot(const T* __restrict a, const T* __restrict b, int n) {
  T acc = T(0);
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

/// y(B,N) += x(B,K) * W(K,N), all row-major.
template <class T>
inline void gemm_xw(const T* x, const T* w, T* y, int B, int K, int N, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < B; ++b) {
    const T* xr = x + static_cast<size_t>(b) * K;
    T* yr = y + static_cast<size_t>(b) * N;
    for (int k = 0; k < K; ++k) row_axpy(yr, w + static_cast<size_t>(k) * N, xr[k], N);
  }
}

/// dx(B,K) = dy(B,N) * W(K,N)^T.
template <class T>
inline void gemm_dy_wt(const T* dy, const T* w, T* dx, int B, int K, int N, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < B; ++b) {
    const T* dyr = dy + static_cast<size_t>(b) * N;
    T* dxr = dx + static_cast<size_t>(b) * K;
    for (int k = 0; k < K; ++k) dxr[k] = row_dot(dyr, w + static_cast<size_t>(k) * N, N);
  }
}

/// dW(K,N) += x(B,K)^T * dy(B,N). Parallel over K slices; the batch loop runs
/// in fixed order inside each slice.
template <class T>
inline void gemm_xt_dy(const T* x, const T* dy, T* dw, int B, int K, int N, bool parallel = true) {
#ifdef _OPENMP
  const int nthreads = parallel ? omp_get_max_threads() : 1;
#else
  const int nthreads = 1;
#endif
  const int chunk = (K + nthreads - 1) / nthreads;
#pragma omp parallel for schedule(static, 1) if (parallel)
  for (int c = 0; c < nthreads; ++c) {
    const int k0 = c * chunk;
    const int k1 = (k0 + chunk < K) ? k0 + chunk : K;
    for (int b = 0; b < B; ++b) {
      const T* xr = x + static_cast<size_t>(b) * K;
      const T* dyr = dy + static_cast<size_t>(b) * N;
      for (int k = k0; k < k1; ++k) row_axpy(dw + static_cast<size_t>(k) * N, dyr, xr[k], N);
    }
  }
}

/// y(B,N) += bias(N) broadcast over rows.
template <class T>
inline void add_row_bias(T* y, const T* bias, int B, int N, bool parallel = true) {
#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < B; ++b) {
    T* yr = y + static_cast<size_t>(b) * N;
    for (int n = 0; n < N; ++n) yr[n] += bias[n];
  }
}

/// db(N) += column sums of dy(B,N). Serial; cheap relative to the GEMMs.
template <class T>
inline void colsum_accum(const T* dy, T* db, int B, int N) {
  for (int b = 0; b < B; ++b) {
    const T* dyr = dy + static_cast<size_t>(b) * N;
    for (int n = 0; n < N; ++n) db[n] += dyr[n];
  }
}

}  // namespace rover::kern

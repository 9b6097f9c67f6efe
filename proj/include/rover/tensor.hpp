#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rover {

/// Row-major 2-D tensor. The batch dimension is always `rows`.
template <class T>
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Tensor2() = default;
  Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {}

  static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }

  T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  T* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const T* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void require_shape(int r, int c, const char* what) const {
    if (rows != r || cols != c)
      throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(r) + "x" +
                                  std::to_string(c) + ", got " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
  }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

template <class T>
void assert_finite(const Tensor2<T>& t, const char* what) {
  if (!t.all_finite()) throw std::runtime_error(std::string("non-finite values in ") + what);
}

}  // namespace rover

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rover/kernels.hpp"
#include "rover/rng.hpp"
#include "rover/tensor.hpp"

namespace rover::nn {

// ---------------------------------------------------------------------------
// Parameter storage + Adam
// ---------------------------------------------------------------------------

/// Named parameter tensors with matching gradient accumulators and Adam
/// moments. Networks register their tensors here; the optimizer walks the
/// registry in registration order.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor2<T> value, grad, m, v;
  };

  int add(const std::string& name, int rows, int cols) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    entries_.push_back(Entry{name, Tensor2<T>(rows, cols), Tensor2<T>(rows, cols),
                             Tensor2<T>(rows, cols), Tensor2<T>(rows, cols)});
    index_[name] = static_cast<int>(entries_.size()) - 1;
    return static_cast<int>(entries_.size()) - 1;
  }

  Tensor2<T>& value(int h) { return entries_[h].value; }
  const Tensor2<T>& value(int h) const { return entries_[h].value; }
  Tensor2<T>& grad(int h) { return entries_[h].grad; }
  const Tensor2<T>& grad(int h) const { return entries_[h].grad; }

  int handle(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
  }

  size_t count() const { return entries_.size(); }
  Entry& entry(int h) { return entries_[h]; }
  const Entry& entry(int h) const { return entries_[h]; }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_) e.grad.fill(T(0));
  }

  double grad_norm() const {
    double s = 0;
    for (const auto& e : entries_)
      for (const T& g : e.grad.data) s += static_cast<double>(g) * static_cast<double>(g);
    return std::sqrt(s);
  }

  void scale_grads(double s) {
    for (auto& e : entries_)
      for (T& g : e.grad.data) g = static_cast<T>(g * s);
  }

  /// Standard Adam with bias correction. Gradients are zeroed after the step.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    if (entries_.empty()) throw std::logic_error("adam_step on empty parameter store");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (auto& e : entries_) {
      T* w = e.value.data.data();
      T* g = e.grad.data.data();
      T* m = e.m.data.data();
      T* v = e.v.data.data();
      const size_t n = e.value.size();
      for (size_t i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * gi;
        const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        w[i] = static_cast<T>(static_cast<double>(w[i]) -
                              lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
      }
      e.grad.fill(T(0));
    }
  }

  long long adam_steps() const { return step_; }

  // -- checkpoint I/O: little-endian f32, one binary file ------------------
  // layout: "RTCK" u32 version u32 count, then per tensor:
  //   u32 name_len, name bytes, u32 rows, u32 cols, f32 data[rows*cols]

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint for write: " + path);
    f.write("RTCK", 4);
    write_u32(f, 1);
    write_u32(f, static_cast<uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      write_u32(f, static_cast<uint32_t>(e.name.size()));
      f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      write_u32(f, static_cast<uint32_t>(e.value.rows));
      write_u32(f, static_cast<uint32_t>(e.value.cols));
      for (const T& v : e.value.data) {
        const float x = static_cast<float>(v);
        f.write(reinterpret_cast<const char*>(&x), 4);
      }
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
  }

  /// Loads values into an already-constructed store; names and shapes must
  /// match the registered architecture exactly.
  void load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "RTCK", 4) != 0)
      throw std::runtime_error("bad checkpoint magic: " + path);
    const uint32_t version = read_u32(f);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    const uint32_t count = read_u32(f);
    if (count != entries_.size())
      throw std::runtime_error("checkpoint tensor count mismatch: " + path);
    for (uint32_t i = 0; i < count; ++i) {
      const uint32_t name_len = read_u32(f);
      std::string name(name_len, '\0');
      f.read(name.data(), name_len);
      const uint32_t rows = read_u32(f);
      const uint32_t cols = read_u32(f);
      auto it = index_.find(name);
      if (it == index_.end()) throw std::runtime_error("checkpoint has unknown tensor " + name);
      Entry& e = entries_[it->second];
      if (e.value.rows != static_cast<int>(rows) || e.value.cols != static_cast<int>(cols))
        throw std::runtime_error("checkpoint shape mismatch for " + name);
      for (T& v : e.value.data) {
        float x;
        f.read(reinterpret_cast<char*>(&x), 4);
        v = static_cast<T>(x);
      }
    }
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  }

  /// Hash of the architecture (names + shapes), for checkpoint manifests.
  uint64_t arch_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& e : entries_) {
      h = fnv1a64(e.name.data(), e.name.size(), h);
      const uint32_t d[2] = {static_cast<uint32_t>(e.value.rows),
                             static_cast<uint32_t>(e.value.cols)};
      h = fnv1a64(d, sizeof d, h);
    }
    return h;
  }

 private:
  static void write_u32(std::ofstream& f, uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  static uint32_t read_u32(std::ifstream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  long long step_ = 0;
};

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

/// Scaled-uniform init, U(-b, b) with b = gain * sqrt(3 / fan_in).
template <class T>
void init_uniform_fan(Tensor2<T>& w, Rng& rng, double gain) {
  const double b = gain * std::sqrt(3.0 / static_cast<double>(w.rows));
  for (T& v : w.data) v = static_cast<T>(rng.uniform(-b, b));
}

template <class T>
struct Linear {
  ParamStore<T>* ps = nullptr;
  int hw = -1, hb = -1;
  int in = 0, out = 0;

  void attach(ParamStore<T>& store, const std::string& name, int in_dim, int out_dim) {
    ps = &store;
    in = in_dim;
    out = out_dim;
    hw = store.add(name + ".w", in_dim, out_dim);
    hb = store.add(name + ".b", 1, out_dim);
  }

  void init(Rng& rng, double gain) { init_uniform_fan(ps->value(hw), rng, gain); }

  Tensor2<T> forward(const Tensor2<T>& x, bool parallel = true) const {
    x.require_shape(x.rows, in, "linear input");
    Tensor2<T> y(x.rows, out);
    kern::gemm_xw(x.data.data(), ps->value(hw).data.data(), y.data.data(), x.rows, in, out,
                  parallel);
    kern::add_row_bias(y.data.data(), ps->value(hb).data.data(), x.rows, out, parallel);
    return y;
  }

  /// Accumulates dW, db and returns dx. `x` must be the forward input.
  Tensor2<T> backward(const Tensor2<T>& x, const Tensor2<T>& dy, bool parallel = true) {
    dy.require_shape(x.rows, out, "linear backward dy");
    Tensor2<T> dx(x.rows, in);
    kern::gemm_dy_wt(dy.data.data(), ps->value(hw).data.data(), dx.data.data(), x.rows, in, out,
                     parallel);
    kern::gemm_xt_dy(x.data.data(), dy.data.data(), ps->grad(hw).data.data(), x.rows, in, out,
                     parallel);
    kern::colsum_accum(dy.data.data(), ps->grad(hb).data.data(), x.rows, out);
    return dx;
  }
};

enum class Act { leaky_relu, sigmoid, tanh };

inline constexpr double kLeakySlope = 0.01;

template <class T>
Tensor2<T> act_forward(Act kind, const Tensor2<T>& x) {
  Tensor2<T> y(x.rows, x.cols);
  const size_t n = x.size();
  switch (kind) {
    case Act::leaky_relu:
      for (size_t i = 0; i < n; ++i)
        y.data[i] = x.data[i] >= T(0) ? x.data[i] : static_cast<T>(kLeakySlope) * x.data[i];
      break;
    case Act::sigmoid:
      for (size_t i = 0; i < n; ++i)
        y.data[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x.data[i]))));
      break;
    case Act::tanh:
      for (size_t i = 0; i < n; ++i)
        y.data[i] = static_cast<T>(std::tanh(static_cast<double>(x.data[i])));
      break;
  }
  return y;
}

/// dx from dy; needs the pre-activation input x and the output y.
template <class T>
Tensor2<T> act_backward(Act kind, const Tensor2<T>& x, const Tensor2<T>& y, const Tensor2<T>& dy) {
  Tensor2<T> dx(x.rows, x.cols);
  const size_t n = x.size();
  switch (kind) {
    case Act::leaky_relu:
      for (size_t i = 0; i < n; ++i)
        dx.data[i] = dy.data[i] * (x.data[i] >= T(0) ? T(1) : static_cast<T>(kLeakySlope));
      break;
    case Act::sigmoid:
      for (size_t i = 0; i < n; ++i) dx.data[i] = dy.data[i] * y.data[i] * (T(1) - y.data[i]);
      break;
    case Act::tanh:
      for (size_t i = 0; i < n; ++i) dx.data[i] = dy.data[i] * (T(1) - y.data[i] * y.data[i]);
      break;
  }
  return dx;
}

/// Stack of linear layers with an activation after every hidden layer and an
/// optional activation on the output.
template <class T>
struct Mlp {
  std::vector<Linear<T>> layers;
  Act hidden_act = Act::leaky_relu;
  std::optional<Act> output_act;

  struct Cache {
    std::vector<Tensor2<T>> inputs;  // input to each linear layer
    std::vector<Tensor2<T>> pre;     // pre-activation output of each layer
    std::vector<Tensor2<T>> post;    // post-activation (== pre when no act)
  };

  void attach(ParamStore<T>& store, const std::string& name, const std::vector<int>& dims,
              Act hidden, std::optional<Act> output = std::nullopt) {
    hidden_act = hidden;
    output_act = output;
    layers.resize(dims.size() - 1);
    for (size_t i = 0; i + 1 < dims.size(); ++i)
      layers[i].attach(store, name + "." + std::to_string(i), dims[i], dims[i + 1]);
  }

  void init(Rng& rng, double hidden_gain, double output_gain) {
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].init(rng, i + 1 == layers.size() ? output_gain : hidden_gain);
  }

  int out_dim() const { return layers.back().out; }
  int in_dim() const { return layers.front().in; }

  Tensor2<T> forward(const Tensor2<T>& x, Cache& c, bool parallel = true) const {
    c.inputs.clear();
    c.pre.clear();
    c.post.clear();
    Tensor2<T> cur = x;
    for (size_t i = 0; i < layers.size(); ++i) {
      c.inputs.push_back(cur);
      Tensor2<T> pre = layers[i].forward(cur, parallel);
      const bool last = (i + 1 == layers.size());
      std::optional<Act> a = last ? output_act : std::optional<Act>(hidden_act);
      Tensor2<T> post = a ? act_forward(*a, pre) : pre;
      c.pre.push_back(std::move(pre));
      c.post.push_back(post);
      cur = std::move(post);
    }
    return cur;
  }

  Tensor2<T> backward(const Cache& c, Tensor2<T> dy, bool parallel = true) {
    for (size_t ii = layers.size(); ii-- > 0;) {
      const bool last = (ii + 1 == layers.size());
      std::optional<Act> a = last ? output_act : std::optional<Act>(hidden_act);
      if (a) dy = act_backward(*a, c.pre[ii], c.post[ii], dy);
      dy = layers[ii].backward(c.inputs[ii], dy, parallel);
    }
    return dy;
  }
};

// ---------------------------------------------------------------------------
// GRU cell
// ---------------------------------------------------------------------------

/// Single GRU cell:
///   r = sigmoid(x Wir + bir + h Whr + bhr)
///   z = sigmoid(x Wiz + biz + h Whz + bhz)
///   n = tanh(x Win + bin + r o (h Whn + bhn))
///   h' = (1 - z) o n + z o h
template <class T>
struct GruCell {
  ParamStore<T>* ps = nullptr;
  int in = 0, hidden = 0;
  int w_ir, w_iz, w_in, w_hr, w_hz, w_hn;
  int b_ir, b_iz, b_in, b_hr, b_hz, b_hn;

  struct Cache {
    Tensor2<T> x, h_prev, r, z, n, hn_pre;
  };

  void attach(ParamStore<T>& store, const std::string& name, int in_dim, int hidden_dim) {
    ps = &store;
    in = in_dim;
    hidden = hidden_dim;
    w_ir = store.add(name + ".w_ir", in, hidden);
    w_iz = store.add(name + ".w_iz", in, hidden);
    w_in = store.add(name + ".w_in", in, hidden);
    w_hr = store.add(name + ".w_hr", hidden, hidden);
    w_hz = store.add(name + ".w_hz", hidden, hidden);
    w_hn = store.add(name + ".w_hn", hidden, hidden);
    b_ir = store.add(name + ".b_ir", 1, hidden);
    b_iz = store.add(name + ".b_iz", 1, hidden);
    b_in = store.add(name + ".b_in", 1, hidden);
    b_hr = store.add(name + ".b_hr", 1, hidden);
    b_hz = store.add(name + ".b_hz", 1, hidden);
    b_hn = store.add(name + ".b_hn", 1, hidden);
  }

  void init(Rng& rng) {
    const double b = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int h : {w_ir, w_iz, w_in, w_hr, w_hz, w_hn})
      for (T& v : ps->value(h).data) v = static_cast<T>(rng.uniform(-b, b));
  }

  Tensor2<T> forward(const Tensor2<T>& x, const Tensor2<T>& h_prev, Cache& c,
                     bool parallel = true) const {
    x.require_shape(x.rows, in, "gru input");
    h_prev.require_shape(x.rows, hidden, "gru hidden");
    const int B = x.rows;
    auto gate = [&](int wi, int bi, int wh, int bh) {
      Tensor2<T> a(B, hidden);
      kern::gemm_xw(x.data.data(), ps->value(wi).data.data(), a.data.data(), B, in, hidden,
                    parallel);
      kern::add_row_bias(a.data.data(), ps->value(bi).data.data(), B, hidden, parallel);
      kern::gemm_xw(h_prev.data.data(), ps->value(wh).data.data(), a.data.data(), B, hidden,
                    hidden, parallel);
      kern::add_row_bias(a.data.data(), ps->value(bh).data.data(), B, hidden, parallel);
      return a;
    };
    Tensor2<T> r = act_forward(Act::sigmoid, gate(w_ir, b_ir, w_hr, b_hr));
    Tensor2<T> z = act_forward(Act::sigmoid, gate(w_iz, b_iz, w_hz, b_hz));

    Tensor2<T> hn_pre(B, hidden);
    kern::gemm_xw(h_prev.data.data(), ps->value(w_hn).data.data(), hn_pre.data.data(), B, hidden,
                  hidden, parallel);
    kern::add_row_bias(hn_pre.data.data(), ps->value(b_hn).data.data(), B, hidden, parallel);

    Tensor2<T> n_pre(B, hidden);
    kern::gemm_xw(x.data.data(), ps->value(w_in).data.data(), n_pre.data.data(), B, in, hidden,
                  parallel);
    kern::add_row_bias(n_pre.data.data(), ps->value(b_in).data.data(), B, hidden, parallel);
    for (size_t i = 0; i < n_pre.size(); ++i) n_pre.data[i] += r.data[i] * hn_pre.data[i];
    Tensor2<T> n = act_forward(Act::tanh, n_pre);

    Tensor2<T> h(B, hidden);
    for (size_t i = 0; i < h.size(); ++i)
      h.data[i] = (T(1) - z.data[i]) * n.data[i] + z.data[i] * h_prev.data[i];

    c.x = x;
    c.h_prev = h_prev;
    c.r = std::move(r);
    c.z = std::move(z);
    c.n = std::move(n);
    c.hn_pre = std::move(hn_pre);
    return h;
  }

  /// Returns (dx, dh_prev) and accumulates parameter gradients.
  std::pair<Tensor2<T>, Tensor2<T>> backward(const Cache& c, const Tensor2<T>& dh,
                                             bool parallel = true) {
    const int B = c.x.rows;
    Tensor2<T> da_z(B, hidden), da_n(B, hidden), da_r(B, hidden), d_hn(B, hidden);
    for (size_t i = 0; i < dh.size(); ++i) {
      const T r = c.r.data[i], z = c.z.data[i], n = c.n.data[i];
      const T dz = dh.data[i] * (c.h_prev.data[i] - n);
      da_z.data[i] = dz * z * (T(1) - z);
      const T dn = dh.data[i] * (T(1) - z);
      da_n.data[i] = dn * (T(1) - n * n);
      const T dr = da_n.data[i] * c.hn_pre.data[i];
      da_r.data[i] = dr * r * (T(1) - r);
      d_hn.data[i] = da_n.data[i] * r;
    }

    Tensor2<T> dx(B, in), dh_prev(B, hidden);
    auto accum_input = [&](const Tensor2<T>& da, int wi) {
      Tensor2<T> part(B, in);
      kern::gemm_dy_wt(da.data.data(), ps->value(wi).data.data(), part.data.data(), B, in, hidden,
                       parallel);
      for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += part.data[i];
    };
    auto accum_hidden = [&](const Tensor2<T>& da, int wh) {
      Tensor2<T> part(B, hidden);
      kern::gemm_dy_wt(da.data.data(), ps->value(wh).data.data(), part.data.data(), B, hidden,
                       hidden, parallel);
      for (size_t i = 0; i < dh_prev.size(); ++i) dh_prev.data[i] += part.data[i];
    };
    accum_input(da_r, w_ir);
    accum_input(da_z, w_iz);
    accum_input(da_n, w_in);
    accum_hidden(da_r, w_hr);
    accum_hidden(da_z, w_hz);
    accum_hidden(d_hn, w_hn);
    for (size_t i = 0; i < dh_prev.size(); ++i) dh_prev.data[i] += dh.data[i] * c.z.data[i];

    auto accum_w = [&](const Tensor2<T>& src, const Tensor2<T>& da, int wh, int K) {
      kern::gemm_xt_dy(src.data.data(), da.data.data(), ps->grad(wh).data.data(), B, K, hidden,
                       parallel);
    };
    accum_w(c.x, da_r, w_ir, in);
    accum_w(c.x, da_z, w_iz, in);
    accum_w(c.x, da_n, w_in, in);
    accum_w(c.h_prev, da_r, w_hr, hidden);
    accum_w(c.h_prev, da_z, w_hz, hidden);
    accum_w(c.h_prev, d_hn, w_hn, hidden);
    kern::colsum_accum(da_r.data.data(), ps->grad(b_ir).data.data(), B, hidden);
    kern::colsum_accum(da_z.data.data(), ps->grad(b_iz).data.data(), B, hidden);
    kern::colsum_accum(da_n.data.data(), ps->grad(b_in).data.data(), B, hidden);
    kern::colsum_accum(da_r.data.data(), ps->grad(b_hr).data.data(), B, hidden);
    kern::colsum_accum(da_z.data.data(), ps->grad(b_hz).data.data(), B, hidden);
    kern::colsum_accum(d_hn.data.data(), ps->grad(b_hn).data.data(), B, hidden);
    return {std::move(dx), std::move(dh_prev)};
  }
};

// ---------------------------------------------------------------------------
// Diagonal Gaussian head
// ---------------------------------------------------------------------------

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Diagonal Gaussian over actions; log_std is a state-independent learnable
/// row vector.
template <class T>
struct GaussianHead {
  ParamStore<T>* ps = nullptr;
  int h_log_std = -1;
  int dim = 0;

  void attach(ParamStore<T>& store, const std::string& name, int d) {
    ps = &store;
    dim = d;
    h_log_std = store.add(name + ".log_std", 1, d);  // init 0 => std 1
  }

  const Tensor2<T>& log_std() const { return ps->value(h_log_std); }

  /// Per-row log density of `actions` under N(mean, diag(exp(log_std))^2),
  /// and the (state-independent) entropy.
  void logp_entropy(const Tensor2<T>& mean, const Tensor2<T>& actions, std::vector<double>& logp,
                    std::vector<double>& entropy) const {
    mean.require_shape(actions.rows, dim, "gaussian mean");
    const Tensor2<T>& ls = log_std();
    logp.assign(mean.rows, 0.0);
    double ent = 0.0;
    for (int j = 0; j < dim; ++j) ent += 0.5 * (1.0 + kLog2Pi) + static_cast<double>(ls(0, j));
    entropy.assign(mean.rows, ent);
    for (int b = 0; b < mean.rows; ++b) {
      double lp = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double s = std::exp(static_cast<double>(ls(0, j)));
        const double z = (static_cast<double>(actions(b, j)) - static_cast<double>(mean(b, j))) / s;
        lp += -0.5 * z * z - static_cast<double>(ls(0, j)) - 0.5 * kLog2Pi;
      }
      logp[b] = lp;
    }
  }

  /// Draws one action row; consumes exactly `dim` normals from `rng`.
  void sample_row(const Tensor2<T>& mean, int row, Rng& rng, T* out) const {
    const Tensor2<T>& ls = log_std();
    for (int j = 0; j < dim; ++j) {
      const double s = std::exp(static_cast<double>(ls(0, j)));
      out[j] = static_cast<T>(static_cast<double>(mean(row, j)) + s * rng.normal());
    }
  }

  /// Backward of sum_b( logp_coef[b] * logp_b + ent_coef * entropy ).
  /// Returns d/dmean and accumulates the log_std gradient.
  Tensor2<T> backward(const Tensor2<T>& mean, const Tensor2<T>& actions,
                      const std::vector<double>& logp_coef, double ent_coef) {
    const Tensor2<T>& ls = log_std();
    Tensor2<T>& gls = ps->grad(h_log_std);
    Tensor2<T> dmean(mean.rows, dim);
    for (int b = 0; b < mean.rows; ++b) {
      for (int j = 0; j < dim; ++j) {
        const double s = std::exp(static_cast<double>(ls(0, j)));
        const double z = (static_cast<double>(actions(b, j)) - static_cast<double>(mean(b, j))) / s;
        dmean(b, j) = static_cast<T>(logp_coef[b] * z / s);
        gls(0, j) += static_cast<T>(logp_coef[b] * (z * z - 1.0) + ent_coef);
      }
    }
    return dmean;
  }
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  size_t checked = 0;
  std::string worst;

  bool pass(double rel_tol) const { return checked > 0 && max_rel_err < rel_tol; }
};

/// Central-difference check of analytic gradients against `loss`. The closure
/// must evaluate the full forward pass from current store values. Gradients
/// must already be populated (one backward pass at the unperturbed point).
/// Checks up to `max_per_tensor` randomly chosen entries per tensor.
inline GradCheckReport grad_check(ParamStore<double>& ps, const std::function<double()>& loss,
                                  size_t max_per_tensor = 200, double eps = 1e-5,
                                  uint64_t seed = 1) {
  Rng rng(derive_seed(seed, "grad_check"));
  GradCheckReport rep;
  for (size_t h = 0; h < ps.count(); ++h) {
    auto& e = ps.entry(static_cast<int>(h));
    const size_t n = e.value.size();
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (n > max_per_tensor) {
      fisher_yates(idx, rng);
      idx.resize(max_per_tensor);
    }
    for (size_t i : idx) {
      const double w0 = e.value.data[i];
      const double step = eps * std::max(1.0, std::fabs(w0));
      e.value.data[i] = w0 + step;
      const double lp = loss();
      e.value.data[i] = w0 - step;
      const double lm = loss();
      e.value.data[i] = w0;
      const double fd = (lp - lm) / (2.0 * step);
      const double an = e.grad.data[i];
      const double abs_err = std::fabs(fd - an);
      const double rel_err = abs_err / std::max({std::fabs(fd), std::fabs(an), 1e-6});
      if (abs_err > rep.max_abs_err) rep.max_abs_err = abs_err;
      if (rel_err > rep.max_rel_err) {
        rep.max_rel_err = rel_err;
        rep.worst = e.name + "[" + std::to_string(i) + "]";
      }
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace rover::nn

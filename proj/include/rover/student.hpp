#pragma once

#include <string>
#include <vector>

#include "rover/dataset.hpp"
#include "rover/nn.hpp"
#include "rover/noise.hpp"

namespace rover {

/// Recurrent student policy. Noisy heightmaps pass through the same encoder
/// shapes as the teacher (independently trained parameters) into 20-d
/// latents; a two-layer GRU summarizes [proprio, l_s, l_d] over time; a
/// sigmoid attention gate mixes the raw latents into the belief state; a
/// deterministic action MLP consumes [proprio, belief].
template <class T>
class StudentNetT {
 public:
  static constexpr int kProprioDim = 4;
  static constexpr int kActionDim = 2;
  static constexpr int kLatentDim = 20;
  static constexpr int kBeliefDim = 2 * kLatentDim;  // gate/belief width

  StudentNetT(int k_dense, int k_sparse, int gru_hidden = 256)
      : k_dense_(k_dense), k_sparse_(k_sparse), hidden_(gru_hidden) {
    ed_.attach(ps_, "student.dense_enc", {k_dense, 60, kLatentDim}, nn::Act::leaky_relu,
               nn::Act::leaky_relu);
    es_.attach(ps_, "student.sparse_enc", {k_sparse, 60, kLatentDim}, nn::Act::leaky_relu,
               nn::Act::leaky_relu);
    gru1_.attach(ps_, "student.gru1", kProprioDim + kBeliefDim, hidden_);
    gru2_.attach(ps_, "student.gru2", hidden_, hidden_);
    ea_.attach(ps_, "student.attn_enc", {hidden_, 128, 256, 512, 1024, kBeliefDim},
               nn::Act::leaky_relu, nn::Act::sigmoid);
    eb_.attach(ps_, "student.belief_enc", {hidden_, 128, 256, 512, 1024, kBeliefDim},
               nn::Act::leaky_relu);
    act_.attach(ps_, "student.action", {kProprioDim + kBeliefDim, 512, 256, 128, kActionDim},
                nn::Act::leaky_relu);
  }

  void init_params(uint64_t seed) {
    Rng rng(derive_seed(seed, "student_init"));
    const double g = std::sqrt(2.0);
    ed_.init(rng, g, g);
    es_.init(rng, g, g);
    gru1_.init(rng);
    gru2_.init(rng);
    ea_.init(rng, g, 1.0);
    eb_.init(rng, g, 1.0);
    act_.init(rng, g, 1.0);
  }

  struct Hidden {
    Tensor2<T> h1, h2;
    Hidden() = default;
    Hidden(int batch, int hidden) : h1(batch, hidden), h2(batch, hidden) {}
  };
  Hidden zero_hidden(int batch) const { return Hidden(batch, hidden_); }

  struct StepCache {
    typename nn::Mlp<T>::Cache ed, es, ea, eb, act;
    typename nn::GruCell<T>::Cache g1, g2;
    Tensor2<T> ld, ls, gru_in, x_prime, gate, belief, act_in;
  };

  /// One timestep: encodes the (noisy) heightmaps, advances the GRU, forms
  /// the gated belief state and the action. `hidden` is carried between
  /// steps and must be zeroed at episode starts.
  Tensor2<T> step_forward(const Tensor2<T>& proprio, const Tensor2<T>& dense,
                          const Tensor2<T>& sparse, Hidden& hidden, StepCache& c) const {
    proprio.require_shape(proprio.rows, kProprioDim, "student proprio");
    dense.require_shape(proprio.rows, k_dense_, "student dense heightmap");
    sparse.require_shape(proprio.rows, k_sparse_, "student sparse heightmap");
    const int B = proprio.rows;
    c.ld = ed_.forward(dense, c.ed);
    c.ls = es_.forward(sparse, c.es);

    c.gru_in = Tensor2<T>(B, kProprioDim + kBeliefDim);
    for (int r = 0; r < B; ++r) {
      T* dst = c.gru_in.row(r);
      std::copy(proprio.row(r), proprio.row(r) + kProprioDim, dst);
      std::copy(c.ls.row(r), c.ls.row(r) + kLatentDim, dst + kProprioDim);
      std::copy(c.ld.row(r), c.ld.row(r) + kLatentDim, dst + kProprioDim + kLatentDim);
    }
    const Tensor2<T> h1 = gru1_.forward(c.gru_in, hidden.h1, c.g1);
    const Tensor2<T> h2 = gru2_.forward(h1, hidden.h2, c.g2);
    hidden.h1 = h1;
    hidden.h2 = h2;
    c.x_prime = h2;

    c.gate = ea_.forward(c.x_prime, c.ea);
    const Tensor2<T> eb_out = eb_.forward(c.x_prime, c.eb);
    c.belief = Tensor2<T>(B, kBeliefDim);
    for (int r = 0; r < B; ++r)
      for (int j = 0; j < kBeliefDim; ++j) {
        const T latent = j < kLatentDim ? c.ls(r, j) : c.ld(r, j - kLatentDim);
        c.belief(r, j) = eb_out(r, j) + latent * c.gate(r, j);
      }

    c.act_in = Tensor2<T>(B, kProprioDim + kBeliefDim);
    for (int r = 0; r < B; ++r) {
      T* dst = c.act_in.row(r);
      std::copy(proprio.row(r), proprio.row(r) + kProprioDim, dst);
      std::copy(c.belief.row(r), c.belief.row(r) + kBeliefDim, dst + kProprioDim);
    }
    return act_.forward(c.act_in, c.act);
  }

  /// Backward through one timestep. `daction` is the loss gradient at this
  /// step's output; dh1/dh2 carry the recurrent gradient from step t+1 (zero
  /// at the sequence end) and are replaced with the gradients for step t-1.
  void step_backward(StepCache& c, const Tensor2<T>& daction, Tensor2<T>& dh1, Tensor2<T>& dh2) {
    const int B = daction.rows;
    const Tensor2<T> dact_in = act_.backward(c.act, daction);
    Tensor2<T> dbelief(B, kBeliefDim);
    for (int r = 0; r < B; ++r)
      std::copy(dact_in.row(r) + kProprioDim, dact_in.row(r) + kProprioDim + kBeliefDim,
                dbelief.row(r));

    // belief = eb(x') + [l_s, l_d] o gate
    Tensor2<T> dgate(B, kBeliefDim), dlatent(B, kBeliefDim);
    for (int r = 0; r < B; ++r)
      for (int j = 0; j < kBeliefDim; ++j) {
        const T latent = j < kLatentDim ? c.ls(r, j) : c.ld(r, j - kLatentDim);
        dgate(r, j) = dbelief(r, j) * latent;
        dlatent(r, j) = dbelief(r, j) * c.gate(r, j);
      }
    Tensor2<T> dx = eb_.backward(c.eb, dbelief);
    const Tensor2<T> dx_gate = ea_.backward(c.ea, dgate);
    for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += dx_gate.data[i];
    for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += dh2.data[i];

    auto [dg2_in, dh2_prev] = gru2_.backward(c.g2, dx);
    Tensor2<T> dh1_total = dg2_in;
    for (size_t i = 0; i < dh1_total.size(); ++i) dh1_total.data[i] += dh1.data[i];
    auto [dg1_in, dh1_prev] = gru1_.backward(c.g1, dh1_total);

    // latent gradients: gate path + GRU input path
    Tensor2<T> dls(B, kLatentDim), dld(B, kLatentDim);
    for (int r = 0; r < B; ++r)
      for (int j = 0; j < kLatentDim; ++j) {
        dls(r, j) = dlatent(r, j) + dg1_in(r, kProprioDim + j);
        dld(r, j) = dlatent(r, kLatentDim + j) + dg1_in(r, kProprioDim + kLatentDim + j);
      }
    es_.backward(c.es, dls);
    ed_.backward(c.ed, dld);

    dh1 = dh1_prev;
    dh2 = dh2_prev;
  }

  /// Deterministic inference action, clamped to [-1, 1].
  Tensor2<T> act_clamped(const Tensor2<T>& proprio, const Tensor2<T>& dense,
                         const Tensor2<T>& sparse, Hidden& hidden) const {
    StepCache scratch;
    Tensor2<T> a = step_forward(proprio, dense, sparse, hidden, scratch);
    for (T& v : a.data) v = std::clamp(v, T(-1), T(1));
    return a;
  }

  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }
  int k_dense() const { return k_dense_; }
  int k_sparse() const { return k_sparse_; }
  int gru_hidden() const { return hidden_; }

 private:
  int k_dense_, k_sparse_, hidden_;
  nn::ParamStore<T> ps_;
  nn::Mlp<T> ed_, es_, ea_, eb_, act_;
  nn::GruCell<T> gru1_, gru2_;
};

using StudentNet = StudentNetT<float>;

struct StudentTrainConfig {
  std::vector<std::string> shard_paths;
  PatternConfig pattern;  // pattern the dataset was logged with
  NoisePreset noise = NoisePreset::train_mix;
  int seq_len = 30;
  int batch_size = 64;
  double lr = 3e-4;
  int epochs = 20;
  double validation_fraction = 0.1;
  int patience = 5;  // epochs without validation improvement before stopping
  int gru_hidden = 256;
  uint64_t seed = 1;
  std::string out_dir;
};

struct StudentTrainResult {
  std::string checkpoint_path;
  std::string loss_path;
  int epochs_run = 0;
  double final_train_mse = 0;
  double best_val_mse = 0;
};

/// Supervised distillation: truncated BPTT over fixed-length sequences with
/// fresh zero hidden state per sequence, MSE against the logged actions,
/// heightmap noise applied per sequence. Stops early when the validation
/// loss stops improving.
StudentTrainResult train_student(const StudentTrainConfig& cfg);

/// Held-out action MSE of a trained student on noise-free data.
double student_validation_mse(StudentNet& net, SequenceSampler& sampler);

}  // namespace rover

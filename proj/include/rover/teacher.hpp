#pragma once

#include <deque>
#include <string>
#include <vector>

#include "rover/nn.hpp"
#include "rover/noise.hpp"
#include "rover/simkin.hpp"

namespace rover {

/// Feed-forward actor-critic. Dense and sparse heightmaps pass through
/// two-layer encoders into 20-d latents; the action and value trunks consume
/// [proprio, l_d, l_s]. The critic owns separate parameters end to end.
template <class T>
class TeacherNetT {
 public:
  static constexpr int kProprioDim = 4;
  static constexpr int kActionDim = 2;
  static constexpr int kLatentDim = 20;

  TeacherNetT(int k_dense, int k_sparse) : k_dense_(k_dense), k_sparse_(k_sparse) {
    ed_.attach(ps_, "policy.dense_enc", {k_dense, 60, kLatentDim}, nn::Act::leaky_relu,
               nn::Act::leaky_relu);
    es_.attach(ps_, "policy.sparse_enc", {k_sparse, 60, kLatentDim}, nn::Act::leaky_relu,
               nn::Act::leaky_relu);
    pol_.attach(ps_, "policy.trunk", {kProprioDim + 2 * kLatentDim, 512, 256, 128, kActionDim},
                nn::Act::leaky_relu);
    head_.attach(ps_, "policy", kActionDim);
    ed_v_.attach(ps_, "value.dense_enc", {k_dense, 60, kLatentDim}, nn::Act::leaky_relu,
                 nn::Act::leaky_relu);
    es_v_.attach(ps_, "value.sparse_enc", {k_sparse, 60, kLatentDim}, nn::Act::leaky_relu,
                 nn::Act::leaky_relu);
    val_.attach(ps_, "value.trunk", {kProprioDim + 2 * kLatentDim, 512, 256, 128, 1},
                nn::Act::leaky_relu);
  }

  void init_params(uint64_t seed) {
    Rng rng(derive_seed(seed, "teacher_init"));
    const double g = std::sqrt(2.0);
    ed_.init(rng, g, g);
    es_.init(rng, g, g);
    pol_.init(rng, g, 1.0);
    ed_v_.init(rng, g, g);
    es_v_.init(rng, g, g);
    val_.init(rng, g, 1.0);
  }

  struct Cache {
    typename nn::Mlp<T>::Cache ed, es, pol, ed_v, es_v, val;
    Tensor2<T> pol_in, val_in;
  };

  /// mean: B x 2, value: B x 1.
  void forward(const Tensor2<T>& proprio, const Tensor2<T>& dense, const Tensor2<T>& sparse,
               Tensor2<T>& mean, Tensor2<T>& value, Cache& c) const {
    proprio.require_shape(proprio.rows, kProprioDim, "teacher proprio");
    dense.require_shape(proprio.rows, k_dense_, "teacher dense heightmap");
    sparse.require_shape(proprio.rows, k_sparse_, "teacher sparse heightmap");
    const Tensor2<T> ld = ed_.forward(dense, c.ed);
    const Tensor2<T> ls = es_.forward(sparse, c.es);
    c.pol_in = concat(proprio, ld, ls);
    mean = pol_.forward(c.pol_in, c.pol);
    const Tensor2<T> ld_v = ed_v_.forward(dense, c.ed_v);
    const Tensor2<T> ls_v = es_v_.forward(sparse, c.es_v);
    c.val_in = concat(proprio, ld_v, ls_v);
    value = val_.forward(c.val_in, c.val);
  }

  /// Accumulates gradients from dmean and dvalue through both towers.
  void backward(Cache& c, const Tensor2<T>& dmean, const Tensor2<T>& dvalue) {
    const Tensor2<T> dpol_in = pol_.backward(c.pol, dmean);
    Tensor2<T> dld, dls;
    split(dpol_in, dld, dls);
    ed_.backward(c.ed, dld);
    es_.backward(c.es, dls);
    const Tensor2<T> dval_in = val_.backward(c.val, dvalue);
    Tensor2<T> dld_v, dls_v;
    split(dval_in, dld_v, dls_v);
    ed_v_.backward(c.ed_v, dld_v);
    es_v_.backward(c.es_v, dls_v);
  }

  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }
  nn::GaussianHead<T>& head() { return head_; }
  const nn::GaussianHead<T>& head() const { return head_; }
  int k_dense() const { return k_dense_; }
  int k_sparse() const { return k_sparse_; }

 private:
  static Tensor2<T> concat(const Tensor2<T>& a, const Tensor2<T>& b, const Tensor2<T>& c2) {
    Tensor2<T> out(a.rows, a.cols + b.cols + c2.cols);
    for (int r = 0; r < a.rows; ++r) {
      T* dst = out.row(r);
      std::copy(a.row(r), a.row(r) + a.cols, dst);
      std::copy(b.row(r), b.row(r) + b.cols, dst + a.cols);
      std::copy(c2.row(r), c2.row(r) + c2.cols, dst + a.cols + b.cols);
    }
    return out;
  }

  static void split(const Tensor2<T>& d, Tensor2<T>& dld, Tensor2<T>& dls) {
    dld = Tensor2<T>(d.rows, kLatentDim);
    dls = Tensor2<T>(d.rows, kLatentDim);
    for (int r = 0; r < d.rows; ++r) {
      const T* src = d.row(r);
      std::copy(src + kProprioDim, src + kProprioDim + kLatentDim, dld.row(r));
      std::copy(src + kProprioDim + kLatentDim, src + kProprioDim + 2 * kLatentDim, dls.row(r));
    }
  }

  int k_dense_, k_sparse_;
  nn::ParamStore<T> ps_;
  nn::Mlp<T> ed_, es_, pol_, ed_v_, es_v_, val_;
  nn::GaussianHead<T> head_;
};

using TeacherNet = TeacherNetT<float>;

struct PpoConfig {
  double lr = 1e-4;
  double kl_threshold = 0.008;
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double value_coef = 1.0;
  double entropy_coef = 0.0;
  double grad_clip_norm = 1.0;
  int horizon = 60;
  double lr_min = 1e-6;
  double lr_max = 1e-2;

  void validate() const;
};

/// Fixed-horizon on-policy storage, flattened as [t * n_envs + env].
struct RolloutBuffer {
  int horizon = 0, n_envs = 0;
  Tensor2<float> proprio, dense, sparse, actions;
  std::vector<double> logp, value, reward;
  std::vector<unsigned char> done;
  std::vector<double> bootstrap_value;  // V(s_T) per env
  std::vector<double> adv, ret;         // filled by compute_gae
  int filled = 0;

  RolloutBuffer(int horizon_steps, int envs, int k_dense, int k_sparse);
  int index(int t, int env) const { return t * n_envs + env; }
  bool full() const { return filled == horizon; }
};

/// GAE(gamma, lambda) with episode-boundary masking; returns = advantages +
/// values. Requires a full buffer with bootstrap values.
void compute_gae(RolloutBuffer& buffer, double gamma, double lam);

/// KL-adaptive learning rate: halve-ish above twice the threshold, grow below
/// half of it, clamped to [lr_min, lr_max].
double kl_adaptive_lr(double approx_kl, double lr, double kl_threshold, double lr_min = 1e-6,
                      double lr_max = 1e-2);

struct PpoStats {
  double policy_loss = 0;
  double value_loss = 0;
  double approx_kl = 0;  // last epoch's mean
  double clip_frac = 0;
  double lr_after = 0;
};

/// One PPO update: epochs x minibatches of clipped-surrogate + value MSE over
/// the buffer, Adam steps, KL-adaptive learning rate applied per epoch.
/// `lr` is updated in place.
PpoStats ppo_update(TeacherNet& net, RolloutBuffer& buffer, const PpoConfig& cfg, double& lr,
                    Rng& shuffle_rng);

struct TeacherTrainConfig {
  PpoConfig ppo;
  SimConfig sim;
  RewardWeights rewards;
  PatternConfig pattern;
  TerrainParams terrain;
  NoisePreset domain_rand = NoisePreset::none;
  int n_envs = 64;
  long long total_env_steps = 0;
  uint64_t seed = 1;
  int checkpoint_every_iters = 200;
  double stop_at_success = -1.0;  // rolling train success; <= 0 disables
  int stats_window = 100;         // completed episodes in the rolling window
  std::string out_dir;
};

struct TeacherTrainResult {
  std::string checkpoint_path;
  std::string metrics_path;
  long long env_steps = 0;
  int iterations = 0;
  double rolling_success = 0;
  double rolling_return = 0;
};

/// Alternating rollout/update loop over a vectorized environment; logs
/// per-iteration metrics CSV and periodic checkpoints under out_dir.
TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg);

/// Checkpoint manifest (JSON sidecar) helpers shared by teacher and student.
/// gru_hidden is 0 for feed-forward (teacher) checkpoints.
void write_checkpoint_manifest(const std::string& json_path, const std::string& kind,
                               uint64_t arch_hash, const PatternConfig& pattern, int k_dense,
                               int k_sparse, int gru_hidden = 0);

struct CheckpointInfo {
  std::string kind;
  uint64_t arch_hash = 0;
  PatternConfig pattern;
  int k_dense = 0;
  int k_sparse = 0;
  int gru_hidden = 0;
};
CheckpointInfo read_checkpoint_manifest(const std::string& json_path);

}  // namespace rover

#include "rover/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rover {

using json = nlohmann::ordered_json;

void PpoConfig::validate() const {
  if (!(gamma > 0 && gamma <= 1) || !(lam > 0 && lam <= 1))
    throw std::invalid_argument("gamma and lambda must be in (0, 1]");
  if (lr <= 0 || clip <= 0 || epochs < 1 || minibatches < 1 || horizon < 1)
    throw std::invalid_argument("invalid PPO config");
}

RolloutBuffer::RolloutBuffer(int horizon_steps, int envs, int k_dense, int k_sparse)
    : horizon(horizon_steps),
      n_envs(envs),
      proprio(horizon_steps * envs, TeacherNet::kProprioDim),
      dense(horizon_steps * envs, k_dense),
      sparse(horizon_steps * envs, k_sparse),
      actions(horizon_steps * envs, TeacherNet::kActionDim),
      logp(static_cast<size_t>(horizon_steps) * envs, 0.0),
      value(static_cast<size_t>(horizon_steps) * envs, 0.0),
      reward(static_cast<size_t>(horizon_steps) * envs, 0.0),
      done(static_cast<size_t>(horizon_steps) * envs, 0),
      bootstrap_value(envs, 0.0),
      adv(static_cast<size_t>(horizon_steps) * envs, 0.0),
      ret(static_cast<size_t>(horizon_steps) * envs, 0.0) {}

void compute_gae(RolloutBuffer& b, double gamma, double lam) {
  if (!b.full()) throw std::logic_error("compute_gae on a partially filled buffer");
  for (int e = 0; e < b.n_envs; ++e) {
    double acc = 0.0;
    for (int t = b.horizon - 1; t >= 0; --t) {
      const int i = b.index(t, e);
      const double mask = b.done[i] ? 0.0 : 1.0;
      const double next_v = t + 1 < b.horizon ? b.value[b.index(t + 1, e)] : b.bootstrap_value[e];
      const double delta = b.reward[i] + gamma * mask * next_v - b.value[i];
      acc = delta + gamma * lam * mask * acc;
      b.adv[i] = acc;
      b.ret[i] = acc + b.value[i];
    }
  }
}

double kl_adaptive_lr(double approx_kl, double lr, double kl_threshold, double lr_min,
                      double lr_max) {
  if (!(lr > 0)) throw std::invalid_argument("learning rate must be positive");
  if (approx_kl > 2.0 * kl_threshold)
    lr /= 1.5;
  else if (approx_kl < 0.5 * kl_threshold)
    lr *= 1.5;
  return std::clamp(lr, lr_min, lr_max);
}

namespace {

Tensor2<float> gather_rows(const Tensor2<float>& src, const std::vector<int>& idx) {
  Tensor2<float> out(static_cast<int>(idx.size()), src.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy(src.row(idx[r]), src.row(idx[r]) + src.cols, out.row(static_cast<int>(r)));
  return out;
}

void normalize_advantages(RolloutBuffer& b) {
  double mean = 0;
  for (double a : b.adv) mean += a;
  mean /= static_cast<double>(b.adv.size());
  double var = 0;
  for (double a : b.adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(b.adv.size());
  const double std = std::sqrt(var);
  if (std < 1e-12) {
    for (double& a : b.adv) a -= mean;
    return;
  }
  for (double& a : b.adv) a = (a - mean) / std;
}

constexpr double kLogStdMin = -5.0, kLogStdMax = 2.0;

}  // namespace

PpoStats ppo_update(TeacherNet& net, RolloutBuffer& buffer, const PpoConfig& cfg, double& lr,
                    Rng& shuffle_rng) {
  cfg.validate();
  if (!buffer.full()) throw std::logic_error("ppo_update on a partially filled buffer");
  normalize_advantages(buffer);

  const int n = buffer.horizon * buffer.n_envs;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  PpoStats stats;
  int total_minibatches = 0;
  double clip_hits = 0, clip_total = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    fisher_yates(order, shuffle_rng);
    double epoch_kl = 0;
    int epoch_mbs = 0;
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int lo = static_cast<int>(static_cast<long long>(mb) * n / cfg.minibatches);
      const int hi = static_cast<int>(static_cast<long long>(mb + 1) * n / cfg.minibatches);
      if (hi <= lo) continue;
      const std::vector<int> idx(order.begin() + lo, order.begin() + hi);
      const int m = static_cast<int>(idx.size());

      const Tensor2<float> proprio = gather_rows(buffer.proprio, idx);
      const Tensor2<float> dense = gather_rows(buffer.dense, idx);
      const Tensor2<float> sparse = gather_rows(buffer.sparse, idx);
      const Tensor2<float> acts = gather_rows(buffer.actions, idx);

      TeacherNet::Cache cache;
      Tensor2<float> mean, value;
      net.forward(proprio, dense, sparse, mean, value, cache);

      std::vector<double> new_logp, entropy;
      net.head().logp_entropy(mean, acts, new_logp, entropy);

      double policy_loss = 0, value_loss = 0, kl = 0;
      std::vector<double> logp_coef(m, 0.0);
      Tensor2<float> dvalue(m, 1);
      for (int r = 0; r < m; ++r) {
        const double old_lp = buffer.logp[idx[r]];
        const double a = buffer.adv[idx[r]];
        const double ratio = std::exp(new_logp[r] - old_lp);
        const double unclipped = ratio * a;
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * a;
        policy_loss += -std::min(unclipped, clipped);
        if (unclipped <= clipped) logp_coef[r] = -a * ratio / m;
        if (ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip) clip_hits += 1;
        clip_total += 1;
        kl += old_lp - new_logp[r];

        const double verr = static_cast<double>(value(r, 0)) - buffer.ret[idx[r]];
        value_loss += verr * verr;
        dvalue(r, 0) = static_cast<float>(cfg.value_coef * 2.0 * verr / m);
      }
      policy_loss /= m;
      value_loss /= m;
      kl /= m;
      const double loss =
          policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy[0];
      if (!std::isfinite(loss))
        throw std::runtime_error("PPO loss diverged (NaN/inf): policy=" +
                                 std::to_string(policy_loss) +
                                 " value=" + std::to_string(value_loss));

      net.params().zero_grads();
      const Tensor2<float> dmean =
          net.head().backward(mean, acts, logp_coef, -cfg.entropy_coef / m);
      net.backward(cache, dmean, dvalue);

      if (cfg.grad_clip_norm > 0) {
        const double gn = net.params().grad_norm();
        if (gn > cfg.grad_clip_norm) net.params().scale_grads(cfg.grad_clip_norm / gn);
      }
      net.params().adam_step(lr);
      {
        auto& ls = net.params().value(net.head().h_log_std);
        for (float& v : ls.data)
          v = std::clamp(v, static_cast<float>(kLogStdMin), static_cast<float>(kLogStdMax));
      }

      stats.policy_loss += policy_loss;
      stats.value_loss += value_loss;
      epoch_kl += kl;
      ++epoch_mbs;
      ++total_minibatches;
    }
    epoch_kl /= std::max(1, epoch_mbs);
    stats.approx_kl = epoch_kl;
    lr = kl_adaptive_lr(epoch_kl, lr, cfg.kl_threshold, cfg.lr_min, cfg.lr_max);
  }

  stats.policy_loss /= std::max(1, total_minibatches);
  stats.value_loss /= std::max(1, total_minibatches);
  stats.clip_frac = clip_total > 0 ? clip_hits / clip_total : 0.0;
  stats.lr_after = lr;
  return stats;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

struct RollingStats {
  std::deque<std::pair<double, bool>> window;  // (episode return, success)
  size_t cap;
  explicit RollingStats(size_t n) : cap(n) {}
  void push(double ret, bool success) {
    window.emplace_back(ret, success);
    if (window.size() > cap) window.pop_front();
  }
  double mean_return() const {
    if (window.empty()) return std::nan("");
    double s = 0;
    for (const auto& [r, ok] : window) s += r;
    return s / static_cast<double>(window.size());
  }
  double success_rate() const {
    if (window.empty()) return std::nan("");
    double s = 0;
    for (const auto& [r, ok] : window) s += ok ? 1.0 : 0.0;
    return s / static_cast<double>(window.size());
  }
};

void pack_observations(const std::vector<Observation>& obs, Tensor2<float>& proprio,
                       Tensor2<float>& dense, Tensor2<float>& sparse) {
  for (size_t i = 0; i < obs.size(); ++i) {
    const int r = static_cast<int>(i);
    proprio(r, 0) = obs[i].distance_m;
    proprio(r, 1) = obs[i].heading_rad;
    proprio(r, 2) = obs[i].prev_action.v_lin;
    proprio(r, 3) = obs[i].prev_action.v_ang;
    std::copy(obs[i].dense.begin(), obs[i].dense.end(), dense.row(r));
    std::copy(obs[i].sparse.begin(), obs[i].sparse.end(), sparse.row(r));
  }
}

std::string metrics_row(int iteration, long long env_steps, double mean_return,
                        double success_rate, double approx_kl, double lr) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%lld,%.10g,%.10g,%.10g,%.10g\n", iteration, env_steps,
                mean_return, success_rate, approx_kl, lr);
  return buf;
}

}  // namespace

void write_checkpoint_manifest(const std::string& json_path, const std::string& kind,
                               uint64_t arch_hash, const PatternConfig& pattern, int k_dense,
                               int k_sparse, int gru_hidden) {
  json j;
  j["kind"] = kind;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(arch_hash));
  j["arch_hash"] = hex;
  j["k_dense"] = k_dense;
  j["k_sparse"] = k_sparse;
  j["gru_hidden"] = gru_hidden;
  j["pattern"]["dense_halfwidth_m"] = pattern.dense_halfwidth_m;
  j["pattern"]["dense_pitch_m"] = pattern.dense_pitch_m;
  j["pattern"]["sparse_pitch_m"] = pattern.sparse_pitch_m;
  j["pattern"]["sparse_min_m"] = pattern.sparse_min_m;
  j["pattern"]["sparse_max_m"] = pattern.sparse_max_m;
  std::ofstream f(json_path);
  if (!f) throw std::runtime_error("cannot write checkpoint manifest: " + json_path);
  f << j.dump(2) << "\n";
}

CheckpointInfo read_checkpoint_manifest(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("missing checkpoint manifest: " + json_path);
  json j = json::parse(f);
  CheckpointInfo info;
  info.kind = j.at("kind").get<std::string>();
  info.arch_hash = std::stoull(j.at("arch_hash").get<std::string>(), nullptr, 16);
  info.k_dense = j.at("k_dense").get<int>();
  info.k_sparse = j.at("k_sparse").get<int>();
  info.gru_hidden = j.value("gru_hidden", 0);
  info.pattern.dense_halfwidth_m = j.at("pattern").at("dense_halfwidth_m").get<double>();
  info.pattern.dense_pitch_m = j.at("pattern").at("dense_pitch_m").get<double>();
  info.pattern.sparse_pitch_m = j.at("pattern").at("sparse_pitch_m").get<double>();
  info.pattern.sparse_min_m = j.at("pattern").at("sparse_min_m").get<double>();
  info.pattern.sparse_max_m = j.at("pattern").at("sparse_max_m").get<double>();
  return info;
}

TeacherTrainResult train_teacher(const TeacherTrainConfig& cfg) {
  cfg.ppo.validate();
  std::filesystem::create_directories(cfg.out_dir);

  const TerrainMap map = generate_terrain(cfg.terrain);
  const SamplePattern pattern = build_pattern(cfg.pattern);
  VecEnv env(map, pattern, cfg.sim, RoverGeometry::six_wheel(), cfg.rewards, cfg.n_envs,
             derive_seed(cfg.seed, "vecenv"));

  TeacherNet net(pattern.k_dense(), pattern.k_sparse());
  net.init_params(cfg.seed);

  const std::string ckpt_path = cfg.out_dir + "/teacher.bin";
  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  auto save_ckpt = [&](const std::string& path) {
    net.params().save(path);
    write_checkpoint_manifest(path + ".json", "teacher", net.params().arch_hash(), cfg.pattern,
                              net.k_dense(), net.k_sparse());
  };

  std::ofstream metrics(metrics_path);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);
  metrics << "iteration,env_steps,mean_return,success_rate,approx_kl,lr\n";

  const int n = cfg.n_envs;
  const int horizon = cfg.ppo.horizon;
  const long long steps_per_iter = static_cast<long long>(n) * horizon;
  const long long iterations = cfg.total_env_steps / std::max<long long>(1, steps_per_iter);

  TeacherTrainResult result;
  result.checkpoint_path = ckpt_path;
  result.metrics_path = metrics_path;
  if (iterations == 0) {
    save_ckpt(ckpt_path);
    return result;
  }

  std::vector<Rng> action_rngs;
  std::vector<Rng> noise_rngs;
  std::vector<EpisodeNoise> episode_noise(n);
  const bool noisy = cfg.domain_rand != NoisePreset::none;
  const NoiseTable noise_table = cfg.domain_rand == NoisePreset::eval_noise
                                     ? NoiseTable::eval_noise()
                                     : NoiseTable::train_mix();
  for (int e = 0; e < n; ++e) {
    action_rngs.emplace_back(derive_seed(cfg.seed, "action", static_cast<uint64_t>(e)));
    noise_rngs.emplace_back(derive_seed(cfg.seed, "obsnoise", static_cast<uint64_t>(e)));
  }
  if (noisy)
    for (int e = 0; e < n; ++e) episode_noise[e] = begin_episode_noise(noise_table, noise_rngs[e]);

  Rng shuffle_rng(derive_seed(cfg.seed, "ppo_shuffle"));
  RolloutBuffer buffer(horizon, n, net.k_dense(), net.k_sparse());
  RollingStats rolling(static_cast<size_t>(cfg.stats_window));
  double lr = cfg.ppo.lr;
  PpoStats stats;

  auto corrupt = [&](std::vector<Observation>& obs) {
    if (!noisy) return;
    for (int e = 0; e < n; ++e) {
      obs[e].dense = apply_noise(obs[e].dense, noise_table, episode_noise[e], noise_rngs[e]);
      obs[e].sparse = apply_noise(obs[e].sparse, noise_table, episode_noise[e], noise_rngs[e]);
    }
  };

  std::vector<Observation> current = env.observe_all();
  corrupt(current);

  try {
    for (long long iter = 0; iter < iterations; ++iter) {
      buffer.filled = 0;
      for (int t = 0; t < horizon; ++t) {
        Tensor2<float> proprio(n, TeacherNet::kProprioDim);
        Tensor2<float> dense(n, net.k_dense());
        Tensor2<float> sparse(n, net.k_sparse());
        pack_observations(current, proprio, dense, sparse);

        TeacherNet::Cache cache;
        Tensor2<float> mean, value;
        net.forward(proprio, dense, sparse, mean, value, cache);

        Tensor2<float> acts(n, TeacherNet::kActionDim);
        for (int e = 0; e < n; ++e) net.head().sample_row(mean, e, action_rngs[e], acts.row(e));
        std::vector<double> logp, ent;
        net.head().logp_entropy(mean, acts, logp, ent);

        std::vector<Action> actions(n);
        for (int e = 0; e < n; ++e) actions[e] = Action{acts(e, 0), acts(e, 1)};
        auto results = env.step(actions);

        for (int e = 0; e < n; ++e) {
          const int i = buffer.index(t, e);
          std::copy(proprio.row(e), proprio.row(e) + proprio.cols, buffer.proprio.row(i));
          std::copy(dense.row(e), dense.row(e) + dense.cols, buffer.dense.row(i));
          std::copy(sparse.row(e), sparse.row(e) + sparse.cols, buffer.sparse.row(i));
          std::copy(acts.row(e), acts.row(e) + acts.cols, buffer.actions.row(i));
          buffer.logp[i] = logp[e];
          buffer.value[i] = value(e, 0);
          buffer.reward[i] = results[e].reward;
          buffer.done[i] = results[e].terminated ? 1 : 0;
        }
        buffer.filled = t + 1;

        if (noisy)
          for (int e : env.just_reset())
            episode_noise[e] = begin_episode_noise(noise_table, noise_rngs[e]);

        current.resize(n);
        for (int e = 0; e < n; ++e) current[e] = std::move(results[e].observation);
        corrupt(current);
      }

      {
        Tensor2<float> proprio(n, TeacherNet::kProprioDim);
        Tensor2<float> dense(n, net.k_dense());
        Tensor2<float> sparse(n, net.k_sparse());
        pack_observations(current, proprio, dense, sparse);
        TeacherNet::Cache cache;
        Tensor2<float> mean, value;
        net.forward(proprio, dense, sparse, mean, value, cache);
        for (int e = 0; e < n; ++e) buffer.bootstrap_value[e] = value(e, 0);
      }

      compute_gae(buffer, cfg.ppo.gamma, cfg.ppo.lam);
      stats = ppo_update(net, buffer, cfg.ppo, lr, shuffle_rng);

      for (const EpisodeStats& ep : env.drain_episodes())
        rolling.push(ep.episode_return, ep.cause == Termination::goal_reached);

      result.iterations = static_cast<int>(iter + 1);
      result.env_steps += steps_per_iter;
      result.rolling_return = rolling.mean_return();
      result.rolling_success = rolling.success_rate();
      metrics << metrics_row(static_cast<int>(iter), result.env_steps, rolling.mean_return(),
                             rolling.success_rate(), stats.approx_kl, lr);

      if (cfg.checkpoint_every_iters > 0 && (iter + 1) % cfg.checkpoint_every_iters == 0)
        save_ckpt(cfg.out_dir + "/teacher_iter" + std::to_string(iter + 1) + ".bin");

      if (cfg.stop_at_success > 0 && rolling.window.size() >= rolling.cap &&
          rolling.success_rate() >= cfg.stop_at_success)
        break;
    }
  } catch (...) {
    metrics.flush();
    save_ckpt(cfg.out_dir + "/teacher_emergency.bin");
    throw;
  }

  metrics.close();
  save_ckpt(ckpt_path);
  return result;
}

}  // namespace rover

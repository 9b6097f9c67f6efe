#include "rover/student.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "rover/teacher.hpp"

namespace rover {

namespace {

/// Applies one per-sequence noise draw to every timestep of a batch column.
/// Each sequence in the batch gets its own mode and offset; per-point jitter
/// and zeroing are re-drawn every step.
void corrupt_batch(SequenceBatch& batch, const NoiseTable& table, std::vector<Rng>& rngs) {
  const int m = batch.batch_size;
  for (int r = 0; r < m; ++r) {
    const EpisodeNoise ep = begin_episode_noise(table, rngs[r]);
    for (int t = 0; t < batch.seq_len; ++t) {
      {
        std::span<const float> row(batch.dense[t].row(r), batch.dense[t].cols);
        const std::vector<float> noisy = apply_noise(row, table, ep, rngs[r]);
        std::copy(noisy.begin(), noisy.end(), batch.dense[t].row(r));
      }
      {
        std::span<const float> row(batch.sparse[t].row(r), batch.sparse[t].cols);
        const std::vector<float> noisy = apply_noise(row, table, ep, rngs[r]);
        std::copy(noisy.begin(), noisy.end(), batch.sparse[t].row(r));
      }
    }
  }
}

/// Unrolls the net over a batch, returning the mean squared action error and
/// (optionally) accumulating gradients via full BPTT.
double run_batch(StudentNet& net, const SequenceBatch& batch, bool backward) {
  const int L = batch.seq_len, m = batch.batch_size;
  auto hidden = net.zero_hidden(m);
  std::vector<StudentNet::StepCache> caches(backward ? L : 1);
  std::vector<Tensor2<float>> outputs(L);
  double se = 0;
  for (int t = 0; t < L; ++t) {
    StudentNet::StepCache& c = caches[backward ? t : 0];
    outputs[t] = net.step_forward(batch.proprio[t], batch.dense[t], batch.sparse[t], hidden, c);
    for (int r = 0; r < m; ++r)
      for (int j = 0; j < 2; ++j) {
        const double err = double(outputs[t](r, j)) - batch.action[t](r, j);
        se += err * err;
      }
  }
  const double denom = double(L) * m * 2;
  if (backward) {
    Tensor2<float> dh1(m, net.gru_hidden()), dh2(m, net.gru_hidden());
    for (int t = L - 1; t >= 0; --t) {
      Tensor2<float> dact(m, 2);
      for (int r = 0; r < m; ++r)
        for (int j = 0; j < 2; ++j)
          dact(r, j) =
              float(2.0 * (double(outputs[t](r, j)) - batch.action[t](r, j)) / denom);
      net.step_backward(caches[t], dact, dh1, dh2);
    }
  }
  return se / denom;
}

}  // namespace

double student_validation_mse(StudentNet& net, SequenceSampler& sampler) {
  sampler.begin_epoch(true);
  SequenceBatch batch;
  double se = 0;
  long long count = 0;
  while (sampler.next(batch, true)) {
    se += run_batch(net, batch, false) * double(batch.seq_len) * batch.batch_size * 2;
    count += static_cast<long long>(batch.seq_len) * batch.batch_size * 2;
  }
  return count > 0 ? se / double(count) : std::nan("");
}

StudentTrainResult train_student(const StudentTrainConfig& cfg) {
  if (cfg.shard_paths.empty()) throw std::invalid_argument("train_student: empty dataset");
  std::filesystem::create_directories(cfg.out_dir);

  SequenceSampler sampler(cfg.shard_paths, cfg.seq_len, cfg.batch_size, cfg.seed);
  sampler.split(cfg.validation_fraction, cfg.seed);

  StudentNet net(sampler.k_dense(), sampler.k_sparse(), cfg.gru_hidden);
  net.init_params(cfg.seed);

  const NoiseTable table = cfg.noise == NoisePreset::eval_noise ? NoiseTable::eval_noise()
                                                                : NoiseTable::train_mix();
  const bool noisy = cfg.noise != NoisePreset::none;
  std::vector<Rng> noise_rngs;
  for (int r = 0; r < cfg.batch_size; ++r)
    noise_rngs.emplace_back(derive_seed(cfg.seed, "student_noise", static_cast<uint64_t>(r)));

  const std::string ckpt_path = cfg.out_dir + "/student.bin";
  const std::string loss_path = cfg.out_dir + "/loss.csv";
  std::ofstream loss_csv(loss_path);
  if (!loss_csv) throw std::runtime_error("cannot write " + loss_path);
  loss_csv << "epoch,train_mse,val_mse\n";

  {
    const SamplePattern check = build_pattern(cfg.pattern);
    if (check.k_dense() != sampler.k_dense() || check.k_sparse() != sampler.k_sparse())
      throw std::invalid_argument("pattern config does not match the dataset heightmap dims");
  }
  // architecture manifest next to the weights so eval can rebuild the net
  auto save_ckpt = [&](const std::string& path) {
    net.params().save(path);
    write_checkpoint_manifest(path + ".json", "student", net.params().arch_hash(), cfg.pattern,
                              net.k_dense(), net.k_sparse(), net.gru_hidden());
  };

  StudentTrainResult result;
  result.checkpoint_path = ckpt_path;
  result.loss_path = loss_path;
  result.best_val_mse = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sampler.begin_epoch(false);
    SequenceBatch batch;
    double train_se = 0;
    long long samples = 0;
    while (sampler.next(batch, false)) {
      if (noisy) corrupt_batch(batch, table, noise_rngs);
      net.params().zero_grads();
      const double mse = run_batch(net, batch, true);
      if (!std::isfinite(mse))
        throw std::runtime_error("student loss diverged at epoch " + std::to_string(epoch));
      net.params().adam_step(cfg.lr);
      train_se += mse * double(batch.seq_len) * batch.batch_size * 2;
      samples += static_cast<long long>(batch.seq_len) * batch.batch_size * 2;
    }
    const double train_mse = train_se / double(samples);
    const double val_mse = student_validation_mse(net, sampler);

    char row[128];
    std::snprintf(row, sizeof row, "%d,%.10g,%.10g\n", epoch, train_mse, val_mse);
    loss_csv << row;
    result.epochs_run = epoch + 1;
    result.final_train_mse = train_mse;

    const double score = std::isnan(val_mse) ? train_mse : val_mse;
    if (score < result.best_val_mse - 1e-12) {
      result.best_val_mse = score;
      since_best = 0;
      save_ckpt(ckpt_path);
    } else if (++since_best >= cfg.patience) {
      break;  // converged: validation loss plateaued
    }
  }
  if (!std::filesystem::exists(ckpt_path)) save_ckpt(ckpt_path);
  return result;
}

}  // namespace rover

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rover/teacher.hpp"
#include "rover/tensor.hpp"

namespace rover {

/// Shard layout: 32-byte header, then fixed-stride records in step-major
/// order (all envs at t=0, then t=1, ...). All floats little-endian f32.
/// Record: proprio[4], dense[k_dense], sparse[k_sparse], action[2], done u8.
struct ShardHeader {
  static constexpr char kMagic[5] = "RTSD";
  uint32_t version = 1;
  uint32_t env_count = 0;
  uint32_t steps_per_env = 0;
  uint32_t k_dense = 0;
  uint32_t k_sparse = 0;
  uint32_t proprio_dim = 4;
  uint32_t action_dim = 2;

  size_t record_floats() const { return proprio_dim + k_dense + k_sparse + action_dim; }
  size_t record_stride() const { return record_floats() * 4 + 1; }
};

struct StepRecord {
  std::vector<float> proprio;  // distance, heading, prev_action[2]
  std::vector<float> dense;
  std::vector<float> sparse;
  std::vector<float> action;
  uint8_t done = 0;
};

/// Streaming writer for one shard. `byte_budget` fails writes past the given
/// size (0 = unlimited); on any failure the partial shard file is deleted.
class ShardWriter {
 public:
  ShardWriter(const std::string& path, const ShardHeader& header, size_t byte_budget = 0);
  ~ShardWriter();
  void append(const StepRecord& rec);
  void finish();  // flush + validate record count

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ShardReader {
 public:
  explicit ShardReader(const std::string& path);
  ~ShardReader();
  const ShardHeader& header() const;
  /// Record for (env, t); step-major on disk, random access by stride.
  StepRecord read(int env, int t) const;
  void read_into(int env, int t, StepRecord& rec) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct CollectConfig {
  std::string teacher_checkpoint;
  TerrainParams terrain;
  SimConfig sim;
  RewardWeights rewards;
  int env_count = 512;
  int steps = 1500;
  int envs_per_shard = 64;
  uint64_t seed = 1;
  bool stochastic = false;  // default logs the distribution mean
  std::string out_dir;
};

struct CollectResult {
  std::vector<std::string> shard_paths;
  long long records = 0;
};

/// Runs the trained policy in inference mode over fresh environments and logs
/// noiseless observations plus the inferred actions. The episode-terminal
/// step carries done=1; the next record starts a new episode.
CollectResult collect(const CollectConfig& cfg);

/// One training batch of contiguous per-env sequences, timestep-major:
/// tensor t has batch_size rows.
struct SequenceBatch {
  std::vector<Tensor2<float>> proprio, dense, sparse, action;
  int seq_len = 0;
  int batch_size = 0;
};

/// Streams fixed-length sequences that never cross episode boundaries
/// (done=1 may appear only at a sequence's final element). Each epoch covers
/// every valid start exactly once in a seed-shuffled order.
class SequenceSampler {
 public:
  SequenceSampler(std::vector<std::string> shard_paths, int seq_len, int batch_size,
                  uint64_t seed);
  ~SequenceSampler();

  int k_dense() const;
  int k_sparse() const;
  size_t sequences_per_epoch() const;

  /// Deterministic split of the valid starts; `holdout` selects the
  /// complementary fraction used for validation.
  void split(double validation_fraction, uint64_t split_seed);

  void begin_epoch(bool validation = false);
  /// False when the epoch (train or validation set) is exhausted.
  bool next(SequenceBatch& batch, bool validation = false);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rover

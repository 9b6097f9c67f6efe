#pragma once

#include <string>

#include "rover/obs.hpp"
#include "rover/reward.hpp"
#include "rover/simkin.hpp"
#include "rover/teacher.hpp"
#include "rover/terrain.hpp"

namespace rover {

struct CollectSection {
  int env_count = 512;
  int steps = 1500;
  int envs_per_shard = 64;
  bool stochastic = false;
};

struct StudentSection {
  int seq_len = 30;
  int batch_size = 64;
  double lr = 3e-4;
  int epochs = 20;
  double validation_fraction = 0.1;
  int patience = 5;
  int gru_hidden = 256;
};

struct RunSection {
  uint64_t seed = 1;
  int n_envs = 64;
  long long total_env_steps = 2000000;
  int checkpoint_every_iters = 200;
  int stats_window = 100;
  double stop_at_success = -1.0;
};

struct EvalSection {
  int episodes = 512;
  int dump_action_episodes = 8;
  int spawn_slot_count = 64;
};

/// Whole-experiment configuration. Defaults reproduce the documented
/// training setup; every field can be overridden from one key/value config
/// file with [section] headers. Unknown sections or keys are rejected.
struct ExperimentConfig {
  TerrainParams terrain;
  PatternConfig pattern;
  RewardWeights reward;
  PpoConfig ppo;
  SimConfig sim;
  RunSection run;
  CollectSection collect;
  StudentSection student;
  EvalSection eval;

  static ExperimentConfig load(const std::string& path);
  /// Applies `text` over the current values (used for CLI overrides too).
  void apply(const std::string& text, const std::string& origin);
  /// Canonical snapshot: every key in a fixed order, reload-identical.
  std::string snapshot() const;
  void save(const std::string& path) const;
  void validate() const;
};

}  // namespace rover

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rover/rng.hpp"

namespace rover {

enum class NoiseMode { low, low_offset, high };

struct NoiseModeSpec {
  double point_std_m = 0;
  double offset_std_m = 0;
  double zero_fraction = 0;
  double probability = 0;
};

/// Three-mode heightmap corruption table. Mode and per-episode offset are
/// drawn once per episode; per-point jitter and zeroing are re-drawn every
/// step. Proprioceptive inputs are never touched by this module.
struct NoiseTable {
  std::array<NoiseModeSpec, 3> modes;  // indexed by NoiseMode

  void validate() const;
  static NoiseTable train_mix();
  /// Fixed evaluation corruption: sigma = 0.1 m, 10% zeroed, no offset,
  /// no mode mixture.
  static NoiseTable eval_noise();
};

const NoiseModeSpec& mode_spec(const NoiseTable& table, NoiseMode mode);

/// Categorical draw over the table's mode probabilities.
NoiseMode sample_mode(const NoiseTable& table, Rng& rng);

/// Noise state held for one episode.
struct EpisodeNoise {
  NoiseMode mode = NoiseMode::low;
  double offset_m = 0;
};

EpisodeNoise begin_episode_noise(const NoiseTable& table, Rng& rng);

/// Pure transformation: clean heightmap -> noisy copy. Adds i.i.d. Gaussian
/// jitter with the mode's sigma plus the episode offset, then zeroes exactly
/// floor(zero_fraction * K) distinct points.
std::vector<float> apply_noise(std::span<const float> clean, const NoiseModeSpec& spec,
                               double episode_offset_m, Rng& rng);

inline std::vector<float> apply_noise(std::span<const float> clean, const NoiseTable& table,
                                      const EpisodeNoise& ep, Rng& rng) {
  return apply_noise(clean, mode_spec(table, ep.mode), ep.offset_m, rng);
}

/// Named presets for config files: "none", "train-mix", "eval-noise".
enum class NoisePreset { none, train_mix, eval_noise };
NoisePreset noise_preset_from_string(const std::string& name);
std::string to_string(NoisePreset preset);

}  // namespace rover

#include "rover/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace rover {

void NoiseTable::validate() const {
  double total = 0;
  for (const auto& m : modes) {
    if (m.probability < 0 || m.zero_fraction < 0 || m.zero_fraction > 1 || m.point_std_m < 0 ||
        m.offset_std_m < 0)
      throw std::invalid_argument("invalid noise mode spec");
    total += m.probability;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("noise mode probabilities must sum to 1");
}

NoiseTable NoiseTable::train_mix() {
  NoiseTable t;
  t.modes[static_cast<int>(NoiseMode::low)] = {0.1, 0.0, 0.10, 0.6};
  t.modes[static_cast<int>(NoiseMode::low_offset)] = {0.1, 0.05, 0.10, 0.3};
  t.modes[static_cast<int>(NoiseMode::high)] = {0.2, 0.0, 0.10, 0.1};
  return t;
}

NoiseTable NoiseTable::eval_noise() {
  NoiseTable t;
  t.modes[static_cast<int>(NoiseMode::low)] = {0.1, 0.0, 0.10, 1.0};
  t.modes[static_cast<int>(NoiseMode::low_offset)] = {0.0, 0.0, 0.0, 0.0};
  t.modes[static_cast<int>(NoiseMode::high)] = {0.0, 0.0, 0.0, 0.0};
  return t;
}

const NoiseModeSpec& mode_spec(const NoiseTable& table, NoiseMode mode) {
  return table.modes[static_cast<int>(mode)];
}

NoiseMode sample_mode(const NoiseTable& table, Rng& rng) {
  table.validate();
  const double u = rng.uniform();
  double acc = 0;
  for (int i = 0; i < 3; ++i) {
    acc += table.modes[i].probability;
    if (u < acc) return static_cast<NoiseMode>(i);
  }
  return NoiseMode::high;
}

EpisodeNoise begin_episode_noise(const NoiseTable& table, Rng& rng) {
  EpisodeNoise ep;
  ep.mode = sample_mode(table, rng);
  const auto& spec = mode_spec(table, ep.mode);
  ep.offset_m = spec.offset_std_m > 0 ? rng.normal(0.0, spec.offset_std_m) : 0.0;
  return ep;
}

std::vector<float> apply_noise(std::span<const float> clean, const NoiseModeSpec& spec,
                               double episode_offset_m, Rng& rng) {
  std::vector<float> out(clean.begin(), clean.end());
  const int k = static_cast<int>(out.size());
  if (spec.point_std_m > 0 || episode_offset_m != 0.0) {
    for (int i = 0; i < k; ++i) {
      const double jitter = spec.point_std_m > 0 ? rng.normal(0.0, spec.point_std_m) : 0.0;
      out[i] = static_cast<float>(out[i] + jitter + episode_offset_m);
    }
  }
  const int zeros = static_cast<int>(std::floor(spec.zero_fraction * k));
  if (zeros > 0) {
    // partial Fisher-Yates: first `zeros` entries are a uniform sample
    // without replacement
    static thread_local std::vector<int> idx;
    idx.resize(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    for (int i = 0; i < zeros; ++i) {
      const int j = i + rng.uniform_int(k - i);
      std::swap(idx[i], idx[j]);
      out[idx[i]] = 0.0f;
    }
  }
  return out;
}

NoisePreset noise_preset_from_string(const std::string& name) {
  if (name == "none") return NoisePreset::none;
  if (name == "train-mix") return NoisePreset::train_mix;
  if (name == "eval-noise") return NoisePreset::eval_noise;
  throw std::invalid_argument("unknown noise preset: " + name +
                              " (expected none|train-mix|eval-noise)");
}

std::string to_string(NoisePreset preset) {
  switch (preset) {
    case NoisePreset::none: return "none";
    case NoisePreset::train_mix: return "train-mix";
    default: return "eval-noise";
  }
}

}  // namespace rover

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rover/rng.hpp"

namespace rover {

struct TerrainParams {
  uint64_t seed = 1;
  double extent_m = 60.0;
  double cell_m = 0.05;
  double hill_amplitude_m = 1.0;
  double hill_wavelength_m = 18.0;
  double bump_amplitude_m = 0.06;
  double bump_wavelength_m = 1.5;
  double rock_density_per_m2 = 0.04;
  double small_rock_fraction = 0.0;
  double climb_height_threshold_m = 0.2;

  void validate() const;
  int cells_per_side() const;

  /// Large, non-climbable rocks only.
  static TerrainParams preset_t1(uint64_t seed);
  /// Mixed rock sizes, half climbable.
  static TerrainParams preset_t2(uint64_t seed);
};

struct Rock {
  double cx = 0, cy = 0;
  double radius_m = 0;
  double height_m = 0;
  bool climbable = false;
};

/// Smooth 2-D gradient noise in [-1, 1], deterministic per seed.
class GradientNoise {
 public:
  explicit GradientNoise(uint64_t seed);
  double sample(double x, double y) const;

 private:
  std::array<uint8_t, 512> perm_;
};

/// Uniform grid over rock indices for O(1) neighborhood queries.
class RockIndex {
 public:
  RockIndex() = default;
  RockIndex(double extent_m, const std::vector<Rock>& rocks);
  /// Candidate rock indices whose discs may intersect the query disc
  /// (superset; exact test is the caller's).
  void gather(double x, double y, double r, std::vector<int>& out) const;

 private:
  double cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
};

class TerrainMap {
 public:
  TerrainMap() = default;
  static TerrainMap from_data(const TerrainParams& params, std::vector<float> heights,
                              std::vector<Rock> rocks);

  const TerrainParams& params() const { return params_; }
  const std::vector<float>& heights() const { return heights_; }
  const std::vector<Rock>& rocks() const { return rocks_; }
  int nodes_per_side() const { return nodes_; }

  /// Ground elevation at grid node (ix, iy), no rocks.
  float node(int ix, int iy) const { return heights_[static_cast<size_t>(iy) * nodes_ + ix]; }

  bool in_extent(double x, double y) const;

  /// Bilinear terrain height plus the tallest rock covering (x, y).
  /// Throws std::out_of_range outside the extent.
  double height_at(double x, double y) const;

  /// Exactly the rocks whose discs intersect the query disc.
  std::vector<Rock> rocks_near(double x, double y, double radius_m) const;
  /// Index variant used by the collision path.
  void rocks_near_idx(double x, double y, double radius_m, std::vector<int>& out) const;
  const Rock& rock(int i) const { return rocks_[i]; }

  /// Writes DIR/heights.f32 (row-major little-endian f32) and
  /// DIR/terrain.json (params + rock list).
  void save(const std::string& dir) const;
  static TerrainMap load(const std::string& dir);

 private:
  TerrainParams params_;
  int nodes_ = 0;
  std::vector<float> heights_;
  std::vector<Rock> rocks_;
  RockIndex index_;
};

/// Deterministic procedural map: two octaves of gradient noise (hills +
/// bumps) and blue-noise rock placement.
TerrainMap generate_terrain(const TerrainParams& params, bool parallel = true);

/// Blue-noise (Poisson-disc) point set with the given minimum spacing,
/// exposed for the placement-count tests.
std::vector<std::array<double, 2>> poisson_disc(double lo, double hi, double spacing, Rng& rng);

}  // namespace rover

#include "rover/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rover {

using json = nlohmann::ordered_json;

namespace {
constexpr double kRockRadiusMin = 0.1;
constexpr double kRockRadiusMax = 0.5;
constexpr double kRockHeightMin = 0.05;
constexpr double kRockHeightMax = 0.5;

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0)
    throw std::invalid_argument(std::string(name) + " must be finite and positive");
}
}  // namespace

void TerrainParams::validate() const {
  require_positive(extent_m, "extent_m");
  require_positive(cell_m, "cell_m");
  require_positive(hill_wavelength_m, "hill_wavelength_m");
  require_positive(bump_wavelength_m, "bump_wavelength_m");
  require_positive(climb_height_threshold_m, "climb_height_threshold_m");
  if (!std::isfinite(hill_amplitude_m) || hill_amplitude_m < 0.0)
    throw std::invalid_argument("hill_amplitude_m must be finite and >= 0");
  if (!std::isfinite(bump_amplitude_m) || bump_amplitude_m < 0.0)
    throw std::invalid_argument("bump_amplitude_m must be finite and >= 0");
  if (!std::isfinite(rock_density_per_m2) || rock_density_per_m2 < 0.0)
    throw std::invalid_argument("rock_density_per_m2 must be finite and >= 0");
  if (small_rock_fraction < 0.0 || small_rock_fraction > 1.0)
    throw std::invalid_argument("small_rock_fraction must be in [0, 1]");
  if (hill_wavelength_m <= bump_wavelength_m)
    throw std::invalid_argument("hill_wavelength_m must exceed bump_wavelength_m");
  const double ratio = extent_m / cell_m;
  if (std::fabs(ratio - std::llround(ratio)) > 1e-9 || std::llround(ratio) < 2)
    throw std::invalid_argument("extent_m / cell_m must be an integer >= 2");
}

int TerrainParams::cells_per_side() const {
  return static_cast<int>(std::llround(extent_m / cell_m));
}

TerrainParams TerrainParams::preset_t1(uint64_t seed) {
  TerrainParams p;
  p.seed = seed;
  p.small_rock_fraction = 0.0;
  return p;
}

TerrainParams TerrainParams::preset_t2(uint64_t seed) {
  TerrainParams p;
  p.seed = seed;
  p.small_rock_fraction = 0.5;
  return p;
}

// ---------------------------------------------------------------------------
// Gradient noise
// ---------------------------------------------------------------------------

GradientNoise::GradientNoise(uint64_t seed) {
  std::array<uint8_t, 256> base;
  for (int i = 0; i < 256; ++i) base[i] = static_cast<uint8_t>(i);
  Rng rng(derive_seed(seed, "gradient_noise"));
  for (int i = 255; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(base[i], base[j]);
  }
  for (int i = 0; i < 512; ++i) perm_[i] = base[i & 255];
}

namespace {
inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double grad_dot(int h, double dx, double dy) {
  switch (h & 7) {
    case 0: return dx;
    case 1: return -dx;
    case 2: return dy;
    case 3: return -dy;
    case 4: return 0.70710678118654752440 * (dx + dy);
    case 5: return 0.70710678118654752440 * (dx - dy);
    case 6: return 0.70710678118654752440 * (-dx + dy);
    default: return 0.70710678118654752440 * (-dx - dy);
  }
}
}  // namespace

double GradientNoise::sample(double x, double y) const {
  const double fx = std::floor(x), fy = std::floor(y);
  const int xi = static_cast<int>(fx) & 255;
  const int yi = static_cast<int>(fy) & 255;
  const double dx = x - fx, dy = y - fy;
  const double u = fade(dx), v = fade(dy);
  const int aa = perm_[perm_[xi] + yi];
  const int ab = perm_[perm_[xi] + yi + 1];
  const int ba = perm_[perm_[xi + 1] + yi];
  const int bb = perm_[perm_[xi + 1] + yi + 1];
  const double n00 = grad_dot(aa, dx, dy);
  const double n10 = grad_dot(ba, dx - 1.0, dy);
  const double n01 = grad_dot(ab, dx, dy - 1.0);
  const double n11 = grad_dot(bb, dx - 1.0, dy - 1.0);
  const double nx0 = n00 + u * (n10 - n00);
  const double nx1 = n01 + u * (n11 - n01);
  // scale so the theoretical bound maps to [-1, 1]
  return 1.41421356237309504880 * (nx0 + v * (nx1 - nx0));
}

// ---------------------------------------------------------------------------
// Rock placement
// ---------------------------------------------------------------------------

std::vector<std::array<double, 2>> poisson_disc(double lo, double hi, double spacing, Rng& rng) {
  // Bridson's algorithm; saturates the domain, caller thins to target count.
  const double span = hi - lo;
  if (span <= 0.0) return {};
  const double cell = spacing / 1.41421356237309504880;
  const int n = std::max(1, static_cast<int>(std::ceil(span / cell)));
  std::vector<int> grid(static_cast<size_t>(n) * n, -1);
  std::vector<std::array<double, 2>> points;
  std::vector<int> active;

  auto grid_at = [&](double x, double y) {
    int gx = std::min(n - 1, static_cast<int>((x - lo) / cell));
    int gy = std::min(n - 1, static_cast<int>((y - lo) / cell));
    return std::pair<int, int>(gx, gy);
  };
  auto ok = [&](double x, double y) {
    if (x < lo || x > hi || y < lo || y > hi) return false;
    auto [gx, gy] = grid_at(x, y);
    for (int iy = std::max(0, gy - 2); iy <= std::min(n - 1, gy + 2); ++iy)
      for (int ix = std::max(0, gx - 2); ix <= std::min(n - 1, gx + 2); ++ix) {
        const int id = grid[static_cast<size_t>(iy) * n + ix];
        if (id < 0) continue;
        const double ddx = points[id][0] - x, ddy = points[id][1] - y;
        if (ddx * ddx + ddy * ddy < spacing * spacing) return false;
      }
    return true;
  };
  auto push = [&](double x, double y) {
    auto [gx, gy] = grid_at(x, y);
    points.push_back({x, y});
    grid[static_cast<size_t>(gy) * n + gx] = static_cast<int>(points.size()) - 1;
    active.push_back(static_cast<int>(points.size()) - 1);
  };

  push(rng.uniform(lo, hi), rng.uniform(lo, hi));
  while (!active.empty()) {
    const int slot = rng.uniform_int(static_cast<int>(active.size()));
    const auto base = points[active[slot]];
    bool found = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      const double ang = rng.uniform(0.0, 6.283185307179586476925286766559);
      const double rad = spacing * (1.0 + rng.uniform());
      const double x = base[0] + rad * std::cos(ang);
      const double y = base[1] + rad * std::sin(ang);
      if (ok(x, y)) {
        push(x, y);
        found = true;
        break;
      }
    }
    if (!found) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// RockIndex
// ---------------------------------------------------------------------------

RockIndex::RockIndex(double extent_m, const std::vector<Rock>& rocks) {
  nx_ = ny_ = std::max(1, static_cast<int>(std::ceil(extent_m / cell_)));
  cells_.assign(static_cast<size_t>(nx_) * ny_, {});
  for (size_t i = 0; i < rocks.size(); ++i) {
    const Rock& r = rocks[i];
    const int x0 = std::clamp(static_cast<int>((r.cx - r.radius_m) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((r.cx + r.radius_m) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((r.cy - r.radius_m) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((r.cy + r.radius_m) / cell_), 0, ny_ - 1);
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix)
        cells_[static_cast<size_t>(iy) * nx_ + ix].push_back(static_cast<int>(i));
  }
}

void RockIndex::gather(double x, double y, double r, std::vector<int>& out) const {
  out.clear();
  if (cells_.empty()) return;
  const int x0 = std::clamp(static_cast<int>((x - r) / cell_), 0, nx_ - 1);
  const int x1 = std::clamp(static_cast<int>((x + r) / cell_), 0, nx_ - 1);
  const int y0 = std::clamp(static_cast<int>((y - r) / cell_), 0, ny_ - 1);
  const int y1 = std::clamp(static_cast<int>((y + r) / cell_), 0, ny_ - 1);
  for (int iy = y0; iy <= y1; ++iy)
    for (int ix = x0; ix <= x1; ++ix)
      for (int id : cells_[static_cast<size_t>(iy) * nx_ + ix]) out.push_back(id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// ---------------------------------------------------------------------------
// TerrainMap
// ---------------------------------------------------------------------------

TerrainMap TerrainMap::from_data(const TerrainParams& params, std::vector<float> heights,
                                 std::vector<Rock> rocks) {
  params.validate();
  TerrainMap m;
  m.params_ = params;
  m.nodes_ = params.cells_per_side() + 1;
  if (heights.size() != static_cast<size_t>(m.nodes_) * m.nodes_)
    throw std::invalid_argument("height grid size does not match extent/cell");
  for (float h : heights)
    if (!std::isfinite(h)) throw std::invalid_argument("non-finite height value");
  for (const Rock& r : rocks) {
    if (r.cx - r.radius_m < 0 || r.cx + r.radius_m > params.extent_m || r.cy - r.radius_m < 0 ||
        r.cy + r.radius_m > params.extent_m)
      throw std::invalid_argument("rock outside map extent");
    if (r.climbable != (r.height_m <= params.climb_height_threshold_m))
      throw std::invalid_argument("rock climbable flag inconsistent with height threshold");
  }
  m.heights_ = std::move(heights);
  m.rocks_ = std::move(rocks);
  m.index_ = RockIndex(params.extent_m, m.rocks_);
  return m;
}

bool TerrainMap::in_extent(double x, double y) const {
  return x >= 0.0 && y >= 0.0 && x <= params_.extent_m && y <= params_.extent_m;
}

double TerrainMap::height_at(double x, double y) const {
  if (!in_extent(x, y))
    throw std::out_of_range("height query outside map extent: (" + std::to_string(x) + ", " +
                            std::to_string(y) + ")");
  const int cells = nodes_ - 1;
  int ix = std::min(cells - 1, static_cast<int>(x / params_.cell_m));
  int iy = std::min(cells - 1, static_cast<int>(y / params_.cell_m));
  const double fx = x / params_.cell_m - ix;
  const double fy = y / params_.cell_m - iy;
  const double h00 = node(ix, iy), h10 = node(ix + 1, iy);
  const double h01 = node(ix, iy + 1), h11 = node(ix + 1, iy + 1);
  const double hx0 = h00 + fx * (h10 - h00);
  const double hx1 = h01 + fx * (h11 - h01);
  double h = hx0 + fy * (hx1 - hx0);

  if (!rocks_.empty()) {
    static thread_local std::vector<int> cand;
    index_.gather(x, y, 0.0, cand);
    double top = 0.0;
    for (int id : cand) {
      const Rock& r = rocks_[id];
      const double dx = x - r.cx, dy = y - r.cy;
      if (dx * dx + dy * dy <= r.radius_m * r.radius_m) top = std::max(top, r.height_m);
    }
    h += top;
  }
  return h;
}

std::vector<Rock> TerrainMap::rocks_near(double x, double y, double radius_m) const {
  if (!(radius_m > 0.0)) throw std::invalid_argument("rocks_near radius must be positive");
  std::vector<int> cand;
  index_.gather(x, y, radius_m, cand);
  std::vector<Rock> out;
  for (int id : cand) {
    const Rock& r = rocks_[id];
    const double dx = x - r.cx, dy = y - r.cy;
    const double rr = radius_m + r.radius_m;
    if (dx * dx + dy * dy <= rr * rr) out.push_back(r);
  }
  return out;
}

void TerrainMap::rocks_near_idx(double x, double y, double radius_m, std::vector<int>& out) const {
  static thread_local std::vector<int> cand;
  index_.gather(x, y, radius_m, cand);
  out.clear();
  for (int id : cand) {
    const Rock& r = rocks_[id];
    const double dx = x - r.cx, dy = y - r.cy;
    const double rr = radius_m + r.radius_m;
    if (dx * dx + dy * dy <= rr * rr) out.push_back(id);
  }
}

TerrainMap generate_terrain(const TerrainParams& params, bool parallel) {
  params.validate();
  const int nodes = params.cells_per_side() + 1;
  std::vector<float> heights(static_cast<size_t>(nodes) * nodes, 0.0f);

  const GradientNoise hills(derive_seed(params.seed, "hills"));
  const GradientNoise bumps(derive_seed(params.seed, "bumps"));
  const double cell = params.cell_m;
  const double ha = params.hill_amplitude_m, hw = params.hill_wavelength_m;
  const double ba = params.bump_amplitude_m, bw = params.bump_wavelength_m;
#pragma omp parallel for schedule(static) if (parallel)
  for (int iy = 0; iy < nodes; ++iy) {
    for (int ix = 0; ix < nodes; ++ix) {
      const double x = ix * cell, y = iy * cell;
      const double h = ha * hills.sample(x / hw, y / hw) + ba * bumps.sample(x / bw, y / bw);
      heights[static_cast<size_t>(iy) * nodes + ix] = static_cast<float>(h);
    }
  }

  std::vector<Rock> rocks;
  const long long target = std::llround(params.rock_density_per_m2 * params.extent_m *
                                        params.extent_m);
  if (target > 0) {
    Rng rng(derive_seed(params.seed, "rocks"));
    auto candidates = poisson_disc(kRockRadiusMax, params.extent_m - kRockRadiusMax,
                                   2.0 * kRockRadiusMax, rng);
    fisher_yates(candidates, rng);
    const size_t n = std::min<size_t>(candidates.size(), static_cast<size_t>(target));
    rocks.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      Rock r;
      r.cx = candidates[i][0];
      r.cy = candidates[i][1];
      r.radius_m = rng.uniform(kRockRadiusMin, kRockRadiusMax);
      r.climbable = rng.uniform() < params.small_rock_fraction;
      r.height_m = r.climbable
                       ? rng.uniform(kRockHeightMin, params.climb_height_threshold_m)
                       : rng.uniform(std::nextafter(params.climb_height_threshold_m, 1e9),
                                     kRockHeightMax);
      rocks.push_back(r);
    }
  }
  return TerrainMap::from_data(params, std::move(heights), std::move(rocks));
}

// ---------------------------------------------------------------------------
// save / load
// ---------------------------------------------------------------------------

namespace {
json params_to_json(const TerrainParams& p) {
  json j;
  j["seed"] = p.seed;
  j["extent_m"] = p.extent_m;
  j["cell_m"] = p.cell_m;
  j["hill_amplitude_m"] = p.hill_amplitude_m;
  j["hill_wavelength_m"] = p.hill_wavelength_m;
  j["bump_amplitude_m"] = p.bump_amplitude_m;
  j["bump_wavelength_m"] = p.bump_wavelength_m;
  j["rock_density_per_m2"] = p.rock_density_per_m2;
  j["small_rock_fraction"] = p.small_rock_fraction;
  j["climb_height_threshold_m"] = p.climb_height_threshold_m;
  return j;
}

TerrainParams params_from_json(const json& j) {
  TerrainParams p;
  p.seed = j.at("seed").get<uint64_t>();
  p.extent_m = j.at("extent_m").get<double>();
  p.cell_m = j.at("cell_m").get<double>();
  p.hill_amplitude_m = j.at("hill_amplitude_m").get<double>();
  p.hill_wavelength_m = j.at("hill_wavelength_m").get<double>();
  p.bump_amplitude_m = j.at("bump_amplitude_m").get<double>();
  p.bump_wavelength_m = j.at("bump_wavelength_m").get<double>();
  p.rock_density_per_m2 = j.at("rock_density_per_m2").get<double>();
  p.small_rock_fraction = j.at("small_rock_fraction").get<double>();
  p.climb_height_threshold_m = j.at("climb_height_threshold_m").get<double>();
  return p;
}
}  // namespace

void TerrainMap::save(const std::string& dir) const {
  {
    std::ofstream f(dir + "/heights.f32", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + dir + "/heights.f32");
    f.write(reinterpret_cast<const char*>(heights_.data()),
            static_cast<std::streamsize>(heights_.size() * sizeof(float)));
    if (!f) throw std::runtime_error("heightfield write failed");
  }
  json j;
  j["params"] = params_to_json(params_);
  json rocks = json::array();
  for (const Rock& r : rocks_) {
    json e;
    e["cx"] = r.cx;
    e["cy"] = r.cy;
    e["radius_m"] = r.radius_m;
    e["height_m"] = r.height_m;
    e["climbable"] = r.climbable;
    rocks.push_back(e);
  }
  j["rocks"] = rocks;
  std::ofstream f(dir + "/terrain.json");
  if (!f) throw std::runtime_error("cannot write " + dir + "/terrain.json");
  f << j.dump(2) << "\n";
}

TerrainMap TerrainMap::load(const std::string& dir) {
  std::ifstream jf(dir + "/terrain.json");
  if (!jf) throw std::runtime_error("cannot open " + dir + "/terrain.json");
  json j = json::parse(jf);
  const TerrainParams p = params_from_json(j.at("params"));
  std::vector<Rock> rocks;
  for (const auto& e : j.at("rocks")) {
    Rock r;
    r.cx = e.at("cx").get<double>();
    r.cy = e.at("cy").get<double>();
    r.radius_m = e.at("radius_m").get<double>();
    r.height_m = e.at("height_m").get<double>();
    r.climbable = e.at("climbable").get<bool>();
    rocks.push_back(r);
  }
  const int nodes = p.cells_per_side() + 1;
  std::vector<float> heights(static_cast<size_t>(nodes) * nodes);
  std::ifstream hf(dir + "/heights.f32", std::ios::binary);
  if (!hf) throw std::runtime_error("cannot open " + dir + "/heights.f32");
  hf.read(reinterpret_cast<char*>(heights.data()),
          static_cast<std::streamsize>(heights.size() * sizeof(float)));
  if (hf.gcount() != static_cast<std::streamsize>(heights.size() * sizeof(float)))
    throw std::runtime_error("heightfield size mismatch in " + dir);
  return from_data(p, std::move(heights), std::move(rocks));
}

}  // namespace rover

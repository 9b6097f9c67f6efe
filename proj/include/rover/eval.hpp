#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rover/noise.hpp"
#include "rover/simkin.hpp"

namespace rover {

/// One policy instance driving one episode at a time.
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual void begin_episode() = 0;
  virtual Action act(const Observation& obs) = 0;
};

/// Creates a policy instance; called once per evaluation worker.
using PolicyFactory = std::function<std::unique_ptr<EpisodePolicy>()>;

struct EvalConfig {
  std::string checkpoint;  // .bin with a .json manifest beside it
  TerrainParams terrain;
  SimConfig sim;
  RewardWeights rewards;
  std::optional<PatternConfig> pattern;  // default: from the checkpoint manifest
  NoisePreset noise = NoisePreset::none;
  int episodes = 512;
  uint64_t seed = 1;
  int dump_action_episodes = 8;  // episodes whose action traces are written
  int spawn_slot_count = 64;
  std::string agent_label = "agent";
  std::string terrain_label = "t1";
  std::string out_dir;  // empty: compute only, write nothing
  bool parallel = true;
};

struct EpisodeRow {
  int episode = 0;
  int steps = 0;
  double duration_s = 0;
  Termination cause = Termination::none;
  double final_distance_m = 0;
  double oscillation = 0;  // mean squared action delta per step
  double episode_return = 0;
};

struct EvalReport {
  std::string agent_label, terrain_label, noise_label;
  int episodes = 0;
  uint64_t seed = 0;
  double success_rate = 0;
  double mean_success_duration_s = 0;  // over successful episodes only
  double mean_oscillation = 0;
  std::vector<EpisodeRow> rows;
};

/// Runs independent episodes with per-episode RNG streams; parallel execution
/// matches sequential results. Observation noise (if any) corrupts only what
/// the policy sees, never the simulation state.
EvalReport run_eval_policy(const PolicyFactory& factory, const EvalConfig& cfg);

/// Loads the checkpoint (teacher: deterministic mean actions; student:
/// recurrent with hidden state reset per episode) and evaluates it.
EvalReport run_eval(const EvalConfig& cfg);

/// Mean squared per-step action delta; optionally writes the (t, v_lin,
/// v_ang) time series CSV.
double oscillation_trace(const std::vector<Action>& actions, const std::string& csv_path = "");

void write_report(const EvalReport& report, const std::string& out_dir);
EvalReport load_report(const std::string& json_path);

/// Table III-style grid: rows = agents, columns = terrain x noise, cells
/// "success% (duration s)". Missing cells render as an em dash.
std::string compare_report_markdown(const std::vector<EvalReport>& reports);
std::string compare_report_csv(const std::vector<EvalReport>& reports);

}  // namespace rover

#include "rover/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rover/student.hpp"
#include "rover/teacher.hpp"

namespace rover {

using json = nlohmann::ordered_json;

namespace {

const char* cause_name(Termination t) {
  switch (t) {
    case Termination::goal_reached: return "goal_reached";
    case Termination::collision: return "collision";
    case Termination::timeout: return "timeout";
    default: return "none";
  }
}

class TeacherPolicy final : public EpisodePolicy {
 public:
  TeacherPolicy(const TeacherNet& net) : net_(net) {}
  void begin_episode() override {}
  Action act(const Observation& obs) override {
    Tensor2<float> proprio(1, 4), dense(1, net_.k_dense()), sparse(1, net_.k_sparse());
    pack(obs, proprio, dense, sparse);
    TeacherNet::Cache cache;
    Tensor2<float> mean, value;
    net_.forward(proprio, dense, sparse, mean, value, cache);
    return Action{mean(0, 0), mean(0, 1)};
  }

  static void pack(const Observation& obs, Tensor2<float>& proprio, Tensor2<float>& dense,
                   Tensor2<float>& sparse) {
    proprio(0, 0) = obs.distance_m;
    proprio(0, 1) = obs.heading_rad;
    proprio(0, 2) = obs.prev_action.v_lin;
    proprio(0, 3) = obs.prev_action.v_ang;
    std::copy(obs.dense.begin(), obs.dense.end(), dense.row(0));
    std::copy(obs.sparse.begin(), obs.sparse.end(), sparse.row(0));
  }

 private:
  const TeacherNet& net_;
};

class StudentPolicy final : public EpisodePolicy {
 public:
  StudentPolicy(const StudentNet& net) : net_(net), hidden_(net.zero_hidden(1)) {}
  void begin_episode() override { hidden_ = net_.zero_hidden(1); }
  Action act(const Observation& obs) override {
    Tensor2<float> proprio(1, 4), dense(1, net_.k_dense()), sparse(1, net_.k_sparse());
    TeacherPolicy::pack(obs, proprio, dense, sparse);
    const Tensor2<float> a = net_.act_clamped(proprio, dense, sparse, hidden_);
    return Action{a(0, 0), a(0, 1)};
  }

 private:
  const StudentNet& net_;
  StudentNet::Hidden hidden_;
};

}  // namespace

double oscillation_trace(const std::vector<Action>& actions, const std::string& csv_path) {
  if (actions.empty()) throw std::invalid_argument("oscillation_trace on empty trajectory");
  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("cannot write " + csv_path);
    f << "step,v_lin,v_ang\n";
    char row[96];
    for (size_t t = 0; t < actions.size(); ++t) {
      std::snprintf(row, sizeof row, "%zu,%.9g,%.9g\n", t, double(actions[t].v_lin),
                    double(actions[t].v_ang));
      f << row;
    }
  }
  if (actions.size() < 2) return 0.0;
  double acc = 0;
  for (size_t t = 1; t < actions.size(); ++t) {
    const double d0 = double(actions[t].v_lin) - actions[t - 1].v_lin;
    const double d1 = double(actions[t].v_ang) - actions[t - 1].v_ang;
    acc += d0 * d0 + d1 * d1;
  }
  return acc / double(actions.size() - 1);
}

EvalReport run_eval_policy(const PolicyFactory& factory, const EvalConfig& cfg) {
  if (cfg.episodes < 1) throw std::invalid_argument("eval needs at least one episode");
  const TerrainMap map = generate_terrain(cfg.terrain);

  SamplePattern pattern;
  if (cfg.pattern) {
    pattern = build_pattern(*cfg.pattern);
  } else if (!cfg.checkpoint.empty()) {
    pattern = build_pattern(read_checkpoint_manifest(cfg.checkpoint + ".json").pattern);
  } else {
    pattern = build_pattern(PatternConfig::tiny());
  }

  const RoverGeometry geom = RoverGeometry::six_wheel();
  const double edge_margin = pattern.margin_m + cfg.sim.edge_safety_m;
  const auto slots = spawn_slots(map, cfg.sim, geom, edge_margin, cfg.spawn_slot_count);

  const bool noisy = cfg.noise != NoisePreset::none;
  const NoiseTable table = cfg.noise == NoisePreset::train_mix ? NoiseTable::train_mix()
                                                               : NoiseTable::eval_noise();

  EvalReport report;
  report.agent_label = cfg.agent_label;
  report.terrain_label = cfg.terrain_label;
  report.noise_label = to_string(cfg.noise);
  report.episodes = cfg.episodes;
  report.seed = cfg.seed;
  report.rows.resize(cfg.episodes);
  std::vector<std::vector<Action>> traces(
      std::min(cfg.episodes, std::max(0, cfg.dump_action_episodes)));

  std::exception_ptr error;
#pragma omp parallel if (cfg.parallel)
  {
    auto policy = factory();
#pragma omp for schedule(dynamic, 1)
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      try {
        Rng reset_rng(derive_seed(cfg.seed, "eval_reset", static_cast<uint64_t>(ep)));
        Rng noise_rng(derive_seed(cfg.seed, "eval_noise", static_cast<uint64_t>(ep)));
        const auto& slot = slots[ep % slots.size()];
        RoverState state = reset_state(slot[0], slot[1], map, cfg.sim, reset_rng);
        EpisodeNoise ep_noise;
        if (noisy) ep_noise = begin_episode_noise(table, noise_rng);

        policy->begin_episode();
        const bool keep_trace = ep < static_cast<int>(traces.size());
        std::vector<Action> actions;
        double ret = 0;
        Termination cause = Termination::none;
        while (cause == Termination::none) {
          Observation obs = observe(state, map, pattern);
          if (noisy) {
            obs.dense = apply_noise(obs.dense, table, ep_noise, noise_rng);
            obs.sparse = apply_noise(obs.sparse, table, ep_noise, noise_rng);
          }
          const Action a = policy->act(obs);
          const StepOutcome outcome =
              step_env(state, a, map, cfg.sim, geom, cfg.rewards, edge_margin);
          actions.push_back(state.prev_action);  // clamped, as applied
          ret += outcome.reward;
          cause = outcome.cause;
        }

        EpisodeRow& row = report.rows[ep];
        row.episode = ep;
        row.steps = state.steps_elapsed;
        row.duration_s =
            state.steps_elapsed * cfg.sim.physics_dt_s * cfg.sim.substeps_per_control;
        row.cause = cause;
        row.final_distance_m = std::hypot(state.goal_x - state.x, state.goal_y - state.y);
        row.oscillation = actions.size() > 1 ? oscillation_trace(actions) : 0.0;
        row.episode_return = ret;
        if (keep_trace) traces[ep] = std::move(actions);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);

  int successes = 0;
  double dur = 0, osc = 0;
  for (const auto& r : report.rows) {
    if (r.cause == Termination::goal_reached) {
      ++successes;
      dur += r.duration_s;
    }
    osc += r.oscillation;
  }
  report.success_rate = double(successes) / cfg.episodes;
  report.mean_success_duration_s = successes > 0 ? dur / successes : 0.0;
  report.mean_oscillation = osc / cfg.episodes;

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_report(report, cfg.out_dir);
    for (size_t ep = 0; ep < traces.size(); ++ep)
      if (!traces[ep].empty())
        oscillation_trace(traces[ep], cfg.out_dir + "/actions_" + std::to_string(ep) + ".csv");
  }
  return report;
}

EvalReport run_eval(const EvalConfig& cfg) {
  if (cfg.checkpoint.empty()) throw std::invalid_argument("eval needs a checkpoint");
  const CheckpointInfo info = read_checkpoint_manifest(cfg.checkpoint + ".json");
  if (info.kind == "teacher") {
    auto net = std::make_shared<TeacherNet>(info.k_dense, info.k_sparse);
    if (net->params().arch_hash() != info.arch_hash)
      throw std::runtime_error("checkpoint architecture hash mismatch (teacher)");
    net->params().load(cfg.checkpoint);
    return run_eval_policy([net]() { return std::make_unique<TeacherPolicy>(*net); }, cfg);
  }
  if (info.kind == "student") {
    auto net = std::make_shared<StudentNet>(info.k_dense, info.k_sparse,
                                            info.gru_hidden > 0 ? info.gru_hidden : 256);
    if (net->params().arch_hash() != info.arch_hash)
      throw std::runtime_error("checkpoint architecture hash mismatch (student)");
    net->params().load(cfg.checkpoint);
    return run_eval_policy([net]() { return std::make_unique<StudentPolicy>(*net); }, cfg);
  }
  throw std::runtime_error("unknown checkpoint kind: " + info.kind);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void write_report(const EvalReport& report, const std::string& out_dir) {
  json j;
  j["agent"] = report.agent_label;
  j["terrain"] = report.terrain_label;
  j["noise"] = report.noise_label;
  j["episodes"] = report.episodes;
  j["seed"] = report.seed;
  j["success_rate"] = report.success_rate;
  j["mean_success_duration_s"] = report.mean_success_duration_s;
  j["mean_oscillation"] = report.mean_oscillation;
  {
    std::ofstream f(out_dir + "/report.json");
    if (!f) throw std::runtime_error("cannot write report.json in " + out_dir);
    f << j.dump(2) << "\n";
  }
  std::ofstream f(out_dir + "/episodes.csv");
  if (!f) throw std::runtime_error("cannot write episodes.csv in " + out_dir);
  f << "episode,steps,duration_s,cause,final_distance_m,oscillation,episode_return\n";
  char row[256];
  for (const auto& r : report.rows) {
    std::snprintf(row, sizeof row, "%d,%d,%.9g,%s,%.9g,%.9g,%.9g\n", r.episode, r.steps,
                  r.duration_s, cause_name(r.cause), r.final_distance_m, r.oscillation,
                  r.episode_return);
    f << row;
  }
}

EvalReport load_report(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("cannot open report: " + json_path);
  json j = json::parse(f);
  EvalReport r;
  r.agent_label = j.at("agent").get<std::string>();
  r.terrain_label = j.at("terrain").get<std::string>();
  r.noise_label = j.at("noise").get<std::string>();
  r.episodes = j.at("episodes").get<int>();
  r.seed = j.at("seed").get<uint64_t>();
  r.success_rate = j.at("success_rate").get<double>();
  r.mean_success_duration_s = j.at("mean_success_duration_s").get<double>();
  r.mean_oscillation = j.at("mean_oscillation").get<double>();
  return r;
}

namespace {
std::string column_key(const EvalReport& r) {
  return r.noise_label == "none" ? r.terrain_label : r.terrain_label + "(n)";
}

std::string cell(const EvalReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%% (%.1fs)", 100.0 * r.success_rate,
                r.mean_success_duration_s);
  return buf;
}

struct Grid {
  std::vector<std::string> agents, columns;
  std::map<std::pair<std::string, std::string>, std::string> cells;
};

Grid build_grid(const std::vector<EvalReport>& reports) {
  Grid g;
  for (const auto& r : reports) {
    if (std::find(g.agents.begin(), g.agents.end(), r.agent_label) == g.agents.end())
      g.agents.push_back(r.agent_label);
    const std::string col = column_key(r);
    if (std::find(g.columns.begin(), g.columns.end(), col) == g.columns.end())
      g.columns.push_back(col);
    g.cells[{r.agent_label, col}] = cell(r);
  }
  return g;
}
}  // namespace

std::string compare_report_markdown(const std::vector<EvalReport>& reports) {
  const Grid g = build_grid(reports);
  std::string out = "| Agent |";
  for (const auto& c : g.columns) out += " " + c + " |";
  out += "\n|---|";
  for (size_t i = 0; i < g.columns.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& a : g.agents) {
    out += "| " + a + " |";
    for (const auto& c : g.columns) {
      auto it = g.cells.find({a, c});
      out += " " + (it == g.cells.end() ? std::string("\xE2\x80\x94") : it->second) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string compare_report_csv(const std::vector<EvalReport>& reports) {
  const Grid g = build_grid(reports);
  std::string out = "agent";
  for (const auto& c : g.columns) out += "," + c;
  out += "\n";
  for (const auto& a : g.agents) {
    out += a;
    for (const auto& c : g.columns) {
      auto it = g.cells.find({a, c});
      out += "," + (it == g.cells.end() ? std::string("\xE2\x80\x94") : it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace rover

// Command-line entry point for the full pipeline:
//   terrain gen -> train-teacher -> collect -> train-student -> eval -> report
// Every stage writes into a run directory with a config snapshot and a
// manifest of input/output hashes, so any artifact can be traced back to the
// exact configs and seeds that produced it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rover/config.hpp"
#include "rover/csvplot.hpp"
#include "rover/dataset.hpp"
#include "rover/eval.hpp"
#include "rover/manifest.hpp"
#include "rover/student.hpp"
#include "rover/teacher.hpp"

namespace fs = std::filesystem;
using namespace rover;

namespace {

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  if (!path.empty()) cfg = ExperimentConfig::load(path);
  cfg.validate();
  return cfg;
}

std::string snapshot_config(const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  cfg.save(dir + "/config.ini");
  return hash_file_hex(dir + "/config.ini");
}

void apply_terrain_preset(ExperimentConfig& cfg, const std::string& preset) {
  if (preset.empty()) return;
  const uint64_t seed = cfg.terrain.seed;
  if (preset == "t1")
    cfg.terrain = TerrainParams::preset_t1(seed);
  else if (preset == "t2")
    cfg.terrain = TerrainParams::preset_t2(seed);
  else
    throw CLI::ValidationError("--preset must be t1 or t2");
}

int cmd_terrain_gen(const std::string& config_path, uint64_t seed, const std::string& preset,
                    const std::string& out) {
  ExperimentConfig cfg = load_config(config_path);
  cfg.terrain.seed = seed;
  apply_terrain_preset(cfg, preset);

  DirLock lock(out);
  const std::string config_hash = snapshot_config(cfg, out);
  const TerrainMap map = generate_terrain(cfg.terrain);
  map.save(out);

  RunManifest m;
  m.stage = "terrain";
  m.seed = seed;
  m.config_hash = config_hash;
  m.add_output("heights", out, "heights.f32");
  m.add_output("terrain_json", out, "terrain.json");
  write_manifest(out, m);
  std::printf("terrain: %dx%d nodes, %zu rocks -> %s\n", map.nodes_per_side(),
              map.nodes_per_side(), map.rocks().size(), out.c_str());
  return 0;
}

int cmd_train_teacher(const std::string& config_path, uint64_t seed, const std::string& out,
                      bool domain_rand) {
  ExperimentConfig cfg = load_config(config_path);
  cfg.run.seed = seed;

  DirLock lock(out);
  const std::string config_hash = snapshot_config(cfg, out);

  TeacherTrainConfig tc;
  tc.ppo = cfg.ppo;
  tc.sim = cfg.sim;
  tc.rewards = cfg.reward;
  tc.pattern = cfg.pattern;
  tc.terrain = cfg.terrain;
  tc.domain_rand = domain_rand ? NoisePreset::train_mix : NoisePreset::none;
  tc.n_envs = cfg.run.n_envs;
  tc.total_env_steps = cfg.run.total_env_steps;
  tc.seed = seed;
  tc.checkpoint_every_iters = cfg.run.checkpoint_every_iters;
  tc.stats_window = cfg.run.stats_window;
  tc.stop_at_success = cfg.run.stop_at_success;
  tc.out_dir = out;

  const TeacherTrainResult r = train_teacher(tc);

  RunManifest m;
  m.stage = "train-teacher";
  m.seed = seed;
  m.config_hash = config_hash;
  m.add_output("checkpoint", out, "teacher.bin");
  m.add_output("checkpoint_manifest", out, "teacher.bin.json");
  m.add_output("metrics", out, "metrics.csv");
  m.extra["domain_rand"] = domain_rand;
  m.extra["env_steps"] = r.env_steps;
  write_manifest(out, m);
  std::printf("teacher: %lld env steps, rolling success %.3f -> %s\n", r.env_steps,
              r.rolling_success, r.checkpoint_path.c_str());
  return 0;
}

int cmd_collect(const std::string& config_path, const std::string& teacher, int envs, int steps,
                uint64_t seed, const std::string& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (envs > 0) cfg.collect.env_count = envs;
  if (steps > 0) cfg.collect.steps = steps;

  // refuse to run without the upstream training manifest
  const RunManifest upstream = read_manifest(fs::path(teacher).parent_path().string());
  if (upstream.stage != "train-teacher")
    throw std::runtime_error("provenance error: --teacher does not point into a train-teacher "
                             "run directory (stage=" + upstream.stage + ")");

  DirLock lock(out);
  const std::string config_hash = snapshot_config(cfg, out);

  CollectConfig cc;
  cc.teacher_checkpoint = teacher;
  cc.terrain = cfg.terrain;
  cc.sim = cfg.sim;
  cc.rewards = cfg.reward;
  cc.env_count = cfg.collect.env_count;
  cc.steps = cfg.collect.steps;
  cc.envs_per_shard = cfg.collect.envs_per_shard;
  cc.stochastic = cfg.collect.stochastic;
  cc.seed = seed;
  cc.out_dir = out;
  const CollectResult r = collect(cc);

  const CheckpointInfo info = read_checkpoint_manifest(teacher + ".json");
  RunManifest m;
  m.stage = "collect";
  m.seed = seed;
  m.config_hash = config_hash;
  m.add_input("teacher_checkpoint", teacher);
  for (size_t i = 0; i < r.shard_paths.size(); ++i)
    m.add_output("shard_" + std::to_string(i), out,
                 fs::path(r.shard_paths[i]).filename().string());
  m.extra["records"] = r.records;
  m.extra["pattern"]["dense_halfwidth_m"] = info.pattern.dense_halfwidth_m;
  m.extra["pattern"]["dense_pitch_m"] = info.pattern.dense_pitch_m;
  m.extra["pattern"]["sparse_pitch_m"] = info.pattern.sparse_pitch_m;
  m.extra["pattern"]["sparse_min_m"] = info.pattern.sparse_min_m;
  m.extra["pattern"]["sparse_max_m"] = info.pattern.sparse_max_m;
  write_manifest(out, m);
  std::printf("collect: %lld records in %zu shard(s) -> %s\n", r.records, r.shard_paths.size(),
              out.c_str());
  return 0;
}

int cmd_train_student(const std::string& config_path, const std::string& data,
                      const std::string& noise, int epochs, uint64_t seed,
                      const std::string& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (epochs > 0) cfg.student.epochs = epochs;

  const RunManifest upstream = read_manifest(data);
  if (upstream.stage != "collect")
    throw std::runtime_error("provenance error: --data is not a collect run directory (stage=" +
                             upstream.stage + ")");

  DirLock lock(out);
  const std::string config_hash = snapshot_config(cfg, out);

  StudentTrainConfig sc;
  for (const auto& [name, rel] : upstream.outputs)
    if (name.rfind("shard_", 0) == 0) sc.shard_paths.push_back(data + "/" + rel);
  std::sort(sc.shard_paths.begin(), sc.shard_paths.end());
  if (upstream.extra.contains("pattern")) {
    const auto& p = upstream.extra.at("pattern");
    sc.pattern.dense_halfwidth_m = p.at("dense_halfwidth_m").get<double>();
    sc.pattern.dense_pitch_m = p.at("dense_pitch_m").get<double>();
    sc.pattern.sparse_pitch_m = p.at("sparse_pitch_m").get<double>();
    sc.pattern.sparse_min_m = p.at("sparse_min_m").get<double>();
    sc.pattern.sparse_max_m = p.at("sparse_max_m").get<double>();
  } else {
    sc.pattern = cfg.pattern;
  }
  sc.noise = noise_preset_from_string(noise);
  sc.seq_len = cfg.student.seq_len;
  sc.batch_size = cfg.student.batch_size;
  sc.lr = cfg.student.lr;
  sc.epochs = cfg.student.epochs;
  sc.validation_fraction = cfg.student.validation_fraction;
  sc.patience = cfg.student.patience;
  sc.gru_hidden = cfg.student.gru_hidden;
  sc.seed = seed;
  sc.out_dir = out;
  const StudentTrainResult r = train_student(sc);

  RunManifest m;
  m.stage = "train-student";
  m.seed = seed;
  m.config_hash = config_hash;
  for (const auto& p : sc.shard_paths)
    m.add_input(fs::path(p).filename().string(), p);
  m.add_output("checkpoint", out, "student.bin");
  m.add_output("checkpoint_manifest", out, "student.bin.json");
  m.add_output("loss", out, "loss.csv");
  m.extra["noise"] = noise;
  m.extra["epochs_run"] = r.epochs_run;
  m.extra["best_val_mse"] = r.best_val_mse;
  write_manifest(out, m);
  std::printf("student: %d epoch(s), best val MSE %.6g -> %s\n", r.epochs_run, r.best_val_mse,
              r.checkpoint_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& policy,
             const std::string& terrain, const std::string& noise, int episodes, uint64_t seed,
             const std::string& agent, const std::string& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (episodes > 0) cfg.eval.episodes = episodes;
  apply_terrain_preset(cfg, terrain);

  read_manifest(fs::path(policy).parent_path().string());  // provenance gate

  DirLock lock(out);
  const std::string config_hash = snapshot_config(cfg, out);

  EvalConfig ec;
  ec.checkpoint = policy;
  ec.terrain = cfg.terrain;
  ec.sim = cfg.sim;
  ec.rewards = cfg.reward;
  ec.noise = noise_preset_from_string(noise);
  ec.episodes = cfg.eval.episodes;
  ec.seed = seed;
  ec.dump_action_episodes = cfg.eval.dump_action_episodes;
  ec.spawn_slot_count = cfg.eval.spawn_slot_count;
  ec.agent_label = agent.empty() ? read_checkpoint_manifest(policy + ".json").kind : agent;
  ec.terrain_label = terrain.empty() ? "custom" : terrain;
  ec.out_dir = out;
  const EvalReport r = run_eval(ec);

  RunManifest m;
  m.stage = "eval";
  m.seed = seed;
  m.config_hash = config_hash;
  m.add_input("policy", policy);
  m.add_output("report", out, "report.json");
  m.add_output("episodes", out, "episodes.csv");
  write_manifest(out, m);
  std::printf("eval: %s on %s noise=%s -> success %.1f%% duration %.1fs oscillation %.4f\n",
              ec.agent_label.c_str(), ec.terrain_label.c_str(), noise.c_str(),
              100.0 * r.success_rate, r.mean_success_duration_s, r.mean_oscillation);
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out) {
  std::vector<EvalReport> reports;
  for (const auto& dir : run_dirs) {
    read_manifest(dir);  // provenance gate
    reports.push_back(load_report(dir + "/report.json"));
  }
  const std::string md = compare_report_markdown(reports);
  const std::string csv = compare_report_csv(reports);
  if (out.empty()) {
    std::cout << md;
  } else {
    fs::create_directories(out);
    std::ofstream(out + "/comparison.md") << md;
    std::ofstream(out + "/comparison.csv") << csv;
    std::printf("report: %zu runs -> %s/comparison.{md,csv}\n", reports.size(), out.c_str());
  }
  return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& out, const std::string& x_col,
             const std::string& y_col) {
  const CsvTable t = read_csv(csv_path);
  const int xc = t.column(x_col), yc = t.column(y_col);
  if (xc < 0 || yc < 0)
    throw std::runtime_error("CSV is missing column '" + (xc < 0 ? x_col : y_col) + "'");
  PlotSeries s;
  s.label = y_col;
  s.x = t.numeric(xc);
  s.y = t.numeric(yc);
  const std::string path = out.empty() ? csv_path + ".svg" : out;
  write_line_plot_svg(path, {s}, fs::path(csv_path).filename().string(), x_col, y_col);
  std::printf("plot: %s -> %s\n", csv_path.c_str(), path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage rover navigation pipeline: terrain, PPO teacher, trajectory "
               "collection, recurrent student distillation, evaluation"};
  app.require_subcommand(1);

  std::string config_path, out, preset, teacher, data, noise = "none", policy, terrain, agent;
  std::string plot_x = "env_steps", plot_y = "mean_return", csv_path;
  std::vector<std::string> run_dirs;
  uint64_t seed = 1;
  int envs = 0, steps = 0, epochs = 0, episodes = 0;
  bool domain_rand = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file (key/value with sections)");
    cmd->add_option("--seed", seed, "run seed");
  };

  auto* t = app.add_subcommand("terrain", "procedural map tools");
  auto* tg = t->add_subcommand("gen", "generate a map and save heights.f32 + terrain.json");
  add_common(tg);
  tg->add_option("--preset", preset, "terrain preset: t1 (large rocks) or t2 (mixed)");
  tg->add_option("--out", out, "output directory")->required();

  auto* tt = app.add_subcommand("train-teacher", "PPO training on privileged observations");
  add_common(tt);
  tt->add_flag("--domain-rand", domain_rand, "apply heightmap noise during training");
  tt->add_option("--out", out, "run directory")->required();

  auto* co = app.add_subcommand("collect", "log teacher trajectories to dataset shards");
  add_common(co);
  co->add_option("--teacher", teacher, "teacher checkpoint (.bin)")->required();
  co->add_option("--envs", envs, "override collect.env_count");
  co->add_option("--steps", steps, "override collect.steps");
  co->add_option("--out", out, "run directory")->required();

  auto* ts = app.add_subcommand("train-student", "distill a recurrent student from a dataset");
  add_common(ts);
  ts->add_option("--data", data, "collect run directory")->required();
  ts->add_option("--noise", noise, "noise preset: none|train-mix|eval-noise");
  ts->add_option("--epochs", epochs, "override student.epochs");
  ts->add_option("--out", out, "run directory")->required();

  auto* ev = app.add_subcommand("eval", "run evaluation episodes and emit a report");
  add_common(ev);
  ev->add_option("--policy", policy, "checkpoint (.bin) of a teacher or student")->required();
  ev->add_option("--terrain", terrain, "terrain preset: t1|t2");
  ev->add_option("--noise", noise, "noise preset: none|eval-noise|train-mix");
  ev->add_option("--episodes", episodes, "override eval.episodes");
  ev->add_option("--agent", agent, "agent label for reports");
  ev->add_option("--out", out, "run directory")->required();

  auto* rp = app.add_subcommand("report", "combine eval reports into a comparison table");
  rp->add_option("runs", run_dirs, "eval run directories")->required()->expected(-1);
  rp->add_option("--out", out, "output directory (default: print to stdout)");

  auto* pl = app.add_subcommand("plot", "render a CSV column as an SVG line plot");
  pl->add_option("csv", csv_path, "input CSV (e.g. metrics.csv)")->required();
  pl->add_option("--x", plot_x, "x column");
  pl->add_option("--y", plot_y, "y column");
  pl->add_option("--out", out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tg->parsed()) return cmd_terrain_gen(config_path, seed, preset, out);
    if (tt->parsed()) return cmd_train_teacher(config_path, seed, out, domain_rand);
    if (co->parsed()) return cmd_collect(config_path, teacher, envs, steps, seed, out);
    if (ts->parsed()) return cmd_train_student(config_path, data, noise, epochs, seed, out);
    if (ev->parsed()) return cmd_eval(config_path, policy, terrain, noise, episodes, seed, agent,
                                      out);
    if (rp->parsed()) return cmd_report(run_dirs, out);
    if (pl->parsed()) return cmd_plot(csv_path, out, plot_x, plot_y);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

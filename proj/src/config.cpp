#include "rover/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rover {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid number for " + where + ": '" + v + "'");
  }
}

long long parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid integer for " + where + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("invalid boolean for " + where + ": '" + v + "'");
}

/// Declarative schema: section -> key -> accessor pair.
class Schema {
 public:
  explicit Schema(ExperimentConfig& c) : c_(c) { build(); }

  void set(const std::string& section, const std::string& key, const std::string& value,
           const std::string& origin) {
    auto s = fields_.find(section);
    if (s == fields_.end())
      throw std::invalid_argument(origin + ": unknown section [" + section + "]");
    auto k = s->second.find(key);
    if (k == s->second.end())
      throw std::invalid_argument(origin + ": unknown key '" + key + "' in [" + section + "]");
    k->second.set(value);
  }

  std::string dump() const {
    std::string out;
    for (const auto& sec : order_) {
      out += "[" + sec + "]\n";
      for (const auto& key : key_order_.at(sec))
        out += key + " = " + fields_.at(sec).at(key).get() + "\n";
      out += "\n";
    }
    return out;
  }

 private:
  void add(const std::string& sec, const std::string& key, double& ref) {
    reg(sec, key,
        {[&ref, sec, key](const std::string& v) { ref = parse_double(v, sec + "." + key); },
         [&ref] { return fmt_double(ref); }});
  }
  void add(const std::string& sec, const std::string& key, int& ref) {
    reg(sec, key,
        {[&ref, sec, key](const std::string& v) {
           ref = static_cast<int>(parse_int(v, sec + "." + key));
         },
         [&ref] { return std::to_string(ref); }});
  }
  void add(const std::string& sec, const std::string& key, long long& ref) {
    reg(sec, key, {[&ref, sec, key](const std::string& v) { ref = parse_int(v, sec + "." + key); },
                   [&ref] { return std::to_string(ref); }});
  }
  void add(const std::string& sec, const std::string& key, uint64_t& ref) {
    reg(sec, key,
        {[&ref, sec, key](const std::string& v) {
           ref = static_cast<uint64_t>(parse_int(v, sec + "." + key));
         },
         [&ref] { return std::to_string(ref); }});
  }
  void add(const std::string& sec, const std::string& key, bool& ref) {
    reg(sec, key, {[&ref, sec, key](const std::string& v) { ref = parse_bool(v, sec + "." + key); },
                   [&ref] { return ref ? std::string("true") : std::string("false"); }});
  }

  void reg(const std::string& sec, const std::string& key, Field f) {
    if (!fields_.count(sec)) order_.push_back(sec);
    if (!fields_[sec].count(key)) key_order_[sec].push_back(key);
    fields_[sec][key] = std::move(f);
  }

  void build() {
    add("terrain", "seed", c_.terrain.seed);
    add("terrain", "extent_m", c_.terrain.extent_m);
    add("terrain", "cell_m", c_.terrain.cell_m);
    add("terrain", "hill_amplitude_m", c_.terrain.hill_amplitude_m);
    add("terrain", "hill_wavelength_m", c_.terrain.hill_wavelength_m);
    add("terrain", "bump_amplitude_m", c_.terrain.bump_amplitude_m);
    add("terrain", "bump_wavelength_m", c_.terrain.bump_wavelength_m);
    add("terrain", "rock_density_per_m2", c_.terrain.rock_density_per_m2);
    add("terrain", "small_rock_fraction", c_.terrain.small_rock_fraction);
    add("terrain", "climb_height_threshold_m", c_.terrain.climb_height_threshold_m);

    add("pattern", "dense_halfwidth_m", c_.pattern.dense_halfwidth_m);
    add("pattern", "dense_pitch_m", c_.pattern.dense_pitch_m);
    add("pattern", "sparse_pitch_m", c_.pattern.sparse_pitch_m);
    add("pattern", "sparse_min_m", c_.pattern.sparse_min_m);
    add("pattern", "sparse_max_m", c_.pattern.sparse_max_m);

    add("reward", "w_d", c_.reward.w_d);
    add("reward", "w_a", c_.reward.w_a);
    add("reward", "w_v", c_.reward.w_v);
    add("reward", "w_h", c_.reward.w_h);
    add("reward", "collision_penalty", c_.reward.collision_penalty);
    add("reward", "heading_limit_rad", c_.reward.heading_limit_rad);

    add("ppo", "lr", c_.ppo.lr);
    add("ppo", "kl_threshold", c_.ppo.kl_threshold);
    add("ppo", "gamma", c_.ppo.gamma);
    add("ppo", "lambda", c_.ppo.lam);
    add("ppo", "clip", c_.ppo.clip);
    add("ppo", "epochs", c_.ppo.epochs);
    add("ppo", "minibatches", c_.ppo.minibatches);
    add("ppo", "value_coef", c_.ppo.value_coef);
    add("ppo", "entropy_coef", c_.ppo.entropy_coef);
    add("ppo", "grad_clip_norm", c_.ppo.grad_clip_norm);
    add("ppo", "horizon", c_.ppo.horizon);
    add("ppo", "lr_min", c_.ppo.lr_min);
    add("ppo", "lr_max", c_.ppo.lr_max);

    add("sim", "v_lin_max_mps", c_.sim.v_lin_max_mps);
    add("sim", "v_ang_max_rps", c_.sim.v_ang_max_rps);
    add("sim", "physics_dt_s", c_.sim.physics_dt_s);
    add("sim", "substeps_per_control", c_.sim.substeps_per_control);
    add("sim", "point_turn_ratio", c_.sim.point_turn_ratio);
    add("sim", "ratio_eps", c_.sim.ratio_eps);
    add("sim", "goal_radius_m", c_.sim.goal_radius_m);
    add("sim", "max_episode_steps", c_.sim.max_episode_steps);
    add("sim", "goal_spawn_radius_m", c_.sim.goal_spawn_radius_m);
    add("sim", "goal_rock_clearance_m", c_.sim.goal_rock_clearance_m);
    add("sim", "goal_resample_limit", c_.sim.goal_resample_limit);
    add("sim", "collision_rays", c_.sim.collision_rays);
    add("sim", "edge_safety_m", c_.sim.edge_safety_m);

    add("run", "seed", c_.run.seed);
    add("run", "n_envs", c_.run.n_envs);
    add("run", "total_env_steps", c_.run.total_env_steps);
    add("run", "checkpoint_every_iters", c_.run.checkpoint_every_iters);
    add("run", "stats_window", c_.run.stats_window);
    add("run", "stop_at_success", c_.run.stop_at_success);

    add("collect", "env_count", c_.collect.env_count);
    add("collect", "steps", c_.collect.steps);
    add("collect", "envs_per_shard", c_.collect.envs_per_shard);
    add("collect", "stochastic", c_.collect.stochastic);

    add("student", "seq_len", c_.student.seq_len);
    add("student", "batch_size", c_.student.batch_size);
    add("student", "lr", c_.student.lr);
    add("student", "epochs", c_.student.epochs);
    add("student", "validation_fraction", c_.student.validation_fraction);
    add("student", "patience", c_.student.patience);
    add("student", "gru_hidden", c_.student.gru_hidden);

    add("eval", "episodes", c_.eval.episodes);
    add("eval", "dump_action_episodes", c_.eval.dump_action_episodes);
    add("eval", "spawn_slot_count", c_.eval.spawn_slot_count);
  }

  ExperimentConfig& c_;
  std::map<std::string, std::map<std::string, Field>> fields_;
  std::map<std::string, std::vector<std::string>> key_order_;
  std::vector<std::string> order_;
};

}  // namespace

void ExperimentConfig::apply(const std::string& text, const std::string& origin) {
  Schema schema(*this);
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument(where + ": key '" + key + "' outside any [section]");
    schema.set(section, key, value, where);
  }
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  ExperimentConfig c;
  c.apply(ss.str(), path);
  c.validate();
  return c;
}

std::string ExperimentConfig::snapshot() const {
  Schema schema(const_cast<ExperimentConfig&>(*this));
  return schema.dump();
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write config snapshot: " + path);
  f << snapshot();
}

void ExperimentConfig::validate() const {
  terrain.validate();
  pattern.validate();
  reward.validate();
  ppo.validate();
  if (run.n_envs < 1 || run.total_env_steps < 0)
    throw std::invalid_argument("run.n_envs must be >= 1 and run.total_env_steps >= 0");
  if (student.seq_len < 1 || student.batch_size < 1)
    throw std::invalid_argument("student.seq_len and student.batch_size must be >= 1");
  if (eval.episodes < 1) throw std::invalid_argument("eval.episodes must be >= 1");
}

}  // namespace rover

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace onramp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Road geometry, merging-vehicle limits and episode lifecycle.
struct EnvConfig {
  double merge_point = 0.0;
  double control_zone_start = 100.0;
  double control_zone_end = -100.0;
  double sensing_radius = 200.0;
  double junction_length = 10.0;
  double spawn_distance = 400.0;
  double despawn_distance = 400.0;
  double speed_limit = 29.06;
  double vehicle_length = 5.0;
  double collision_gap = 2.5;
  double a_min = -4.5;
  double a_max = 2.6;
  double v_init_min = 22.35;
  double v_init_max = 26.82;
  double dt = 0.1;
  int prefill_steps = 300;
  int warmup_steps = 100;
  int max_steps = 1200;

  template <class Visitor>
  void visit(Visitor&& f) {
    f("merge_point", merge_point, -kInf, kInf);
    f("control_zone_start", control_zone_start, 0.0, kInf);
    f("control_zone_end", control_zone_end, -kInf, 0.0);
    f("sensing_radius", sensing_radius, 1.0, kInf);
    f("junction_length", junction_length, 0.0, kInf);
    f("spawn_distance", spawn_distance, 1.0, kInf);
    f("despawn_distance", despawn_distance, 1.0, kInf);
    f("speed_limit", speed_limit, 1.0, kInf);
    f("vehicle_length", vehicle_length, 0.1, kInf);
    f("collision_gap", collision_gap, 0.0, kInf);
    f("a_min", a_min, -4.5, -0.01);
    f("a_max", a_max, 0.01, 2.6);
    f("v_init_min", v_init_min, 0.1, kInf);
    f("v_init_max", v_init_max, 0.1, kInf);
    f("dt", dt, 1e-3, 1.0);
    f("prefill_steps", prefill_steps, 0, 1000000);
    f("warmup_steps", warmup_steps, 0, 1000000);
    f("max_steps", max_steps, 1, 100000000);
  }
};

/// Main-road traffic: spawn model and IDM parameter distributions.
struct TrafficConfig {
  double spawn_probability = 0.5;
  int spawn_interval_steps = 10;
  double gamma_mean = 1.0;
  double gamma_std = 0.1;
  double gamma_min = 0.8;
  double gamma_max = 1.2;
  double headway_min = 1.0;
  double headway_max = 1.6;
  double min_gap = 2.0;
  double max_accel = 1.5;
  double comfortable_decel = 2.0;
  double delta = 4.0;
  double accel_min = -4.5;
  double accel_max = 2.6;
  double emergency_decel = -9.0;

  template <class Visitor>
  void visit(Visitor&& f) {
    f("spawn_probability", spawn_probability, 0.0, 1.0);
    f("spawn_interval_steps", spawn_interval_steps, 1, 1000000);
    f("gamma_mean", gamma_mean, 0.0, kInf);
    f("gamma_std", gamma_std, 0.0, kInf);
    f("gamma_min", gamma_min, 0.01, kInf);
    f("gamma_max", gamma_max, 0.01, kInf);
    f("headway_min", headway_min, 0.01, kInf);
    f("headway_max", headway_max, 0.01, kInf);
    f("min_gap", min_gap, 0.0, kInf);
    f("max_accel", max_accel, 0.01, 2.6);
    f("comfortable_decel", comfortable_decel, 0.01, kInf);
    f("delta", delta, 0.1, kInf);
    f("accel_min", accel_min, -kInf, -0.01);
    f("accel_max", accel_max, 0.01, kInf);
    f("emergency_decel", emergency_decel, -kInf, -0.01);
  }
};

/// Multi-objective reward weights and normalizers.
struct RewardWeights {
  double w_m = 0.015;
  double w_b = 0.015;
  double w_j = 0.0;
  double delta_v_max = 5.0;
  double j_max = 3.0;
  double stop_penalty = -0.5;
  double collision_penalty = -1.0;
  double success_reward = 1.0;

  template <class Visitor>
  void visit(Visitor&& f) {
    f("w_m", w_m, 0.0, kInf);
    f("w_b", w_b, 0.0, kInf);
    f("w_j", w_j, 0.0, kInf);
    f("delta_v_max", delta_v_max, 1e-6, kInf);
    f("j_max", j_max, 1e-6, kInf);
    f("stop_penalty", stop_penalty, -kInf, 0.0);
    f("collision_penalty", collision_penalty, -kInf, 0.0);
    f("success_reward", success_reward, 0.0, kInf);
  }
};

struct DdpgConfig {
  double tau = 0.001;
  double gamma = 0.99;
  double actor_lr = 0.0001;
  double critic_lr = 0.001;
  std::int64_t replay_capacity = 1500000;
  int batch_size = 128;
  double noise_mean = 0.0;
  double noise_std = 0.02;
  std::int64_t total_steps = 1500000;
  int hidden = 64;
  double output_init = 0.003;
  std::int64_t random_action_steps = 10000;
  double preactivation_penalty = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  template <class Visitor>
  void visit(Visitor&& f) {
    f("tau", tau, 0.0, 1.0);
    f("gamma", gamma, 0.0, 1.0);
    f("actor_lr", actor_lr, 0.0, kInf);
    f("critic_lr", critic_lr, 0.0, kInf);
    f("replay_capacity", replay_capacity, std::int64_t{1}, std::int64_t{1} << 40);
    f("batch_size", batch_size, 1, 1 << 20);
    f("noise_mean", noise_mean, -1.0, 1.0);
    f("noise_std", noise_std, 0.0, kInf);
    f("total_steps", total_steps, std::int64_t{0}, std::int64_t{1} << 40);
    f("hidden", hidden, 1, 1 << 16);
    f("output_init", output_init, 0.0, kInf);
    f("random_action_steps", random_action_steps, std::int64_t{0}, std::int64_t{1} << 40);
    f("preactivation_penalty", preactivation_penalty, 0.0, kInf);
    f("adam_beta1", adam_beta1, 0.0, 0.999999);
    f("adam_beta2", adam_beta2, 0.0, 0.999999999);
    f("adam_eps", adam_eps, 0.0, kInf);
  }
};

/// Run-level settings: seeds, budgets, outputs.
struct RunSettings {
  std::uint64_t seed = 1;
  std::uint64_t test_seed = 1000003;
  std::int64_t test_steps = 1500000;
  std::string out_dir = "runs/default";
  std::string checkpoint;
  int checkpoint_every_episodes = 500;
  int episodes_log = 0;
  int parallel = 1;
  int verbose = 1;
  std::vector<double> sweep_weights = {0.0, 0.00075, 0.0015, 0.003, 0.0075, 0.015};

  template <class Visitor>
  void visit(Visitor&& f) {
    f("seed", seed, std::uint64_t{0}, std::numeric_limits<std::uint64_t>::max());
    f("test_seed", test_seed, std::uint64_t{0}, std::numeric_limits<std::uint64_t>::max());
    f("test_steps", test_steps, std::int64_t{0}, std::int64_t{1} << 40);
    f("out_dir", out_dir);
    f("checkpoint", checkpoint);
    f("checkpoint_every_episodes", checkpoint_every_episodes, 0, 1 << 30);
    f("episodes_log", episodes_log, 0, 1 << 30);
    f("parallel", parallel, 1, 1024);
    f("verbose", verbose, 0, 3);
    f("sweep_weights", sweep_weights);
  }
};

struct RunConfig {
  EnvConfig env;
  TrafficConfig traffic;
  RewardWeights reward;
  DdpgConfig agent;
  RunSettings run;
};

/// Raised for malformed or out-of-range configuration. `what()` lists every
/// offending field, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
      if (!out.empty()) out += '\n';
      out += l;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

namespace config_detail {

using nlohmann::json;

template <class T>
std::string fmt_bound(T v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Writer {
  json& out;
  template <class T, class B>
  void operator()(const char* name, const T& value, B, B) { out[name] = value; }
  template <class T>
  void operator()(const char* name, const T& value) { out[name] = value; }
};

struct Reader {
  const json& in;
  std::string block;
  std::vector<std::string>& problems;

  template <class T, class B>
  void operator()(const char* name, T& value, B, B) { read(name, value); }
  template <class T>
  void operator()(const char* name, T& value) { read(name, value); }

  template <class T>
  void read(const char* name, T& value) {
    auto it = in.find(name);
    if (it == in.end()) return;
    try {
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_unsigned()) {
            value = it->template get<T>();
          } else if (it->template get<std::int64_t>() < 0) {
            throw std::invalid_argument("expected a non-negative integer");
          } else {
            value = static_cast<T>(it->template get<std::int64_t>());
          }
        } else {
          value = it->template get<T>();
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected a number");
        value = it->template get<T>();
      } else {
        value = it->template get<T>();
      }
    } catch (const std::exception& e) {
      problems.push_back(block + "." + name + ": " + e.what());
    }
  }
};

struct Checker {
  std::string block;
  std::vector<std::string>& problems;

  template <class T, class B>
  void operator()(const char* name, const T& value, B lo, B hi) {
    const bool finite = !std::is_floating_point_v<T> || std::isfinite(static_cast<double>(value));
    if (!finite || value < static_cast<T>(lo) || value > static_cast<T>(hi)) {
      problems.push_back(block + "." + name + " = " + fmt_bound(value) + " is outside the allowed range [" +
                         fmt_bound(lo) + ", " + fmt_bound(hi) + "]");
    }
  }
  template <class T>
  void operator()(const char*, const T&) {}
};

struct Names {
  std::vector<std::string>& names;
  template <class T, class B>
  void operator()(const char* name, T&, B, B) { names.emplace_back(name); }
  template <class T>
  void operator()(const char* name, T&) { names.emplace_back(name); }
};

template <class Block>
void read_block(const json& root, const char* key, Block& block, std::vector<std::string>& problems) {
  auto it = root.find(key);
  if (it == root.end()) return;
  if (!it->is_object()) {
    problems.push_back(std::string(key) + ": expected an object");
    return;
  }
  std::vector<std::string> known;
  block.visit(Names{known});
  for (const auto& [name, _] : it->items()) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      problems.push_back(std::string(key) + "." + name + ": unknown field");
    }
  }
  block.visit(Reader{*it, key, problems});
}

template <class Block>
void check_block(const char* key, Block block, std::vector<std::string>& problems) {
  block.visit(Checker{key, problems});
}

template <class Block>
json write_block(Block block) {
  json out = json::object();
  block.visit(Writer{out});
  return out;
}

}  // namespace config_detail

/// Field-level validation. Returns one message per problem; empty when valid.
inline std::vector<std::string> validate(const RunConfig& cfg) {
  using namespace config_detail;
  std::vector<std::string> problems;
  check_block("env", cfg.env, problems);
  check_block("traffic", cfg.traffic, problems);
  check_block("reward", cfg.reward, problems);
  check_block("agent", cfg.agent, problems);
  check_block("run", cfg.run, problems);

  if (!(cfg.env.control_zone_start > cfg.env.merge_point && cfg.env.merge_point > cfg.env.control_zone_end)) {
    problems.push_back("env: control_zone_start > merge_point > control_zone_end must hold");
  }
  if (cfg.env.v_init_max < cfg.env.v_init_min) {
    problems.push_back("env.v_init_max must be >= env.v_init_min");
  }
  if (cfg.env.junction_length > cfg.env.control_zone_start) {
    problems.push_back("env.junction_length must not exceed env.control_zone_start");
  }
  if (cfg.traffic.gamma_max < cfg.traffic.gamma_min) {
    problems.push_back("traffic.gamma_max must be >= traffic.gamma_min");
  }
  if (cfg.traffic.headway_max < cfg.traffic.headway_min) {
    problems.push_back("traffic.headway_max must be >= traffic.headway_min");
  }
  if (cfg.traffic.emergency_decel > cfg.traffic.accel_min) {
    problems.push_back("traffic.emergency_decel must be <= traffic.accel_min");
  }
  if (std::abs(cfg.reward.collision_penalty) <= std::abs(cfg.reward.stop_penalty)) {
    problems.push_back("reward.collision_penalty must be larger in magnitude than reward.stop_penalty");
  }
  if (cfg.run.sweep_weights.empty()) {
    problems.push_back("run.sweep_weights must not be empty");
  }
  for (double w : cfg.run.sweep_weights) {
    if (!std::isfinite(w) || w < 0.0) {
      problems.push_back("run.sweep_weights: every weight must be finite and >= 0");
      break;
    }
  }
  return problems;
}

/// Parses a config document. Missing fields keep their defaults; unknown
/// fields and out-of-range values raise ConfigError.
inline RunConfig config_from_json(const nlohmann::json& root) {
  using namespace config_detail;
  if (!root.is_object()) throw ConfigError({"config: top level must be an object"});
  RunConfig cfg;
  std::vector<std::string> problems;
  for (const auto& [key, _] : root.items()) {
    if (key != "env" && key != "traffic" && key != "reward" && key != "agent" && key != "run") {
      problems.push_back(key + ": unknown block");
    }
  }
  read_block(root, "env", cfg.env, problems);
  read_block(root, "traffic", cfg.traffic, problems);
  read_block(root, "reward", cfg.reward, problems);
  read_block(root, "agent", cfg.agent, problems);
  read_block(root, "run", cfg.run, problems);
  auto invalid = validate(cfg);
  problems.insert(problems.end(), invalid.begin(), invalid.end());
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  using namespace config_detail;
  nlohmann::json root;
  root["env"] = write_block(cfg.env);
  root["traffic"] = write_block(cfg.traffic);
  root["reward"] = write_block(cfg.reward);
  root["agent"] = write_block(cfg.agent);
  root["run"] = write_block(cfg.run);
  return root;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({"config: parse error in '" + path + "': " + e.what()});
  }
  return config_from_json(root);
}

inline void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace onramp

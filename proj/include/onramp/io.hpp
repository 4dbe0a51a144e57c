#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>

#include "onramp/env.hpp"
#include "onramp/train.hpp"

namespace onramp {

/// Shortest round-trip decimal representation.
inline std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline constexpr const char* kTrainingLogHeader = "episode,steps,undiscounted_reward,outcome";

inline void write_training_log_row(std::ostream& out, const EpisodeLogRow& row) {
  out << row.episode << ',' << row.steps << ',' << fmt(row.undiscounted_reward) << ',' << to_string(row.outcome)
      << '\n';
}

inline void write_training_log(const std::filesystem::path& path, std::span<const EpisodeLogRow> rows) {
  auto out = open_output(path);
  out << kTrainingLogHeader << '\n';
  for (const auto& row : rows) write_training_log_row(out, row);
}

/// Per-step trajectory rows. `is_virtual` is a bitmask over the neighbor
/// slots: 1 = p2, 2 = p1, 4 = f1, 8 = f2.
class TrajectoryWriter {
 public:
  static constexpr const char* kHeader =
      "episode,step,t,d_m,v_m,a_m,jerk,d_p2,v_p2,d_p1,v_p1,d_f1,v_f1,d_f2,v_f2,"
      "r_total,r_m,r_b,r_j,r_terminal,done,outcome,is_virtual";

  explicit TrajectoryWriter(const std::filesystem::path& path) : out_(open_output(path)) { out_ << kHeader << '\n'; }

  void write(std::int64_t episode, int step, double dt, const StepResult& res) {
    const Observation& o = res.observation;
    out_ << episode << ',' << step << ',' << fmt(step * dt) << ',' << fmt(res.ego.d) << ',' << fmt(res.ego.v) << ','
         << fmt(res.ego.a) << ',' << fmt(res.jerk);
    for (auto slot : {Observation::kDp2, Observation::kVp2, Observation::kDp1, Observation::kVp1, Observation::kDf1,
                      Observation::kVf1, Observation::kDf2, Observation::kVf2}) {
      out_ << ',' << fmt(o[slot]);
    }
    out_ << ',' << fmt(res.reward.total()) << ',' << fmt(res.reward.midway) << ',' << fmt(res.reward.braking) << ','
         << fmt(res.reward.jerk) << ',' << fmt(res.reward.terminal) << ',' << (res.done ? 1 : 0) << ','
         << (res.outcome ? to_string(res.outcome->kind) : std::string_view{}) << ','
         << res.neighbors.virtual_mask() << '\n';
  }

 private:
  std::ofstream out_;
};

/// `spawns.csv` sidecar: one row per main-road vehicle entering the road.
/// `t` is relative to the episode start, so warm-up spawns are negative.
class SpawnWriter {
 public:
  static constexpr const char* kHeader = "episode,t,id,v0,T";

  explicit SpawnWriter(const std::filesystem::path& path) : out_(open_output(path)) { out_ << kHeader << '\n'; }

  void write(std::int64_t episode, const MergeEnv& env) {
    const double dt = env.config().dt;
    for (const auto& s : env.traffic().spawns()) {
      out_ << episode << ',' << fmt(static_cast<double>(s.step - env.episode_start_step()) * dt) << ',' << s.id << ','
           << fmt(s.desired_speed) << ',' << fmt(s.time_headway) << '\n';
    }
  }

 private:
  std::ofstream out_;
};

}  // namespace onramp

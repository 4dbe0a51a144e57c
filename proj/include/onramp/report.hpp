#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "onramp/eval.hpp"
#include "onramp/io.hpp"

namespace onramp {

inline constexpr const char* kMetricsCsvHeader =
    "w_j,collision_rate,avg_jerk,avg_accel,avg_velocity,merge_ahead_rate,merge_behind_rate,stops,episodes";

inline std::string metrics_csv_row(double w_j, const TestMetrics& m) {
  return fmt(w_j) + ',' + fmt(m.avg_collision_rate) + ',' + fmt(m.avg_jerk) + ',' + fmt(m.avg_accel) + ',' +
         fmt(m.avg_velocity) + ',' + fmt(m.merge_ahead_rate) + ',' + fmt(m.merge_behind_rate) + ',' +
         std::to_string(m.stop_count) + ',' + std::to_string(m.episode_count);
}

inline nlohmann::json metrics_to_json(double w_j, const TestMetrics& m) {
  return {
      {"w_j", w_j},
      {"valid", m.valid},
      {"collision_rate", m.avg_collision_rate},
      {"avg_jerk", m.avg_jerk},
      {"avg_accel", m.avg_accel},
      {"avg_velocity", m.avg_velocity},
      {"merge_ahead_rate", m.merge_ahead_rate},
      {"merge_behind_rate", m.merge_behind_rate},
      {"stops", m.stop_count},
      {"collisions", m.collision_count},
      {"successes", m.success_count},
      {"truncated", m.truncated_count},
      {"episodes", m.episode_count},
      {"steps", m.steps},
  };
}

inline void write_metrics(const std::filesystem::path& dir, double w_j, const TestMetrics& m) {
  {
    auto out = open_output(dir / "metrics.json");
    out << metrics_to_json(w_j, m).dump(2) << '\n';
  }
  auto out = open_output(dir / "metrics.csv");
  out << kMetricsCsvHeader << '\n' << metrics_csv_row(w_j, m) << '\n';
}

inline void write_pareto_table(const std::filesystem::path& path, std::span<const ParetoPoint> points) {
  auto out = open_output(path);
  out << kMetricsCsvHeader << ",status\n";
  for (const auto& p : points) {
    std::string status = p.status;
    for (char& c : status) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    out << metrics_csv_row(p.w_j, p.metrics) << ',' << status << '\n';
  }
}

}  // namespace onramp

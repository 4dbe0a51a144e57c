#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace onramp {

/// Longitudinal state of one road user. `d` is the distance from the front
/// bumper to the merging point: positive upstream, negative past it.
struct VehicleState {
  std::int64_t id = -1;
  double d = 0.0;
  double v = 0.0;
  double a = 0.0;
  double length = 5.0;
  double desired_speed = 0.0;
  bool is_virtual = false;
};

/// The merging vehicle. `prev_a` is the acceleration applied on the
/// previous control step and is what jerk is measured against.
struct EgoState {
  double d = 0.0;
  double v = 0.0;
  double a = 0.0;
  double prev_a = 0.0;
  double length = 5.0;

  bool on_main_road() const { return d <= 0.0; }
};

enum class NeighborRole { kP2, kP1, kF1, kF2 };

struct Neighbors {
  VehicleState p2;
  VehicleState p1;
  VehicleState f1;
  VehicleState f2;

  /// Bit 0..3 set when p2, p1, f1, f2 respectively is virtual.
  unsigned virtual_mask() const {
    return (p2.is_virtual ? 1u : 0u) | (p1.is_virtual ? 2u : 0u) |
           (f1.is_virtual ? 4u : 0u) | (f2.is_virtual ? 8u : 0u);
  }
};

/// Five-vehicle state vector, physical units, fixed slot order:
/// d_p2, v_p2, d_p1, v_p1, d_m, v_m, a_m, d_f1, v_f1, d_f2, v_f2.
struct Observation {
  static constexpr std::size_t kSize = 11;
  enum Slot : std::size_t {
    kDp2, kVp2, kDp1, kVp1, kDm, kVm, kAm, kDf1, kVf1, kDf2, kVf2
  };

  std::array<double, kSize> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const Observation&) const = default;
};

enum class OutcomeKind { kSuccess, kCollision, kStop, kTruncated };

inline std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kSuccess: return "success";
    case OutcomeKind::kCollision: return "collision";
    case OutcomeKind::kStop: return "stop";
    case OutcomeKind::kTruncated: return "truncated";
  }
  return "unknown";
}

/// Environment-side summary of a finished episode. Merge classification is
/// done separately by the evaluator.
struct EpisodeOutcome {
  OutcomeKind kind = OutcomeKind::kTruncated;
  int steps = 0;
  double mean_abs_jerk = 0.0;
  double mean_abs_accel = 0.0;
  double mean_velocity = 0.0;
};

struct RewardBreakdown {
  double midway = 0.0;    // r_m
  double braking = 0.0;   // r_b
  double jerk = 0.0;      // r_j
  double terminal = 0.0;

  double total() const { return midway + braking + jerk + terminal; }
};

}  // namespace onramp

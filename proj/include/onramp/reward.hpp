#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "onramp/config.hpp"
#include "onramp/types.hpp"

namespace onramp {

/// Signed asymmetry between the front and rear bumper-to-bumper gaps,
/// (front - rear) / (front + rear), saturated to [-1, 1]. Zero at equal
/// gaps, magnitude one at contact with either neighbor.
inline double midway_ratio(double d_p1, double d_m, double d_f1, double length_p1, double length_m) {
  const double front_gap = std::abs(d_p1 - d_m) - length_p1;
  const double rear_gap = std::abs(d_m - d_f1) - length_m;
  const double sum = front_gap + rear_gap;
  if (!(sum > 0.0)) return front_gap >= rear_gap ? 1.0 : -1.0;
  return std::clamp((front_gap - rear_gap) / sum, -1.0, 1.0);
}

inline double merge_midway_reward(double w, double v_p1, double v_f1, double v_m, const RewardWeights& weights) {
  const double speed_error = std::abs(0.5 * (v_p1 + v_f1) - v_m) / weights.delta_v_max;
  return -weights.w_m * (std::abs(w) + speed_error);
}

/// Penalty on the first follower's braking, normalized by the larger
/// magnitude of the merging vehicle's acceleration bounds.
inline double braking_penalty(double a_f1, const RewardWeights& weights, double a_min = -4.5, double a_max = 2.6) {
  if (!(a_f1 < 0.0)) return 0.0;
  return -weights.w_b * std::abs(a_f1) / std::max(std::abs(a_min), a_max);
}

inline double jerk(double a, double prev_a, double dt = 0.1) { return (a - prev_a) / dt; }

inline double jerk_penalty(double a, double prev_a, const RewardWeights& weights, double dt = 0.1) {
  if (weights.w_j == 0.0) return 0.0;
  return -weights.w_j * std::abs(jerk(a, prev_a, dt)) / weights.j_max;
}

inline double terminal_reward(std::optional<OutcomeKind> outcome, const RewardWeights& weights) {
  if (!outcome) return 0.0;
  switch (*outcome) {
    case OutcomeKind::kStop: return weights.stop_penalty;
    case OutcomeKind::kCollision: return weights.collision_penalty;
    case OutcomeKind::kSuccess: return weights.success_reward;
    case OutcomeKind::kTruncated: return 0.0;
  }
  return 0.0;
}

/// Per-step reward from the post-step state. `a_f1` is the acceleration the
/// first follower applied on this step.
inline RewardBreakdown compute_reward(const EgoState& ego, const Neighbors& nb, double a_f1,
                                      std::optional<OutcomeKind> outcome, const RewardWeights& weights,
                                      const EnvConfig& env) {
  RewardBreakdown r;
  if (ego.d <= env.merge_point && ego.d >= env.control_zone_end) {
    const double w = midway_ratio(nb.p1.d, ego.d, nb.f1.d, nb.p1.length, ego.length);
    r.midway = merge_midway_reward(w, nb.p1.v, nb.f1.v, ego.v, weights);
  }
  if (!nb.f1.is_virtual && ego.d <= env.control_zone_start && ego.d >= env.control_zone_end) {
    r.braking = braking_penalty(a_f1, weights, env.a_min, env.a_max);
  }
  r.jerk = jerk_penalty(ego.a, ego.prev_a, weights, env.dt);
  r.terminal = terminal_reward(outcome, weights);
  return r;
}

}  // namespace onramp

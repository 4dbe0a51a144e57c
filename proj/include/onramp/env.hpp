#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "onramp/config.hpp"
#include "onramp/reward.hpp"
#include "onramp/traffic.hpp"
#include "onramp/types.hpp"

namespace onramp {

/// Explicit Euler: position advances with the pre-update velocity.
inline EgoState integrate_ego(const EgoState& ego, double a, double dt = 0.1) {
  EgoState next = ego;
  next.d = ego.d - ego.v * dt;
  next.v = std::max(0.0, ego.v + a * dt);
  next.prev_a = ego.a;
  next.a = a;
  return next;
}

/// Placeholder neighbor on the sensing boundary, moving at the speed limit.
/// Observation-only: never simulated and never collided with.
inline VehicleState make_virtual(NeighborRole role, double ego_d, const EnvConfig& env = {}) {
  VehicleState v;
  v.id = -1 - static_cast<std::int64_t>(role);
  const bool preceding = role == NeighborRole::kP1 || role == NeighborRole::kP2;
  v.d = preceding ? ego_d - env.sensing_radius : ego_d + env.sensing_radius;
  v.v = env.speed_limit;
  v.a = 0.0;
  v.length = env.vehicle_length;
  v.desired_speed = env.speed_limit;
  v.is_virtual = true;
  return v;
}

/// Two nearest preceding (d <= projection) and two nearest following
/// (d > projection) real vehicles; a vehicle level with the projection
/// counts as preceding. Missing slots are filled with virtual vehicles.
inline Neighbors find_neighbors(double ego_d, std::span<const VehicleState> vehicles, const EnvConfig& env = {}) {
  const VehicleState* p1 = nullptr;
  const VehicleState* p2 = nullptr;
  const VehicleState* f1 = nullptr;
  const VehicleState* f2 = nullptr;
  for (const auto& v : vehicles) {
    if (v.is_virtual) continue;
    if (v.d <= ego_d) {
      if (!p1 || v.d > p1->d) {
        p2 = p1;
        p1 = &v;
      } else if (!p2 || v.d > p2->d) {
        p2 = &v;
      }
    } else {
      if (!f1 || v.d < f1->d) {
        f2 = f1;
        f1 = &v;
      } else if (!f2 || v.d < f2->d) {
        f2 = &v;
      }
    }
  }
  Neighbors nb;
  nb.p2 = p2 ? *p2 : make_virtual(NeighborRole::kP2, ego_d, env);
  nb.p1 = p1 ? *p1 : make_virtual(NeighborRole::kP1, ego_d, env);
  nb.f1 = f1 ? *f1 : make_virtual(NeighborRole::kF1, ego_d, env);
  nb.f2 = f2 ? *f2 : make_virtual(NeighborRole::kF2, ego_d, env);
  return nb;
}

inline Observation build_observation(const EgoState& ego, const Neighbors& nb) {
  Observation o;
  o[Observation::kDp2] = nb.p2.d;
  o[Observation::kVp2] = nb.p2.v;
  o[Observation::kDp1] = nb.p1.d;
  o[Observation::kVp1] = nb.p1.v;
  o[Observation::kDm] = ego.d;
  o[Observation::kVm] = ego.v;
  o[Observation::kAm] = ego.a;
  o[Observation::kDf1] = nb.f1.d;
  o[Observation::kVf1] = nb.f1.v;
  o[Observation::kDf2] = nb.f2.d;
  o[Observation::kVf2] = nb.f2.v;
  return o;
}

/// Real vehicles within the sensing radius of the merging vehicle's
/// projection.
inline std::vector<VehicleState> sense(const EgoState& ego, std::span<const MainRoadVehicle> vehicles,
                                       const EnvConfig& env) {
  std::vector<VehicleState> out;
  out.reserve(vehicles.size());
  for (const auto& v : vehicles) {
    if (std::abs(v.state.d - ego.d) <= env.sensing_radius) out.push_back(v.state);
  }
  return out;
}

/// Gap check against the immediate real neighbors. Only possible once the
/// merging vehicle is inside the junction area or on the main road.
inline bool detect_collision(const EgoState& ego, std::span<const VehicleState> vehicles, const EnvConfig& env = {}) {
  if (ego.d > env.merge_point + env.junction_length) return false;
  const Neighbors nb = find_neighbors(ego.d, vehicles, env);
  if (!nb.p1.is_virtual && std::abs(nb.p1.d - ego.d) - nb.p1.length < env.collision_gap) return true;
  if (!nb.f1.is_virtual && std::abs(ego.d - nb.f1.d) - ego.length < env.collision_gap) return true;
  return false;
}

/// Collision takes precedence over stop, stop over success.
inline std::optional<OutcomeKind> check_termination(const EgoState& ego, std::span<const VehicleState> vehicles,
                                                    const EnvConfig& env = {}) {
  if (detect_collision(ego, vehicles, env)) return OutcomeKind::kCollision;
  if (ego.v == 0.0) return OutcomeKind::kStop;
  if (ego.d <= env.control_zone_end) return OutcomeKind::kSuccess;
  return std::nullopt;
}

struct StepResult {
  Observation observation;
  RewardBreakdown reward;
  bool done = false;
  std::optional<EpisodeOutcome> outcome;
  Neighbors neighbors;
  EgoState ego;
  double jerk = 0.0;
};

/// Single-lane taper on-ramp merge. One instance is strictly sequential;
/// separate instances share nothing.
class MergeEnv {
 public:
  MergeEnv(const EnvConfig& env, const TrafficConfig& traffic, const RewardWeights& weights)
      : env_(env), weights_(weights), traffic_(traffic, env) {}

  explicit MergeEnv(const RunConfig& cfg) : MergeEnv(cfg.env, cfg.traffic, cfg.reward) {}

  /// Fresh road: the main road is filled and warmed up without the merging
  /// vehicle, then the merging vehicle is placed at the control-zone start.
  Observation reset(std::uint64_t seed) {
    rng_.seed(seed);
    traffic_.clear();
    for (int i = 0; i < env_.prefill_steps + env_.warmup_steps; ++i) traffic_.step(rng_, nullptr);
    episode_start_step_ = traffic_.step_count();
    std::uniform_real_distribution<double> speed(env_.v_init_min, env_.v_init_max);
    ego_ = EgoState{};
    ego_.d = env_.control_zone_start;
    ego_.v = speed(rng_);
    ego_.length = env_.vehicle_length;
    steps_ = 0;
    done_ = false;
    active_ = true;
    sum_abs_jerk_ = sum_abs_accel_ = sum_velocity_ = 0.0;
    last_neighbors_ = find_neighbors(ego_.d, sensed(), env_);
    return build_observation(ego_, last_neighbors_);
  }

  StepResult step(double action) {
    if (!active_) throw std::logic_error("MergeEnv::step called before reset");
    if (done_) throw std::logic_error("MergeEnv::step called on a terminated episode");
    if (!std::isfinite(action)) throw std::invalid_argument("MergeEnv::step: non-finite action");

    const double a = std::clamp(action, env_.a_min, env_.a_max);
    const EgoState before = ego_;
    traffic_.step(rng_, &before);
    ego_ = integrate_ego(before, a, env_.dt);
    ++steps_;

    const std::vector<VehicleState> all = all_vehicles();
    std::optional<OutcomeKind> kind = check_termination(ego_, all, env_);
    if (!kind && steps_ >= env_.max_steps) kind = OutcomeKind::kTruncated;

    StepResult out;
    out.neighbors = find_neighbors(ego_.d, sensed(), env_);
    out.observation = build_observation(ego_, out.neighbors);
    out.reward = compute_reward(ego_, out.neighbors, out.neighbors.f1.a, kind, weights_, env_);
    out.ego = ego_;
    out.jerk = jerk(ego_.a, ego_.prev_a, env_.dt);

    sum_abs_jerk_ += std::abs(out.jerk);
    sum_abs_accel_ += std::abs(ego_.a);
    sum_velocity_ += ego_.v;
    last_neighbors_ = out.neighbors;

    if (kind) {
      done_ = true;
      EpisodeOutcome o;
      o.kind = *kind;
      o.steps = steps_;
      o.mean_abs_jerk = sum_abs_jerk_ / steps_;
      o.mean_abs_accel = sum_abs_accel_ / steps_;
      o.mean_velocity = sum_velocity_ / steps_;
      out.outcome = o;
    }
    out.done = done_;
    return out;
  }

  std::vector<VehicleState> sensed() const { return sense(ego_, traffic_.vehicles(), env_); }

  std::vector<VehicleState> all_vehicles() const {
    std::vector<VehicleState> out;
    out.reserve(traffic_.vehicles().size());
    for (const auto& v : traffic_.vehicles()) out.push_back(v.state);
    return out;
  }

  const EgoState& ego() const { return ego_; }
  const Neighbors& neighbors() const { return last_neighbors_; }
  const Traffic& traffic() const { return traffic_; }
  const EnvConfig& config() const { return env_; }
  const RewardWeights& weights() const { return weights_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }
  std::int64_t episode_start_step() const { return episode_start_step_; }

  /// Test hooks for constructing specific scenes.
  Traffic& mutable_traffic() { return traffic_; }
  void set_ego(const EgoState& ego) {
    ego_ = ego;
    active_ = true;
    done_ = false;
  }

 private:
  EnvConfig env_;
  RewardWeights weights_;
  Traffic traffic_;
  std::mt19937_64 rng_;
  EgoState ego_;
  Neighbors last_neighbors_;
  int steps_ = 0;
  bool done_ = false;
  bool active_ = false;
  std::int64_t episode_start_step_ = 0;
  double sum_abs_jerk_ = 0.0;
  double sum_abs_accel_ = 0.0;
  double sum_velocity_ = 0.0;
};

}  // namespace onramp

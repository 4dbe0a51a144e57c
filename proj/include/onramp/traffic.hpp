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
#include "onramp/types.hpp"

namespace onramp {

struct IdmParams {
  double desired_speed = 29.06;
  double time_headway = 1.2;
  double min_gap = 2.0;
  double max_accel = 1.5;
  double comfortable_decel = 2.0;
  double delta = 4.0;
};

struct AccelLimits {
  double normal_min = -4.5;
  double max = 2.6;
  double emergency_min = -9.0;
};

inline AccelLimits accel_limits(const TrafficConfig& cfg) {
  return {cfg.accel_min, cfg.accel_max, cfg.emergency_decel};
}

/// Raw IDM demand. Pass an infinite gap for the free-road case.
/// `approach_rate` is own speed minus leader speed.
inline double idm_demand(double v, const IdmParams& p, double gap, double approach_rate) {
  const double free_term = 1.0 - std::pow(v / p.desired_speed, p.delta);
  if (std::isinf(gap)) return p.max_accel * free_term;
  if (!(gap > 0.0)) {
    throw std::domain_error("idm_demand: non-positive gap to a real leader");
  }
  const double dynamic =
      v * p.time_headway + v * approach_rate / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
  const double s_star = p.min_gap + std::max(0.0, dynamic);
  const double ratio = s_star / gap;
  return p.max_accel * (free_term - ratio * ratio);
}

/// Applies the acceleration envelope. Demands harder than the normal braking
/// floor are treated as emergencies and may brake down to `emergency_min`.
inline double emergency_braking(double demand, const AccelLimits& limits) {
  if (demand < limits.normal_min) return std::max(demand, limits.emergency_min);
  return std::min(demand, limits.max);
}

inline double idm_acceleration(double v, const IdmParams& p, double gap, double approach_rate,
                               const AccelLimits& limits = {}) {
  return emergency_braking(idm_demand(v, p, gap, approach_rate), limits);
}

struct MainRoadVehicle {
  VehicleState state;
  IdmParams idm;
  bool emergency = false;  // braked below the normal floor on the last step
};

struct LeaderGap {
  double gap = kInf;
  double approach_rate = 0.0;
  bool is_ego = false;
};

/// Leader of `vehicles[index]`. `vehicles` is ordered front-first (ascending
/// d). The merging vehicle is a candidate leader only once it is inside the
/// junction area or on the main road, and only for the main-road vehicle
/// directly behind its projection.
inline std::optional<LeaderGap> select_leader(std::span<const MainRoadVehicle> vehicles,
                                              std::size_t index, const EgoState* ego,
                                              double junction_length) {
  const VehicleState& self = vehicles[index].state;
  std::optional<LeaderGap> best;
  if (index > 0) {
    const VehicleState& ahead = vehicles[index - 1].state;
    best = LeaderGap{self.d - ahead.d - ahead.length, self.v - ahead.v, false};
  }
  if (ego != nullptr && ego->d <= junction_length && self.d > ego->d &&
      (index == 0 || vehicles[index - 1].state.d <= ego->d)) {
    const double gap = self.d - ego->d - ego->length;
    if (!best || gap < best->gap) best = LeaderGap{gap, self.v - ego->v, true};
  }
  return best;
}

struct SpawnEvent {
  std::int64_t step = 0;
  std::int64_t id = 0;
  double desired_speed = 0.0;
  double time_headway = 0.0;
};

/// Main-road traffic on a single lane. Vehicles enter at `spawn_distance`
/// and leave once past `-despawn_distance`.
class Traffic {
 public:
  Traffic(const TrafficConfig& traffic, const EnvConfig& env) : cfg_(traffic), env_(env) {}

  void clear() {
    vehicles_.clear();
    spawns_.clear();
    step_count_ = 0;
    next_id_ = 0;
  }

  /// Bernoulli spawn trial, independent of road occupancy.
  bool spawn_attempt(std::mt19937_64& rng) const {
    return std::bernoulli_distribution(cfg_.spawn_probability)(rng);
  }

  IdmParams draw_params(std::mt19937_64& rng) const {
    std::normal_distribution<double> gamma(cfg_.gamma_mean, cfg_.gamma_std);
    std::uniform_real_distribution<double> headway(cfg_.headway_min, cfg_.headway_max);
    IdmParams p;
    p.desired_speed = env_.speed_limit * std::clamp(gamma(rng), cfg_.gamma_min, cfg_.gamma_max);
    p.time_headway = headway(rng);
    p.min_gap = cfg_.min_gap;
    p.max_accel = cfg_.max_accel;
    p.comfortable_decel = cfg_.comfortable_decel;
    p.delta = cfg_.delta;
    return p;
  }

  /// One spawn opportunity. Returns the new vehicle when one entered the
  /// road; nothing when the trial failed or the entry gap was unsafe.
  std::optional<VehicleState> spawn_step(std::mt19937_64& rng) {
    if (!spawn_attempt(rng)) return std::nullopt;
    MainRoadVehicle veh;
    veh.idm = draw_params(rng);
    double speed = veh.idm.desired_speed;
    if (!vehicles_.empty()) {
      const VehicleState& back = vehicles_.back().state;
      const double gap = env_.spawn_distance - back.d - back.length;
      if (gap < veh.idm.min_gap + env_.vehicle_length) return std::nullopt;
      speed = std::min(speed, (gap - veh.idm.min_gap) / veh.idm.time_headway);
    }
    veh.state.id = next_id_++;
    veh.state.d = env_.spawn_distance;
    veh.state.v = speed;
    veh.state.a = 0.0;
    veh.state.length = env_.vehicle_length;
    veh.state.desired_speed = veh.idm.desired_speed;
    vehicles_.push_back(veh);
    spawns_.push_back({step_count_, veh.state.id, veh.idm.desired_speed, veh.idm.time_headway});
    return veh.state;
  }

  /// Advances every vehicle by one explicit Euler step, then removes
  /// departed vehicles and runs the once-per-interval spawn trial. `ego` is
  /// null when no merging vehicle is on the road.
  void step(std::mt19937_64& rng, const EgoState* ego) {
    const AccelLimits limits = accel_limits(cfg_);
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      auto& veh = vehicles_[i];
      const auto leader = select_leader(vehicles_, i, ego, env_.junction_length);
      const double demand = leader ? idm_demand(veh.state.v, veh.idm, leader->gap, leader->approach_rate)
                                   : idm_demand(veh.state.v, veh.idm, kInf, 0.0);
      veh.state.a = emergency_braking(demand, limits);
      veh.emergency = demand < limits.normal_min;
    }
    for (auto& veh : vehicles_) {
      veh.state.d -= veh.state.v * env_.dt;
      veh.state.v = std::max(0.0, veh.state.v + veh.state.a * env_.dt);
    }
    std::erase_if(vehicles_, [&](const MainRoadVehicle& v) { return v.state.d < -env_.despawn_distance; });
    if (step_count_ % cfg_.spawn_interval_steps == 0) spawn_step(rng);
    ++step_count_;
  }

  const std::vector<MainRoadVehicle>& vehicles() const { return vehicles_; }
  const std::vector<SpawnEvent>& spawns() const { return spawns_; }
  void clear_spawn_log() { spawns_.clear(); }
  std::int64_t step_count() const { return step_count_; }

  /// Test hook: place a vehicle directly. Keeps front-first ordering.
  void insert(const VehicleState& state, const IdmParams& params) {
    MainRoadVehicle veh{state, params, false};
    veh.state.id = next_id_++;
    auto it = std::upper_bound(vehicles_.begin(), vehicles_.end(), state.d,
                               [](double d, const MainRoadVehicle& v) { return d < v.state.d; });
    vehicles_.insert(it, veh);
  }

 private:
  TrafficConfig cfg_;
  EnvConfig env_;
  std::vector<MainRoadVehicle> vehicles_;
  std::vector<SpawnEvent> spawns_;
  std::int64_t step_count_ = 0;
  std::int64_t next_id_ = 0;
};

}  // namespace onramp

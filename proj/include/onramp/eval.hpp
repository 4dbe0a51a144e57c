#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "onramp/config.hpp"
#include "onramp/ddpg.hpp"
#include "onramp/env.hpp"
#include "onramp/io.hpp"
#include "onramp/train.hpp"

namespace onramp {

enum class MergeEvent { kAhead, kBehind };

/// Tracks merging ahead of / behind the first following vehicle.
///
/// The anchor is the first real vehicle seen in the f1 slot while the
/// merging vehicle is on the ramp. Every change of the merging vehicle's
/// order relative to the anchor before the merge point is recorded as an
/// event; when the merge point is reached with no such change a single
/// event for the current order is emitted. Episodes that end before the
/// merge point produce no events.
class MergeClassifier {
 public:
  void reset() { *this = MergeClassifier{}; }

  void observe(double ego_d, const VehicleState& f1, std::span<const VehicleState> vehicles) {
    if (merged_) return;
    if (!anchor_) {
      if (!f1.is_virtual) {
        anchor_ = f1.id;
        ahead_ = true;
      }
    } else {
      for (const auto& v : vehicles) {
        if (v.id != *anchor_) continue;
        const bool ahead = ego_d < v.d;
        if (ahead != ahead_) {
          flips_.push_back(ahead ? MergeEvent::kAhead : MergeEvent::kBehind);
          ahead_ = ahead;
        }
        break;
      }
    }
    if (ego_d <= 0.0) {
      merged_ = true;
      events_ = flips_.empty() ? std::vector<MergeEvent>{ahead_ ? MergeEvent::kAhead : MergeEvent::kBehind} : flips_;
    }
  }

  bool merged() const { return merged_; }
  const std::vector<MergeEvent>& events() const { return events_; }

 private:
  std::optional<std::int64_t> anchor_;
  bool ahead_ = true;
  bool merged_ = false;
  std::vector<MergeEvent> flips_;
  std::vector<MergeEvent> events_;
};

/// One recorded step of an episode, enough to classify the merge.
struct MergeFrame {
  double ego_d = 0.0;
  VehicleState f1;
  std::vector<VehicleState> vehicles;
};

inline std::vector<MergeEvent> classify_merge(std::span<const MergeFrame> trajectory) {
  MergeClassifier c;
  for (const auto& f : trajectory) c.observe(f.ego_d, f.f1, f.vehicles);
  return c.events();
}

struct TestMetrics {
  double avg_collision_rate = 0.0;
  double avg_jerk = 0.0;
  double avg_accel = 0.0;
  double avg_velocity = 0.0;
  double merge_behind_rate = 0.0;
  double merge_ahead_rate = 0.0;
  std::int64_t episode_count = 0;
  std::int64_t stop_count = 0;
  std::int64_t collision_count = 0;
  std::int64_t success_count = 0;
  std::int64_t truncated_count = 0;
  std::int64_t steps = 0;
  bool valid = false;

  bool operator==(const TestMetrics&) const = default;
};

struct EpisodeRecord {
  EpisodeOutcome outcome;
  std::vector<MergeEvent> events;
};

/// Means of per-episode means; rates are counts over episodes.
inline TestMetrics aggregate_metrics(std::span<const EpisodeRecord> episodes) {
  TestMetrics m;
  m.episode_count = static_cast<std::int64_t>(episodes.size());
  if (episodes.empty()) return m;
  std::int64_t ahead = 0;
  std::int64_t behind = 0;
  for (const auto& e : episodes) {
    m.avg_jerk += e.outcome.mean_abs_jerk;
    m.avg_accel += e.outcome.mean_abs_accel;
    m.avg_velocity += e.outcome.mean_velocity;
    m.steps += e.outcome.steps;
    switch (e.outcome.kind) {
      case OutcomeKind::kCollision: ++m.collision_count; break;
      case OutcomeKind::kStop: ++m.stop_count; break;
      case OutcomeKind::kSuccess: ++m.success_count; break;
      case OutcomeKind::kTruncated: ++m.truncated_count; break;
    }
    for (auto ev : e.events) (ev == MergeEvent::kAhead ? ahead : behind) += 1;
  }
  const double n = static_cast<double>(m.episode_count);
  m.avg_jerk /= n;
  m.avg_accel /= n;
  m.avg_velocity /= n;
  m.avg_collision_rate = static_cast<double>(m.collision_count) / n;
  m.merge_ahead_rate = static_cast<double>(ahead) / n;
  m.merge_behind_rate = static_cast<double>(behind) / n;
  m.valid = true;
  return m;
}

/// Maps a physical observation to a physical acceleration command.
using Policy = std::function<double(const Observation&)>;

/// Deterministic policy from a trained actor; no exploration noise.
inline Policy actor_policy(const Mlp& actor, const EnvConfig& env) {
  const ObservationScale scale = observation_scale(env);
  return [actor, scale, a_min = env.a_min, a_max = env.a_max](const Observation& obs) {
    return denormalize_action(actor.forward(normalize_observation(obs, scale))(0, 0), a_min, a_max);
  };
}

struct TestResult {
  TestMetrics metrics;
  std::vector<EpisodeRecord> episodes;
};

struct TestLogging {
  std::filesystem::path dir;
  int episodes = 0;  // trajectory CSVs for the first this-many episodes
};

/// Runs whole episodes until at least `step_budget` steps have been taken.
/// Episode seeds are drawn from `seed`, so the same seed reproduces the
/// metrics exactly.
inline TestResult run_test(const Policy& policy, const RunConfig& cfg, std::int64_t step_budget, std::uint64_t seed,
                           const TestLogging* logging = nullptr) {
  TestResult out;
  MergeEnv env(cfg);
  std::mt19937_64 rng(seed);
  std::optional<SpawnWriter> spawns;
  if (logging && logging->episodes > 0) spawns.emplace(logging->dir / "spawns.csv");
  std::int64_t used = 0;
  while (used < step_budget) {
    const auto episode = static_cast<std::int64_t>(out.episodes.size());
    Observation obs = env.reset(rng());
    MergeClassifier classifier;
    classifier.observe(env.ego().d, env.neighbors().f1, env.all_vehicles());
    std::optional<TrajectoryWriter> traj;
    if (logging && episode < logging->episodes) {
      traj.emplace(logging->dir / ("trajectory_" + std::to_string(episode) + ".csv"));
    }
    while (true) {
      const StepResult res = env.step(policy(obs));
      ++used;
      classifier.observe(res.ego.d, res.neighbors.f1, env.all_vehicles());
      if (traj) traj->write(episode, env.steps(), cfg.env.dt, res);
      obs = res.observation;
      if (res.done) {
        out.episodes.push_back({*res.outcome, classifier.events()});
        break;
      }
    }
    if (spawns && episode < logging->episodes) spawns->write(episode, env);
  }
  out.metrics = aggregate_metrics(out.episodes);
  return out;
}

struct ParetoPoint {
  double w_j = 0.0;
  TestMetrics metrics;
  std::string status = "ok";
  std::vector<EpisodeLogRow> training_log;
};

/// Called after each sweep run finishes; receives the run's resolved config
/// and trained state (null on failure) so callers can persist artifacts.
using SweepRunHook = std::function<void(const RunConfig&, const TrainingState*, const ParetoPoint&)>;

/// Trains and tests one fresh policy per jerk weight. Runs are independent
/// and share the base seeds, so results do not depend on `parallel`. The
/// output is ordered by weight; a failed run is reported in its status.
inline std::vector<ParetoPoint> pareto_sweep(const RunConfig& base, std::vector<double> weights,
                                             std::int64_t train_steps, std::int64_t test_steps, int parallel = 1,
                                             const SweepRunHook& hook = {}) {
  if (weights.empty()) throw ConfigError({"run.sweep_weights must not be empty"});
  std::sort(weights.begin(), weights.end());
  std::vector<ParetoPoint> points(weights.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < weights.size(); i = next++) {
      RunConfig cfg = base;
      cfg.reward.w_j = weights[i];
      cfg.agent.total_steps = train_steps;
      ParetoPoint& p = points[i];
      p.w_j = weights[i];
      std::optional<Trainer> trainer;
      try {
        trainer.emplace(cfg);
        trainer->run(train_steps);
        p.training_log = trainer->log();
        p.metrics = run_test(actor_policy(trainer->state().agent.actor(), cfg.env), cfg, test_steps,
                             cfg.run.test_seed)
                        .metrics;
        if (!p.metrics.valid) p.status = "invalid: no test episodes";
      } catch (const std::exception& e) {
        p.status = std::string("failed: ") + e.what();
      }
      if (hook) {
        try {
          hook(cfg, trainer ? &trainer->state() : nullptr, p);
        } catch (const std::exception& e) {
          if (p.status == "ok") p.status = std::string("failed: ") + e.what();
        }
      }
    }
  };
  const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(weights.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return points;
}

}  // namespace onramp

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "onramp/config.hpp"
#include "onramp/ddpg.hpp"
#include "onramp/env.hpp"
#include "onramp/replay.hpp"

namespace onramp {

struct EpisodeLogRow {
  std::int64_t episode = 0;
  int steps = 0;
  double undiscounted_reward = 0.0;
  OutcomeKind outcome = OutcomeKind::kTruncated;

  bool operator==(const EpisodeLogRow&) const = default;
};

/// Everything needed to continue training exactly where it stopped.
struct TrainingState {
  DdpgAgent agent;
  ReplayBuffer replay;
  std::mt19937_64 rng;
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  std::int64_t updates = 0;

  explicit TrainingState(const DdpgConfig& cfg)
      : agent(cfg), replay(cfg.replay_capacity, kObsDim) {}
};

/// Fresh state: the master generator is seeded from `seed` and also drives
/// weight initialization, episode seeds, exploration and minibatch sampling.
inline TrainingState initial_state(const DdpgConfig& cfg, std::uint64_t seed) {
  TrainingState st(cfg);
  st.rng.seed(seed);
  st.agent.initialize(st.rng);
  return st;
}

/// DDPG training loop: one exploratory environment step (uniformly random
/// actions during the first `random_action_steps`), then one critic
/// update, one actor update and one soft target update once the replay
/// buffer holds a full minibatch. Episodes cut short by the step budget are
/// not logged.
class Trainer {
 public:
  using EpisodeCallback = std::function<void(const Trainer&, const EpisodeLogRow&)>;

  explicit Trainer(const RunConfig& cfg) : Trainer(cfg, initial_state(cfg.agent, cfg.run.seed)) {}

  Trainer(const RunConfig& cfg, TrainingState state)
      : cfg_(cfg), env_(cfg), state_(std::move(state)), scale_(observation_scale(cfg.env)) {}

  /// Trains until the global step counter reaches `total_steps`.
  void run(std::int64_t total_steps, const EpisodeCallback& on_episode = {}) {
    const auto& agent_cfg = cfg_.agent;
    Batch batch;
    while (state_.steps < total_steps) {
      Observation obs = env_.reset(state_.rng());
      Vector s = normalize_observation(obs, scale_);
      double episode_reward = 0.0;
      std::optional<OutcomeKind> kind;
      while (true) {
        const double u = state_.steps < agent_cfg.random_action_steps
                             ? std::uniform_real_distribution<double>(-1.0, 1.0)(state_.rng)
                             : explore_action(state_.agent.act(s), state_.rng, agent_cfg.noise_mean,
                                              agent_cfg.noise_std);
        const StepResult res = env_.step(denormalize_action(u, cfg_.env.a_min, cfg_.env.a_max));
        Vector s_next = normalize_observation(res.observation, scale_);
        const bool terminal = res.outcome && res.outcome->kind != OutcomeKind::kTruncated;
        const double r = res.reward.total();
        state_.replay.push({s.data(), static_cast<std::size_t>(s.size())}, u, r,
                           {s_next.data(), static_cast<std::size_t>(s_next.size())}, terminal);
        ++state_.steps;
        episode_reward += r;
        if (state_.replay.size() >= agent_cfg.batch_size) {
          state_.replay.gather(state_.replay.sample_indices(agent_cfg.batch_size, state_.rng), batch);
          state_.agent.train_step(batch);
          ++state_.updates;
        }
        s = std::move(s_next);
        if (res.done) {
          kind = res.outcome->kind;
          break;
        }
        if (state_.steps >= total_steps) break;
      }
      if (kind) {
        EpisodeLogRow row{state_.episodes, env_.steps(), episode_reward, *kind};
        ++state_.episodes;
        log_.push_back(row);
        if (on_episode) on_episode(*this, row);
      }
    }
  }

  const std::vector<EpisodeLogRow>& log() const { return log_; }
  const TrainingState& state() const { return state_; }
  TrainingState& state() { return state_; }
  const RunConfig& config() const { return cfg_; }

 private:
  RunConfig cfg_;
  MergeEnv env_;
  TrainingState state_;
  ObservationScale scale_;
  std::vector<EpisodeLogRow> log_;
};

}  // namespace onramp

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "onramp/config.hpp"
#include "onramp/mlp.hpp"
#include "onramp/replay.hpp"
#include "onramp/types.hpp"

namespace onramp {

inline constexpr int kObsDim = static_cast<int>(Observation::kSize);

struct ObservationScale {
  double distance = 200.0;
  double speed = 29.06;
  double accel = 4.5;
};

/// Physical observation to network input: distances over the sensing
/// radius, speeds over the speed limit, acceleration over |a_min|.
inline Vector normalize_observation(const Observation& obs, const ObservationScale& scale = {}) {
  Vector s(kObsDim);
  for (int i = 0; i < kObsDim; ++i) {
    double div = scale.speed;
    switch (i) {
      case Observation::kDp2:
      case Observation::kDp1:
      case Observation::kDm:
      case Observation::kDf1:
      case Observation::kDf2:
        div = scale.distance;
        break;
      case Observation::kAm:
        div = scale.accel;
        break;
      default:
        break;
    }
    s[i] = obs[static_cast<std::size_t>(i)] / div;
  }
  return s;
}

inline ObservationScale observation_scale(const EnvConfig& env) {
  return {env.sensing_radius, env.speed_limit, std::max(std::abs(env.a_min), env.a_max)};
}

/// [-1, 1] onto [a_min, a_max]; the defaults give a = -0.95 + 3.55 u.
inline double denormalize_action(double u, double a_min = -4.5, double a_max = 2.6) {
  return a_min + 0.5 * (u + 1.0) * (a_max - a_min);
}

inline double normalize_action(double a, double a_min = -4.5, double a_max = 2.6) {
  return 2.0 * (a - a_min) / (a_max - a_min) - 1.0;
}

/// Bellman regression target; `done` is the termination indicator.
inline double td_target(double r, double done, double gamma, double q_next) {
  return r + (1.0 - done) * gamma * q_next;
}

/// target <- tau * online + (1 - tau) * target, elementwise.
inline void soft_update(Vector& target, const Vector& online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("soft_update: shape mismatch");
  target = tau * online + (1.0 - tau) * target;
}

inline void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_shape(online)) throw std::invalid_argument("soft_update: architecture mismatch");
  soft_update(target.params(), online.params(), tau);
}

inline double explore_action(double u, double noise) { return std::clamp(u + noise, -1.0, 1.0); }

inline double explore_action(double u, std::mt19937_64& rng, double mean, double stddev) {
  std::normal_distribution<double> noise(mean, stddev);
  return explore_action(u, noise(rng));
}

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actor, critic and their target copies with Adam state. The critic sees
/// the action appended to the state at its input layer.
class DdpgAgent {
 public:
  DdpgAgent() = default;

  DdpgAgent(const DdpgConfig& cfg, int obs_dim = kObsDim)
      : cfg_(cfg),
        actor_(obs_dim, cfg.hidden, 1, OutputActivation::kTanh),
        critic_(obs_dim + 1, cfg.hidden, 1, OutputActivation::kLinear),
        actor_target_(actor_),
        critic_target_(critic_),
        actor_opt_(actor_.size()),
        critic_opt_(critic_.size()) {}

  /// Seeded initialization; target networks start as exact copies.
  void initialize(std::mt19937_64& rng) {
    actor_.init_uniform(rng, cfg_.output_init);
    critic_.init_uniform(rng, cfg_.output_init);
    actor_target_ = actor_;
    critic_target_ = critic_;
    actor_opt_ = AdamState(actor_.size());
    critic_opt_ = AdamState(critic_.size());
  }

  /// Deterministic policy output in [-1, 1].
  double act(const Vector& s) const {
    actor_.forward(s, act_cache_);
    return act_cache_.y(0, 0);
  }

  double q_value(const Vector& s, double a) const {
    Vector x(s.size() + 1);
    x << s, a;
    return critic_.forward(x)(0, 0);
  }

  /// y_i = r_i + (1 - I_i) * gamma * Q'(s'_i, mu'(s'_i)).
  Vector td_targets(const Batch& b) const {
    actor_target_.forward(b.s_next, tgt_actor_cache_);
    stack(b.s_next, tgt_actor_cache_.y, x_next_);
    critic_target_.forward(x_next_, tgt_critic_cache_);
    Vector y(b.size());
    for (int i = 0; i < b.size(); ++i) {
      y[i] = td_target(b.r[i], b.done[i], cfg_.gamma, tgt_critic_cache_.y(0, i));
    }
    return y;
  }

  /// Mean squared TD error and its gradient with respect to critic params.
  double critic_loss(const Batch& b, const Vector& y, Vector* grad) const {
    stack(b.s, b.a, x_);
    critic_.forward(x_, critic_cache_);
    const int n = b.size();
    Matrix residual = y.transpose() - critic_cache_.y;
    const double loss = residual.squaredNorm() / n;
    if (grad) {
      grad->setZero(critic_.size());
      const Matrix g = (-2.0 / n) * residual;
      critic_.backward(critic_cache_, g, grad, nullptr);
    }
    return loss;
  }

  /// Batch mean of Q(s, mu(s)), minus the optional penalty on the squared
  /// pre-tanh actor output, and its gradient with respect to actor params
  /// (chain rule through the critic's action input).
  double actor_objective(const Batch& b, Vector* grad) const {
    actor_.forward(b.s, actor_cache_);
    stack(b.s, actor_cache_.y, x_);
    critic_.forward(x_, critic_cache_);
    const int n = b.size();
    const double penalty = cfg_.preactivation_penalty;
    const double objective = critic_cache_.y.sum() / n - penalty * actor_cache_.z3.squaredNorm() / n;
    if (grad) {
      grad->setZero(actor_.size());
      const Matrix dq = Matrix::Constant(1, n, 1.0 / n);
      critic_.backward(critic_cache_, dq, nullptr, &grad_x_);
      const Matrix du = grad_x_.bottomRows(1);
      if (penalty > 0.0) {
        const Matrix dz = (-2.0 * penalty / n) * actor_cache_.z3;
        actor_.backward(actor_cache_, du, grad, nullptr, &dz);
      } else {
        actor_.backward(actor_cache_, du, grad, nullptr);
      }
    }
    return objective;
  }

  double critic_update(const Batch& b) {
    const Vector y = td_targets(b);
    const double loss = critic_loss(b, y, &critic_grad_);
    if (!std::isfinite(loss) || !critic_grad_.allFinite()) {
      std::ostringstream os;
      os << "critic update produced a non-finite value (loss=" << loss << ", adam step=" << critic_opt_.t << ")";
      throw NumericalError(os.str());
    }
    adam_step(critic_.params(), critic_grad_, critic_opt_, hyper(cfg_.critic_lr));
    return loss;
  }

  /// Gradient ascent on the objective: Adam descends on its negation.
  double actor_update(const Batch& b) {
    const double objective = actor_objective(b, &actor_grad_);
    if (!std::isfinite(objective) || !actor_grad_.allFinite()) {
      std::ostringstream os;
      os << "actor update produced a non-finite value (objective=" << objective << ", adam step=" << actor_opt_.t
         << ")";
      throw NumericalError(os.str());
    }
    actor_grad_ = -actor_grad_;
    adam_step(actor_.params(), actor_grad_, actor_opt_, hyper(cfg_.actor_lr));
    return objective;
  }

  void update_targets() {
    soft_update(actor_target_, actor_, cfg_.tau);
    soft_update(critic_target_, critic_, cfg_.tau);
  }

  /// One critic step, one actor step, one soft update.
  void train_step(const Batch& b) {
    critic_update(b);
    actor_update(b);
    update_targets();
  }

  const DdpgConfig& config() const { return cfg_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& actor_target() { return actor_target_; }
  Mlp& critic_target() { return critic_target_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& actor_target() const { return actor_target_; }
  const Mlp& critic_target() const { return critic_target_; }
  AdamState& actor_optimizer() { return actor_opt_; }
  AdamState& critic_optimizer() { return critic_opt_; }
  const AdamState& actor_optimizer() const { return actor_opt_; }
  const AdamState& critic_optimizer() const { return critic_opt_; }

 private:
  AdamHyper hyper(double lr) const { return {lr, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps}; }

  static void stack(const Matrix& s, const Matrix& a, Matrix& out) {
    out.resize(s.rows() + 1, s.cols());
    out.topRows(s.rows()) = s;
    out.bottomRows(1) = a;
  }

  DdpgConfig cfg_;
  Mlp actor_;
  Mlp critic_;
  Mlp actor_target_;
  Mlp critic_target_;
  AdamState actor_opt_;
  AdamState critic_opt_;

  // Scratch space reused across updates.
  mutable Mlp::Cache act_cache_, actor_cache_, critic_cache_, tgt_actor_cache_, tgt_critic_cache_;
  mutable Matrix x_, x_next_, grad_x_;
  Vector critic_grad_, actor_grad_;
};

}  // namespace onramp

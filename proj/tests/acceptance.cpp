// Acceptance suite: one PASS/FAIL line per criterion; exits non-zero when
// any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fd_oracle.hpp"
#include "onramp/checkpoint.hpp"
#include "onramp/eval.hpp"
#include "onramp/io.hpp"
#include "onramp/reward.hpp"
#include "onramp/train.hpp"

namespace {

using namespace onramp;

constexpr std::int64_t kDeskSteps = 200000;
constexpr std::int64_t kTestSteps = 50000;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kJerkWeights[] = {0.0, 0.00075};

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Verdict& v, double seconds) {
  std::printf("%s  [%d] %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", id, name, seconds, v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

void run_criterion(int id, const char* name, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, v, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

Verdict reward_examples() {
  constexpr double kTol = 1e-9;
  RewardWeights w;
  RewardWeights wj_high = w;
  wj_high.w_j = 0.015;
  RewardWeights wj_low = w;
  wj_low.w_j = 0.00075;
  struct Case {
    const char* name;
    double got;
    double expected;
  };
  const Case cases[] = {
      {"midway equal gaps", midway_ratio(-20, 0, 20, 5, 5), 0.0},
      {"midway contact", std::abs(midway_ratio(-25, -20, 15, 5, 5)), 1.0},
      {"midway 25/5", std::abs(midway_ratio(-30, 0, 10, 5, 5)), 20.0 / 30.0},
      {"r_m perfect", merge_midway_reward(0.0, 30, 28, 29, w), 0.0},
      {"r_m off-centre", merge_midway_reward(2.0 / 3.0, 30, 28, 24, w), -0.025},
      {"r_b none", braking_penalty(0.0, w), 0.0},
      {"r_b -4.5", braking_penalty(-4.5, w), -0.015},
      {"r_b -9", braking_penalty(-9.0, w), -0.03},
      {"r_j constant", jerk_penalty(1.0, 1.0, wj_high), 0.0},
      {"r_j at j_max", jerk_penalty(0.3, 0.0, wj_high), -0.015},
      {"r_j 71", jerk_penalty(2.6, -4.5, wj_low), -0.01775},
      {"stop", terminal_reward(OutcomeKind::kStop, w), -0.5},
      {"collision", terminal_reward(OutcomeKind::kCollision, w), -1.0},
      {"success", terminal_reward(OutcomeKind::kSuccess, w), 1.0},
  };
  std::vector<std::string> bad;
  for (const auto& c : cases) {
    if (!(std::abs(c.got - c.expected) <= kTol)) {
      bad.push_back(std::string(c.name) + " got " + fmt(c.got) + " want " + fmt(c.expected));
    }
  }
  // Ramp position disables the merge term.
  Neighbors nb;
  nb.p1.d = 20;
  nb.f1.d = 60;
  if (compute_reward({40, 20, 0, 0, 5}, nb, 0.0, std::nullopt, w, EnvConfig{}).midway != 0.0) {
    bad.push_back("r_m active on ramp");
  }
  if (!bad.empty()) return {false, join(bad)};
  return {true, std::to_string(std::size(cases) + 1) + " examples within 1e-9"};
}

constexpr double kKinkMargin = 1e-4;

Verdict gradient_check() {
  std::mt19937_64 rng(2718);
  double worst_critic = 0.0;
  double worst_actor = 0.0;
  int redrawn = 0;
  for (int draw = 0; draw < 100;) {
    DdpgAgent agent{DdpgConfig{}};
    testing::randomize(agent.actor(), rng);
    testing::randomize(agent.critic(), rng);
    testing::randomize(agent.actor_target(), rng);
    testing::randomize(agent.critic_target(), rng);
    const Batch b = testing::random_batch(4, rng);
    Matrix critic_in(b.s.rows() + 1, b.s.cols());
    critic_in.topRows(b.s.rows()) = b.s;
    critic_in.bottomRows(1) = b.a;
    Matrix policy_in = critic_in;
    policy_in.bottomRows(1) = agent.actor().forward(b.s);
    if (std::min({testing::min_relu_margin(agent.critic(), critic_in),
                  testing::min_relu_margin(agent.critic(), policy_in),
                  testing::min_relu_margin(agent.actor(), b.s)}) < kKinkMargin) {
      ++redrawn;
      continue;
    }
    ++draw;
    const Vector y = agent.td_targets(b);
    Vector critic_grad, actor_grad;
    agent.critic_loss(b, y, &critic_grad);
    agent.actor_objective(b, &actor_grad);
    Mlp& critic = agent.critic();
    Mlp& actor = agent.actor();
    const Vector critic_fd = testing::central_difference(
        critic.params(), [&] { return testing::reference_critic_loss(critic, b, y); });
    const Vector actor_fd = testing::central_difference(
        actor.params(), [&] { return testing::reference_actor_objective(actor, critic, b); });
    worst_critic = std::max(worst_critic, testing::relative_error(critic_grad, critic_fd));
    worst_actor = std::max(worst_actor, testing::relative_error(actor_grad, actor_fd));
  }
  std::ostringstream os;
  os << "100 draws (" << redrawn << " redrawn with a ReLU input within " << kKinkMargin
     << " of zero), worst relative error critic " << worst_critic << ", actor " << worst_actor << " (< 1e-4)";
  return {worst_critic < 1e-4 && worst_actor < 1e-4, os.str()};
}

Verdict idm_safety() {
  std::int64_t close = 0;
  std::int64_t crossings = 0;
  double min_gap = kInf;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Traffic traffic(TrafficConfig{}, EnvConfig{});
    std::mt19937_64 rng(seed);
    for (int step = 0; step < 100000; ++step) {
      traffic.step(rng, nullptr);
      const auto& v = traffic.vehicles();
      for (std::size_t i = 1; i < v.size(); ++i) {
        const double gap = v[i].state.d - v[i - 1].state.d - v[i - 1].state.length;
        min_gap = std::min(min_gap, gap);
        if (gap < 2.5) ++close;
        if (!(v[i - 1].state.d < v[i].state.d)) ++crossings;
      }
    }
  }
  std::ostringstream os;
  os << "10 seeds x 1e5 steps: " << close << " gaps < 2.5 m, " << crossings << " ordering violations, min gap "
     << min_gap << " m";
  return {close == 0 && crossings == 0, os.str()};
}

struct DeskRun {
  std::uint64_t seed = 0;
  double w_j = 0.0;
  std::vector<EpisodeLogRow> log;
  std::string log_csv;
  std::vector<unsigned char> checkpoint;
  TestMetrics metrics;
  std::string error;
};

DeskRun desk_run(std::uint64_t seed, double w_j, bool test) {
  DeskRun r;
  r.seed = seed;
  r.w_j = w_j;
  RunConfig cfg;
  cfg.run.seed = seed;
  cfg.reward.w_j = w_j;
  cfg.agent.total_steps = kDeskSteps;
  Trainer trainer(cfg);
  trainer.run(kDeskSteps);
  r.log = trainer.log();
  std::ostringstream csv;
  csv << kTrainingLogHeader << '\n';
  for (const auto& row : r.log) write_training_log_row(csv, row);
  r.log_csv = csv.str();
  r.checkpoint = serialize_checkpoint(trainer.state());
  if (test) {
    r.metrics =
        run_test(actor_policy(trainer.state().agent.actor(), cfg.env), cfg, kTestSteps, cfg.run.test_seed).metrics;
  }
  return r;
}

// Runs every job, `hardware_concurrency` at a time; jobs are independent.
std::vector<DeskRun> run_all(const std::vector<std::function<DeskRun()>>& jobs) {
  std::vector<DeskRun> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = jobs[i]();
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const unsigned n = std::clamp<unsigned>(std::thread::hardware_concurrency(), 1u, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct WindowStats {
  double mean_reward = 0.0;
  double success_rate = 0.0;
};

WindowStats window(const std::vector<EpisodeLogRow>& log, std::size_t begin, std::size_t end) {
  WindowStats s;
  for (std::size_t i = begin; i < end; ++i) {
    s.mean_reward += log[i].undiscounted_reward;
    s.success_rate += log[i].outcome == OutcomeKind::kSuccess ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(end - begin);
  s.mean_reward /= n;
  s.success_rate /= n;
  return s;
}

std::string run_name(const DeskRun& r) {
  std::ostringstream os;
  os << "seed " << r.seed << " w_j " << r.w_j;
  return os.str();
}

Verdict spawn_statistics() {
  Traffic traffic(TrafficConfig{}, EnvConfig{});
  std::mt19937_64 rng(4242);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) accepted += traffic.spawn_attempt(rng) ? 1 : 0;
  const double frac = accepted / 10000.0;
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < 10000; ++i) {
    const double v0 = traffic.draw_params(rng).desired_speed;
    lo = std::min(lo, v0);
    hi = std::max(hi, v0);
  }
  std::ostringstream os;
  os << "acceptance " << frac << " in [0.47, 0.53]; desired speeds in [" << lo << ", " << hi << "] within ["
     << 0.8 * 29.06 << ", " << 1.2 * 29.06 << "]";
  return {frac >= 0.47 && frac <= 0.53 && lo >= 0.8 * 29.06 && hi <= 1.2 * 29.06, os.str()};
}

Verdict soft_update_and_td() {
  std::vector<std::string> bad;
  Vector fixed = Vector::Constant(5, 0.42);
  soft_update(fixed, Vector::Constant(5, 0.42), 0.001);
  if (fixed != Vector::Constant(5, 0.42)) bad.push_back("fixed point moved");

  Vector target = Vector::Zero(1);
  soft_update(target, Vector::Ones(1), 0.001);
  if (target[0] != 0.001) bad.push_back("0 -> 1 gave " + fmt(target[0]));

  // Geometric decay: the residual shrinks by exactly the factor 0.999 per
  // update, tracked against an independent recurrence and the closed form.
  double residual = 1.0;
  double worst = 0.0;
  target.setZero();
  for (int k = 1; k <= 10000; ++k) {
    soft_update(target, Vector::Ones(1), 0.001);
    residual *= 0.999;
    worst = std::max(worst, std::abs((1.0 - target[0]) - residual));
    if (std::abs((1.0 - target[0]) - std::pow(0.999, k)) > 1e-12) {
      bad.push_back("geometric decay off at k=" + std::to_string(k));
      break;
    }
  }

  if (td_target(1.0, 1.0, 0.99, 1e6) != 1.0) bad.push_back("termination did not cut bootstrap");
  if (td_target(0.0, 0.0, 0.99, 2.0) != 1.98) bad.push_back("y != 1.98");
  if (td_target(-0.025, 0.0, 0.99, 0.0) != -0.025) bad.push_back("y != -0.025");

  // Through the agent: terminal transitions ignore the target networks.
  DdpgAgent agent{DdpgConfig{}};
  std::mt19937_64 rng(31);
  testing::randomize(agent.actor_target(), rng);
  testing::randomize(agent.critic_target(), rng);
  Batch b = testing::random_batch(32, rng);
  b.done.setOnes();
  if (agent.td_targets(b) != b.r) bad.push_back("agent targets bootstrap past termination");

  std::ostringstream os;
  os << "fixed point, 0 -> 0.001, 1e4-step geometric decay (max drift " << worst << "), 3 TD targets, terminal batch";
  if (!bad.empty()) return {false, join(bad)};
  return {true, os.str()};
}

}  // namespace

int main() {
  run_criterion(1, "reward-unit exactness", reward_examples);
  run_criterion(2, "gradient correctness", gradient_check);
  run_criterion(3, "IDM safety property", idm_safety);

  std::vector<std::function<DeskRun()>> jobs;
  for (std::uint64_t seed : kSeeds) {
    for (double w_j : kJerkWeights) jobs.push_back([=] { return desk_run(seed, w_j, true); });
  }
  jobs.push_back([] { return desk_run(kSeeds[0], 0.0, false); });  // determinism twin
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("training %zu desk-scale runs of %lld steps...\n", jobs.size(), static_cast<long long>(kDeskSteps));
  std::fflush(stdout);
  const std::vector<DeskRun> runs = run_all(jobs);
  const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<std::string> errors;
  for (const auto& r : runs) {
    if (!r.error.empty()) errors.push_back(run_name(r) + ": " + r.error);
  }
  auto find = [&](std::uint64_t seed, double w_j) -> const DeskRun& {
    return *std::find_if(runs.begin(), runs.end(), [&](const DeskRun& r) { return r.seed == seed && r.w_j == w_j; });
  };
  const DeskRun& twin = runs.back();
  const std::size_t n_trained = runs.size() - 1;

  run_criterion(4, "determinism", [&]() -> Verdict {
    if (!errors.empty()) return {false, join(errors)};
    const DeskRun& first = find(kSeeds[0], 0.0);
    const bool same_log = first.log_csv == twin.log_csv;
    const bool same_ckpt = first.checkpoint == twin.checkpoint;
    std::ostringstream os;
    os << "seed " << kSeeds[0] << " twice: training log " << (same_log ? "identical" : "DIFFERS") << " ("
       << first.log_csv.size() << " bytes), checkpoint " << (same_ckpt ? "identical" : "DIFFERS") << " ("
       << first.checkpoint.size() << " bytes); " << train_seconds << " s for all desk runs";
    return {same_log && same_ckpt, os.str()};
  });

  run_criterion(5, "desk-scale learning signal", [&]() -> Verdict {
    if (!errors.empty()) return {false, join(errors)};
    bool pass = true;
    std::vector<std::string> parts;
    for (std::uint64_t seed : kSeeds) {
      const auto& log = find(seed, 0.0).log;
      if (log.size() < 1000) {
        parts.push_back("seed " + std::to_string(seed) + ": only " + std::to_string(log.size()) + " episodes");
        pass = false;
        continue;
      }
      const WindowStats first = window(log, 0, 500);
      const WindowStats last = window(log, log.size() - 500, log.size());
      const bool ok = last.mean_reward > first.mean_reward && last.success_rate > 0.8;
      pass = pass && ok;
      std::ostringstream os;
      os << "seed " << seed << ": reward " << first.mean_reward << " -> " << last.mean_reward << ", last-500 success "
         << last.success_rate * 100 << "%";
      parts.push_back(os.str());
    }
    return {pass, "w_j = 0, " + std::to_string(kDeskSteps) + " steps; " + join(parts)};
  });

  run_criterion(6, "Pareto direction", [&]() -> Verdict {
    if (!errors.empty()) return {false, join(errors)};
    int lower = 0;
    std::vector<std::string> parts;
    for (std::uint64_t seed : kSeeds) {
      const TestMetrics& m0 = find(seed, 0.0).metrics;
      const TestMetrics& m1 = find(seed, 0.00075).metrics;
      lower += m1.avg_jerk < m0.avg_jerk ? 1 : 0;
      std::ostringstream os;
      os << "seed " << seed << ": " << m0.avg_jerk << " -> " << m1.avg_jerk << " m/s^3 (collision rate "
         << m0.avg_collision_rate << " -> " << m1.avg_collision_rate << ")";
      parts.push_back(os.str());
    }
    return {lower >= 2, std::to_string(lower) + "/3 replicates lower with w_j = 0.00075; " + join(parts)};
  });

  run_criterion(7, "decision-strategy direction", [&]() -> Verdict {
    if (!errors.empty()) return {false, join(errors)};
    bool pass = true;
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < n_trained; ++i) {
      const TestMetrics& m = runs[i].metrics;
      pass = pass && m.valid && m.merge_ahead_rate > m.merge_behind_rate;
      std::ostringstream os;
      os << run_name(runs[i]) << ": ahead " << m.merge_ahead_rate << " behind " << m.merge_behind_rate
         << " (collisions " << m.collision_count << "/" << m.episode_count << ")";
      parts.push_back(os.str());
    }
    return {pass, join(parts)};
  });

  run_criterion(8, "spawn statistics", spawn_statistics);
  run_criterion(9, "soft-update and TD-target examples", soft_update_and_td);

  std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}

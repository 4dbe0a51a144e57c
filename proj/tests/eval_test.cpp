#include <gtest/gtest.h>

#include <vector>

#include "onramp/eval.hpp"

namespace onramp {
namespace {

VehicleState car(std::int64_t id, double d) {
  VehicleState s;
  s.id = id;
  s.d = d;
  s.v = 25.0;
  return s;
}

VehicleState virtual_f1(double ego_d) { return make_virtual(NeighborRole::kF1, ego_d); }

// Frames for an ego moving from `from` to `to` while one main-road vehicle
// (id 7) moves along `other`; f1 is whichever of them is behind the ego.
std::vector<MergeFrame> trajectory(const std::vector<double>& ego, const std::vector<double>& other) {
  std::vector<MergeFrame> frames;
  for (std::size_t i = 0; i < ego.size(); ++i) {
    MergeFrame f;
    f.ego_d = ego[i];
    f.vehicles = {car(7, other[i])};
    f.f1 = other[i] > ego[i] ? car(7, other[i]) : virtual_f1(ego[i]);
    frames.push_back(f);
  }
  return frames;
}

TEST(ClassifyMerge, ConstantSpeedMergesAhead) {
  const auto events = classify_merge(trajectory({60, 40, 20, 0, -20}, {90, 70, 50, 30, 10}));
  EXPECT_EQ(events, std::vector<MergeEvent>{MergeEvent::kAhead});
}

TEST(ClassifyMerge, SlowingLetsFollowerPass) {
  const auto events = classify_merge(trajectory({60, 50, 40, 30, 20, 10, 0}, {90, 60, 35, 10, -15, -40, -65}));
  EXPECT_EQ(events, std::vector<MergeEvent>{MergeEvent::kBehind});
}

TEST(ClassifyMerge, CrossingTwiceGivesTwoEvents) {
  const auto events = classify_merge(trajectory({60, 50, 40, 20, 0}, {70, 45, 38, 25, 5}));
  EXPECT_EQ(events, (std::vector<MergeEvent>{MergeEvent::kBehind, MergeEvent::kAhead}));
}

TEST(ClassifyMerge, NoMergeNoEvents) {
  EXPECT_TRUE(classify_merge(trajectory({80, 60, 40}, {90, 80, 70})).empty());
}

TEST(ClassifyMerge, FollowerPassingAfterMergeIgnored) {
  const auto events = classify_merge(trajectory({40, 20, 0, -20, -40}, {70, 50, 30, -30, -80}));
  EXPECT_EQ(events, std::vector<MergeEvent>{MergeEvent::kAhead});
}

TEST(AggregateMetrics, MeansOfEpisodeMeans) {
  std::vector<EpisodeRecord> eps(4);
  const OutcomeKind kinds[] = {OutcomeKind::kSuccess, OutcomeKind::kCollision, OutcomeKind::kSuccess,
                               OutcomeKind::kStop};
  for (int i = 0; i < 4; ++i) {
    eps[static_cast<std::size_t>(i)].outcome = {kinds[i], 10 * (i + 1), 1.0 * i, 0.5, 20.0 + i};
  }
  eps[0].events = {MergeEvent::kAhead};
  eps[1].events = {MergeEvent::kBehind, MergeEvent::kAhead};
  eps[2].events = {MergeEvent::kAhead};
  const TestMetrics m = aggregate_metrics(eps);
  EXPECT_TRUE(m.valid);
  EXPECT_EQ(m.episode_count, 4);
  EXPECT_EQ(m.stop_count, 1);
  EXPECT_DOUBLE_EQ(m.avg_collision_rate, 0.25);
  EXPECT_DOUBLE_EQ(m.avg_jerk, 1.5);
  EXPECT_DOUBLE_EQ(m.avg_accel, 0.5);
  EXPECT_DOUBLE_EQ(m.avg_velocity, 21.5);
  EXPECT_DOUBLE_EQ(m.merge_ahead_rate, 0.75);
  EXPECT_DOUBLE_EQ(m.merge_behind_rate, 0.25);
  EXPECT_EQ(m.steps, 100);
}

TEST(RunTest, MaximumBrakingAlwaysStops) {
  const RunConfig cfg;
  const TestResult res = run_test([](const Observation&) { return -4.5; }, cfg, 5000, 3);
  ASSERT_TRUE(res.metrics.valid);
  EXPECT_GT(res.metrics.episode_count, 0);
  EXPECT_EQ(res.metrics.stop_count, res.metrics.episode_count);
  EXPECT_EQ(res.metrics.avg_collision_rate, 0.0);
  EXPECT_EQ(res.metrics.merge_ahead_rate + res.metrics.merge_behind_rate, 0.0);
}

TEST(RunTest, ZeroBudgetIsInvalid) {
  const TestResult res = run_test([](const Observation&) { return 0.0; }, RunConfig{}, 0, 3);
  EXPECT_FALSE(res.metrics.valid);
  EXPECT_EQ(res.metrics.episode_count, 0);
}

TEST(RunTest, SameSeedSameMetrics) {
  const Policy p = [](const Observation& o) { return o[Observation::kVm] < 25.0 ? 1.0 : -0.5; };
  const TestMetrics a = run_test(p, RunConfig{}, 4000, 77).metrics;
  const TestMetrics b = run_test(p, RunConfig{}, 4000, 77).metrics;
  EXPECT_EQ(a, b);
  EXPECT_GE(a.steps, 4000);
}

TEST(RunTest, RatesWithinRange) {
  const TestMetrics m = run_test([](const Observation&) { return 0.0; }, RunConfig{}, 6000, 5).metrics;
  EXPECT_GE(m.avg_collision_rate, 0.0);
  EXPECT_LE(m.avg_collision_rate, 1.0);
  EXPECT_EQ(m.collision_count + m.stop_count + m.success_count + m.truncated_count, m.episode_count);
}

RunConfig tiny_sweep_config() {
  RunConfig cfg;
  cfg.agent.replay_capacity = 5000;
  cfg.agent.random_action_steps = 200;
  return cfg;
}

TEST(ParetoSweep, OnePointPerWeightSorted) {
  const auto points = pareto_sweep(tiny_sweep_config(), {0.015, 0.0, 0.003}, 400, 300, 1);
  ASSERT_EQ(points.size(), 3u);
  EXPECT_EQ(points[0].w_j, 0.0);
  EXPECT_EQ(points[1].w_j, 0.003);
  EXPECT_EQ(points[2].w_j, 0.015);
  for (const auto& p : points) {
    EXPECT_EQ(p.status, "ok");
    EXPECT_TRUE(p.metrics.valid);
  }
}

TEST(ParetoSweep, ParallelismDoesNotChangeResults) {
  const std::vector<double> weights = {0.0, 0.00075, 0.0015};
  const auto serial = pareto_sweep(tiny_sweep_config(), weights, 400, 300, 1);
  const auto parallel = pareto_sweep(tiny_sweep_config(), weights, 400, 300, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].metrics, parallel[i].metrics);
    EXPECT_EQ(serial[i].training_log, parallel[i].training_log);
  }
}

TEST(ParetoSweep, EmptyWeightsRejected) {
  EXPECT_THROW(pareto_sweep(tiny_sweep_config(), {}, 100, 100, 1), ConfigError);
}

TEST(ParetoSweep, FailedRunReported) {
  RunConfig cfg = tiny_sweep_config();
  cfg.agent.actor_lr = 1e300;
  cfg.agent.critic_lr = 1e300;
  const auto points = pareto_sweep(cfg, {0.0}, 600, 100, 1);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_NE(points[0].status, "ok");
}

}  // namespace
}  // namespace onramp

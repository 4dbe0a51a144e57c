#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "onramp/checkpoint.hpp"
#include "onramp/config.hpp"
#include "onramp/eval.hpp"
#include "onramp/io.hpp"
#include "onramp/report.hpp"
#include "onramp/train.hpp"

namespace onramp {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
  kExitIntegrityError = 4,
};

inline constexpr const char* kConfigEcho = "config.json";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kParetoFile = "pareto.csv";

inline std::filesystem::path prepare_output(const RunConfig& cfg) {
  const std::filesystem::path out(cfg.run.out_dir);
  std::filesystem::create_directories(out);
  save_config(cfg, (out / kConfigEcho).string());
  return out;
}

/// Trains (or resumes from `run.checkpoint`) and writes the checkpoint,
/// the training log and the resolved config into `run.out_dir`.
inline void cmd_train(const RunConfig& cfg, std::ostream& progress = std::cerr) {
  const auto out = prepare_output(cfg);
  const bool resume = !cfg.run.checkpoint.empty();
  Trainer trainer = resume ? Trainer(cfg, load_checkpoint(cfg.run.checkpoint, cfg.agent)) : Trainer(cfg);

  const auto log_path = out / kTrainingLogFile;
  const bool append = resume && std::filesystem::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write '" + log_path.string() + "'");
  if (!append) log << kTrainingLogHeader << '\n';

  double window_reward = 0.0;
  int window_success = 0;
  int window = 0;
  trainer.run(cfg.agent.total_steps, [&](const Trainer& t, const EpisodeLogRow& row) {
    write_training_log_row(log, row);
    window_reward += row.undiscounted_reward;
    window_success += row.outcome == OutcomeKind::kSuccess;
    ++window;
    const int every = cfg.run.checkpoint_every_episodes;
    if (every > 0 && t.state().episodes % every == 0) {
      log.flush();
      save_checkpoint(t.state(), out / kCheckpointFile);
    }
    if (cfg.run.verbose > 0 && window == 100) {
      progress << "step " << t.state().steps << "  episode " << t.state().episodes << "  mean reward "
               << window_reward / window << "  success " << window_success << "/" << window << '\n';
      window_reward = 0.0;
      window_success = window = 0;
    }
  });
  log.flush();
  save_checkpoint(trainer.state(), out / kCheckpointFile);
}

/// Tests the policy stored in `checkpoint` without exploration noise.
inline TestMetrics cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
  const auto out = prepare_output(cfg);
  const TrainingState st = load_checkpoint(checkpoint, cfg.agent);
  TestLogging logging{out, cfg.run.episodes_log};
  const TestResult res =
      run_test(actor_policy(st.agent.actor(), cfg.env), cfg, cfg.run.test_steps, cfg.run.test_seed, &logging);
  write_metrics(out, cfg.reward.w_j, res.metrics);
  return res.metrics;
}

inline std::string weight_dir_name(double w_j) { return "wj_" + fmt(w_j); }

/// One train+test run per jerk weight, `run.parallel` at a time. Writes
/// `pareto.csv` plus a subdirectory of artifacts per weight.
inline std::vector<ParetoPoint> cmd_sweep(const RunConfig& cfg) {
  const auto out = prepare_output(cfg);
  auto hook = [&](const RunConfig& run_cfg, const TrainingState* st, const ParetoPoint& p) {
    RunConfig echo = run_cfg;
    echo.run.out_dir = (out / weight_dir_name(p.w_j)).string();
    const auto dir = prepare_output(echo);
    write_training_log(dir / kTrainingLogFile, p.training_log);
    if (st) save_checkpoint(*st, dir / kCheckpointFile);
    write_metrics(dir, p.w_j, p.metrics);
  };
  auto points =
      pareto_sweep(cfg, cfg.run.sweep_weights, cfg.agent.total_steps, cfg.run.test_steps, cfg.run.parallel, hook);
  write_pareto_table(out / kParetoFile, points);
  return points;
}

}  // namespace onramp

// Command-line driver: train, eval and sweep.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "onramp/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::string> out;
  std::optional<std::string> checkpoint;
  std::optional<int> episodes_log;
  std::optional<int> parallel;
};

onramp::RunConfig resolve(const Flags& f, bool steps_are_test_steps) {
  onramp::RunConfig cfg;
  if (!f.config.empty()) {
    cfg = onramp::load_config(f.config);
  } else if (f.checkpoint) {
    // Without --config, a checkpoint runs under the config its run recorded.
    const auto echoed = std::filesystem::path(*f.checkpoint).parent_path() / onramp::kConfigEcho;
    if (std::filesystem::exists(echoed)) cfg = onramp::load_config(echoed.string());
  }
  if (f.seed) cfg.run.seed = *f.seed;
  if (f.steps) (steps_are_test_steps ? cfg.run.test_steps : cfg.agent.total_steps) = *f.steps;
  if (f.out) cfg.run.out_dir = *f.out;
  if (f.checkpoint) cfg.run.checkpoint = *f.checkpoint;
  if (f.episodes_log) cfg.run.episodes_log = *f.episodes_log;
  if (f.parallel) cfg.run.parallel = *f.parallel;
  auto problems = onramp::validate(cfg);
  if (!problems.empty()) throw onramp::ConfigError(std::move(problems));
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run config (JSON); defaults reproduce the reference setup")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-ramp merging simulator and DDPG trainer"};
  app.require_subcommand(1);

  Flags train_flags, eval_flags, sweep_flags;

  auto* train = app.add_subcommand("train", "Train a merging policy");
  add_common(train, train_flags);
  train->add_option("--steps", train_flags.steps, "Total training steps");
  train->add_option("--checkpoint", train_flags.checkpoint, "Resume from this checkpoint");

  auto* eval = app.add_subcommand("eval", "Test a trained policy without exploration");
  add_common(eval, eval_flags);
  eval->add_option("--steps", eval_flags.steps, "Test step budget");
  eval->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--episodes-log", eval_flags.episodes_log, "Write trajectory CSVs for the first N episodes");

  auto* sweep = app.add_subcommand("sweep", "Train and test one policy per jerk weight");
  add_common(sweep, sweep_flags);
  sweep->add_option("--steps", sweep_flags.steps, "Training steps per weight");
  sweep->add_option("--parallel", sweep_flags.parallel, "Concurrent runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? onramp::kExitOk : onramp::kExitConfigError;
  }

  try {
    if (train->parsed()) {
      onramp::cmd_train(resolve(train_flags, false));
    } else if (eval->parsed()) {
      const auto cfg = resolve(eval_flags, true);
      const auto m = onramp::cmd_eval(cfg, cfg.run.checkpoint);
      std::cout << onramp::metrics_to_json(cfg.reward.w_j, m).dump(2) << '\n';
    } else if (sweep->parsed()) {
      const auto points = onramp::cmd_sweep(resolve(sweep_flags, false));
      for (const auto& p : points) {
        std::cout << onramp::metrics_csv_row(p.w_j, p.metrics) << ',' << p.status << '\n';
      }
    }
  } catch (const onramp::ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << '\n';
    return onramp::kExitConfigError;
  } catch (const onramp::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return onramp::kExitIntegrityError;
  } catch (const onramp::ArchitectureError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return onramp::kExitIntegrityError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return onramp::kExitRuntimeError;
  }
  return onramp::kExitOk;
}

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "condyn/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "condyn: joint policy / dynamics-model training with a k-step "
      "rollout-consistency penalty"};
  app.require_subcommand(1);

  // train
  std::string train_config;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "run one training job");
  train->add_option("--config", train_config, "path to a key = value config")
      ->required();
  auto* seed_opt =
      train->add_option("--seed", train_seed, "override the config seed");

  // ablate-k
  std::string ablate_config;
  std::vector<std::size_t> ablate_ks;
  std::vector<std::uint64_t> ablate_seeds;
  auto* ablate = app.add_subcommand(
      "ablate-k", "sweep the consistency rollout length over several seeds");
  ablate->add_option("--config", ablate_config, "base config file")
      ->required();
  ablate->add_option("--ks", ablate_ks, "comma-separated rollout lengths")
      ->required()
      ->delimiter(',');
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds")
      ->required()
      ->delimiter(',');

  // robustness
  std::string rob_snapshot;
  std::size_t rob_horizon = 0;
  std::string rob_data;
  auto* rob = app.add_subcommand(
      "robustness",
      "score a saved sequence model by open-loop imagination log-likelihood");
  rob->add_option("--snapshot", rob_snapshot, "parameter snapshot file")
      ->required();
  rob->add_option("--horizon", rob_horizon, "imagination horizon (>= 1)")
      ->required();
  rob->add_option("--data", rob_data, "evaluation trajectory dataset")
      ->required();

  // gen-data
  std::string gen_env;
  std::size_t gen_episodes = 0;
  std::size_t gen_steps = 60;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data",
                                 "record scripted-expert trajectories");
  gen->add_option("--env", gen_env, "environment name")->required();
  gen->add_option("--episodes", gen_episodes, "number of episodes")
      ->required();
  gen->add_option("--steps", gen_steps, "steps per episode");
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--out", gen_out, "output dataset path")->required();

  // report
  std::string rep_runs;
  std::string rep_out;
  std::size_t rep_window = 100;
  auto* rep = app.add_subcommand(
      "report", "aggregate per-seed metrics files into mean/std curves");
  rep->add_option("--runs", rep_runs, "directory holding run subdirectories")
      ->required();
  rep->add_option("--out", rep_out, "output CSV path")->required();
  rep->add_option("--smooth", rep_window,
                  "trailing smoothing window (rows), default 100");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Help/version requests exit cleanly; anything else is a usage error.
    return code == 0 ? condyn::cli::kExitOk : condyn::cli::kExitBadConfig;
  }

  if (train->parsed()) {
    std::optional<std::uint64_t> seed;
    if (seed_opt->count() > 0) seed = train_seed;
    return condyn::cli::run_train(train_config, seed);
  }
  if (ablate->parsed()) {
    return condyn::cli::run_ablate_k(ablate_config, ablate_ks, ablate_seeds);
  }
  if (rob->parsed()) {
    return condyn::cli::run_robustness(rob_snapshot, rob_horizon, rob_data);
  }
  if (gen->parsed()) {
    return condyn::cli::run_gen_data(gen_env, gen_episodes, gen_steps,
                                     gen_seed, gen_out);
  }
  if (rep->parsed()) {
    return condyn::cli::run_report(rep_runs, rep_out, rep_window);
  }
  return condyn::cli::kExitBadConfig;
}

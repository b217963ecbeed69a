#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "codband/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int reps = 0;
  std::string policies_csv;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config (JSON)")
      ->required();
  cmd->add_option("--seed", flags.seed, "Master seed override")
      ->each([&](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--out", flags.out_dir, "Output directory override");
  cmd->add_option("--reps", flags.reps, "Replication count override");
  cmd->add_option("--policies", flags.policies_csv,
                  "Comma-separated policy names override");
}

void apply_overrides(codband::ExperimentConfig& config,
                     const CommonFlags& flags) {
  if (flags.seed_set) config.master_seed = flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.reps > 0) config.replications = flags.reps;
  if (!flags.policies_csv.empty()) {
    // Names only; overridden policies take the config's default params.
    codband::PolicyParams defaults;
    if (!config.policies.empty()) defaults = config.policies.front().params;
    std::vector<codband::PolicySpec> specs;
    std::stringstream ss(flags.policies_csv);
    std::string name;
    while (std::getline(ss, name, ','))
      if (!name.empty()) specs.push_back(codband::PolicySpec{name, defaults});
    config.policies = std::move(specs);
  }
  config.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"codband: collaborative dynamic bandit experiments"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  bool export_traces = false;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Run seeded replications and write regret curves");
  add_common(sim, sim_flags);
  sim->add_flag("--export-traces", export_traces,
                "Also write per-replication environment traces");

  CommonFlags grid_flags;
  CLI::App* grid = app.add_subcommand(
      "grid", "Run an environment grid and write a summary table");
  add_common(grid, grid_flags);

  CommonFlags replay_flags;
  std::string log_path;
  CLI::App* replay =
      app.add_subcommand("replay", "Offline replay of a logged event stream");
  add_common(replay, replay_flags);
  replay->add_option("--log", log_path, "Event log file")->required();

  CommonFlags genlog_flags;
  long events = 0;
  CLI::App* genlog = app.add_subcommand(
      "gen-log", "Write a uniform-random logged event stream");
  add_common(genlog, genlog_flags);
  genlog->add_option("--events", events,
                     "Number of events (default users*horizon)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      codband::ExperimentConfig config =
          codband::load_experiment_config(sim_flags.config_path);
      if (export_traces) config.export_traces = true;
      apply_overrides(config, sim_flags);
      const nlohmann::json manifest = codband::run_experiment_files(config);
      for (const auto& artifact : manifest.at("artifacts"))
        std::cout << "wrote " << artifact.get<std::string>() << '\n';
    } else if (grid->parsed()) {
      codband::GridConfig config =
          codband::load_grid_config(grid_flags.config_path);
      apply_overrides(config.base, grid_flags);
      const nlohmann::json manifest = codband::run_table_grid_files(config);
      for (const auto& artifact : manifest.at("artifacts"))
        std::cout << "wrote " << artifact.get<std::string>() << '\n';
    } else if (replay->parsed()) {
      codband::ExperimentConfig config =
          codband::load_experiment_config(replay_flags.config_path);
      apply_overrides(config, replay_flags);
      const nlohmann::json manifest =
          codband::run_replay_files(config, log_path);
      for (const auto& artifact : manifest.at("artifacts"))
        std::cout << "wrote " << artifact.get<std::string>() << '\n';
    } else if (genlog->parsed()) {
      codband::ExperimentConfig config =
          codband::load_experiment_config(genlog_flags.config_path);
      apply_overrides(config, genlog_flags);
      const std::string path = codband::generate_event_log_file(config, events);
      std::cout << "wrote " << path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

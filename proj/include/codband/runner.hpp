#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "codband/environment.hpp"
#include "codband/evaluation.hpp"
#include "codband/policies.hpp"

namespace codband {

/// Per-policy hyperparameters as written in the config; zeros resolve to
/// defaults (tau from recommended_tau, noise_sd from the environment).
struct PolicyParams {
  double ridge = 1.0;
  double delta1 = 0.05;
  double delta2 = 0.05;
  int tau = 0;
  double rho = 0.5;
  double noise_sd = 0.0;
  double gamma_a = 1.0;
  double gamma_b = 1.0;
  int gibbs_every = 1;
};

struct PolicySpec {
  std::string name;
  PolicyParams params;
};

struct ExperimentConfig {
  EnvConfig env;
  std::vector<PolicySpec> policies;
  int replications = 1;
  std::uint64_t master_seed = 0;
  std::string out_dir = "out";
  int threads = 0;  // 0 -> hardware concurrency
  bool export_traces = false;

  void validate() const;
};

/// Strict parser: unknown keys are errors. Accepts the schema written by the
/// CLI docs (schema_version 1).
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Resolved per-policy configuration (tau and noise defaults filled in).
PolicyConfig resolve_policy_config(const PolicySpec& spec, const EnvConfig& env);

/// Deterministic seed streams per replication.
std::uint64_t trace_seed(std::uint64_t master, int rep);
std::uint64_t serve_seed(std::uint64_t master, int rep);
std::uint64_t policy_seed(std::uint64_t master, int rep, int policy_index);

/// One (replication, policy) cell: fresh trace, fresh policy, full horizon.
RegretCurve run_cell(const ExperimentConfig& config, int rep,
                     int policy_index);

struct RunResult {
  std::vector<RegretCurve> curves;  // policy-major, replication-minor
  nlohmann::json manifest;
};

/// Runs every (policy, replication) cell, in parallel across a worker pool;
/// results are identical to sequential execution.
RunResult run_experiment(const ExperimentConfig& config);

/// run_experiment plus artifact emission (regret.csv, manifest.json, and
/// per-replication trace files when requested). Returns the manifest.
nlohmann::json run_experiment_files(const ExperimentConfig& config);

void write_regret_csv(const std::string& path,
                      std::span<const RegretCurve> curves);

/// One Table-style grid row: overrides applied on top of the base config.
struct GridRow {
  int users = 0;
  int k = 0;
  int s_min = 0;
  int s_max = 0;
  int horizon = 0;
  double noise_sd = 0.0;
};

struct GridConfig {
  ExperimentConfig base;
  std::vector<GridRow> rows;
};

GridConfig parse_grid_config(const nlohmann::json& j);
GridConfig load_grid_config(const std::string& path);

ExperimentConfig apply_grid_row(const ExperimentConfig& base, const GridRow& row);

struct GridSummaryRow {
  int grid_row = 0;
  std::string policy;
  double mean_regret = 0.0;
  double stderr_mean = 0.0;
  int reps = 0;
};

std::vector<GridSummaryRow> run_table_grid(const GridConfig& config);
nlohmann::json run_table_grid_files(const GridConfig& config);
void write_grid_csv(const std::string& path,
                    std::span<const GridSummaryRow> rows);

/// Mean and standard error of final cumulative regret for one policy.
struct RegretSummary {
  double mean = 0.0;
  double stderr_mean = 0.0;
  int reps = 0;
};
RegretSummary summarize_final_regret(std::span<const RegretCurve> curves);

/// Offline replay of every configured policy over a logged event stream; a
/// uniform-random baseline is always included for normalization.
struct PolicyReplay {
  std::string policy;
  ReplayResult result;
  std::vector<double> normalized;  // vs the random baseline
};

std::vector<PolicyReplay> run_replay(const ExperimentConfig& config,
                                     const std::string& log_path);
nlohmann::json run_replay_files(const ExperimentConfig& config,
                                const std::string& log_path);

/// Writes a uniform-random logged stream for the configured environment.
void generate_event_log(const EnvConfig& env, long events, std::uint64_t seed,
                        std::ostream& out);
std::string generate_event_log_file(const ExperimentConfig& config,
                                    long events);

}  // namespace codband

#include "codband/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

namespace codband {

namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

void check_keys(const nlohmann::json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw std::invalid_argument("config: '" + ctx + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("config: unknown key '" + ctx + it.key() +
                                  "'");
  }
}

void require_schema(const nlohmann::json& j) {
  if (!j.contains("schema_version"))
    throw std::invalid_argument("config: missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::invalid_argument("config: unsupported schema_version");
}

EnvConfig parse_env(const nlohmann::json& j) {
  check_keys(j, "env.",
             {"users", "horizon", "dim", "arm_pool", "candidates", "s_min",
              "s_max", "noise_sd", "setting", "k", "alpha0", "weights"});
  EnvConfig env;
  env.n_users = j.at("users").get<int>();
  env.horizon = j.at("horizon").get<int>();
  env.dim = j.at("dim").get<int>();
  if (j.contains("arm_pool")) env.pool_size = j.at("arm_pool").get<int>();
  env.candidates_per_round = j.at("candidates").get<int>();
  if (j.contains("s_min")) env.s_min = j.at("s_min").get<int>();
  if (j.contains("s_max")) env.s_max = j.at("s_max").get<int>();
  env.noise_sd = j.at("noise_sd").get<double>();

  const std::string setting = j.at("setting").get<std::string>();
  if (setting == "dp") {
    DpSetting s;
    if (j.contains("alpha0")) s.alpha0 = j.at("alpha0").get<double>();
    if (j.contains("k")) s.init_k = j.at("k").get<int>();
    env.setting = s;
  } else if (setting == "fixed_mixture") {
    FixedMixtureSetting s;
    if (j.contains("k")) s.k = j.at("k").get<int>();
    if (j.contains("weights"))
      s.weights = j.at("weights").get<std::vector<double>>();
    env.setting = s;
  } else if (setting == "stationary") {
    StationarySetting s;
    if (j.contains("k")) s.shared_k = j.at("k").get<int>();
    env.setting = s;
  } else {
    throw std::invalid_argument(
        "config: env.setting must be dp, fixed_mixture or stationary");
  }
  env.validate();
  return env;
}

nlohmann::json env_to_json(const EnvConfig& env) {
  nlohmann::json j{{"users", env.n_users},
                   {"horizon", env.horizon},
                   {"dim", env.dim},
                   {"arm_pool", env.pool_size},
                   {"candidates", env.candidates_per_round},
                   {"s_min", env.s_min},
                   {"s_max", env.s_max},
                   {"noise_sd", env.noise_sd}};
  if (const auto* dp = std::get_if<DpSetting>(&env.setting)) {
    j["setting"] = "dp";
    j["alpha0"] = dp->alpha0;
    j["k"] = dp->init_k;
  } else if (const auto* mix = std::get_if<FixedMixtureSetting>(&env.setting)) {
    j["setting"] = "fixed_mixture";
    j["k"] = mix->k;
    if (!mix->weights.empty()) j["weights"] = mix->weights;
  } else {
    j["setting"] = "stationary";
    j["k"] = std::get<StationarySetting>(env.setting).shared_k;
  }
  return j;
}

void apply_params(PolicyParams& p, const nlohmann::json& j,
                  const std::string& ctx) {
  check_keys(j, ctx,
             {"ridge", "delta1", "delta2", "tau", "rho", "noise_sd", "gamma_a",
              "gamma_b", "gibbs_every", "name"});
  if (j.contains("ridge")) p.ridge = j.at("ridge").get<double>();
  if (j.contains("delta1")) p.delta1 = j.at("delta1").get<double>();
  if (j.contains("delta2")) p.delta2 = j.at("delta2").get<double>();
  if (j.contains("tau")) p.tau = j.at("tau").get<int>();
  if (j.contains("rho")) p.rho = j.at("rho").get<double>();
  if (j.contains("noise_sd")) p.noise_sd = j.at("noise_sd").get<double>();
  if (j.contains("gamma_a")) p.gamma_a = j.at("gamma_a").get<double>();
  if (j.contains("gamma_b")) p.gamma_b = j.at("gamma_b").get<double>();
  if (j.contains("gibbs_every")) p.gibbs_every = j.at("gibbs_every").get<int>();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double sample_stderr(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  if (policies.empty())
    throw std::invalid_argument("config: policy list is empty");
  if (replications < 1)
    throw std::invalid_argument("config: replications must be >= 1");
  if (threads < 0)
    throw std::invalid_argument("config: threads must be >= 0");
  std::set<std::string> seen;
  for (const PolicySpec& spec : policies) {
    if (!seen.insert(spec.name).second)
      throw std::invalid_argument("config: duplicate policy " + spec.name);
    // Resolves names, tau and noise defaults; throws on bad values.
    PolicyConfig pc = resolve_policy_config(spec, env);
    Rng probe(0);
    make_policy(spec.name, pc, probe);
  }
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  check_keys(j, "",
             {"schema_version", "env", "policies", "params", "replications",
              "seed", "out_dir", "threads", "export_traces"});
  require_schema(j);
  ExperimentConfig config;
  config.env = parse_env(j.at("env"));

  PolicyParams defaults;
  if (j.contains("params")) apply_params(defaults, j.at("params"), "params.");

  if (!j.contains("policies") || !j.at("policies").is_array())
    throw std::invalid_argument("config: policies must be an array");
  for (const auto& entry : j.at("policies")) {
    PolicySpec spec;
    spec.params = defaults;
    if (entry.is_string()) {
      spec.name = entry.get<std::string>();
    } else if (entry.is_object()) {
      if (!entry.contains("name"))
        throw std::invalid_argument("config: policy entry needs a name");
      spec.name = entry.at("name").get<std::string>();
      apply_params(spec.params, entry, "policies." + spec.name + ".");
    } else {
      throw std::invalid_argument("config: policy entries are names or objects");
    }
    config.policies.push_back(std::move(spec));
  }

  if (j.contains("replications"))
    config.replications = j.at("replications").get<int>();
  if (j.contains("seed")) config.master_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("threads")) config.threads = j.at("threads").get<int>();
  if (j.contains("export_traces"))
    config.export_traces = j.at("export_traces").get<bool>();
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

PolicyConfig resolve_policy_config(const PolicySpec& spec,
                                   const EnvConfig& env) {
  PolicyConfig pc;
  pc.dim = env.dim;
  pc.ridge = spec.params.ridge;
  pc.delta1 = spec.params.delta1;
  pc.delta2 = spec.params.delta2;
  pc.rho = spec.params.rho;
  pc.gamma_a = spec.params.gamma_a;
  pc.gamma_b = spec.params.gamma_b;
  pc.gibbs_every = spec.params.gibbs_every;
  pc.noise_sd =
      spec.params.noise_sd > 0.0 ? spec.params.noise_sd : env.noise_sd;
  if (pc.noise_sd <= 0.0)
    throw std::invalid_argument(
        "config: params.noise_sd must be set when env noise_sd is 0");
  pc.window = spec.params.tau;
  pc.window = pc.detector_config().window;  // resolve tau, validate ranges
  return pc;
}

std::uint64_t trace_seed(std::uint64_t master, int rep) {
  return Rng::derive(master, 1, static_cast<std::uint64_t>(rep));
}

std::uint64_t serve_seed(std::uint64_t master, int rep) {
  return Rng::derive(master, 2, static_cast<std::uint64_t>(rep));
}

std::uint64_t policy_seed(std::uint64_t master, int rep, int policy_index) {
  return Rng::derive(master, 1000 + static_cast<std::uint64_t>(policy_index),
                     static_cast<std::uint64_t>(rep));
}

RegretCurve run_cell(const ExperimentConfig& config, int rep,
                     int policy_index) {
  const PolicySpec& spec = config.policies.at(policy_index);
  Rng trace_rng(trace_seed(config.master_seed, rep));
  const EnvironmentTrace trace = generate_trace(config.env, trace_rng);
  Rng serve_rng(serve_seed(config.master_seed, rep));
  Rng policy_rng(policy_seed(config.master_seed, rep, policy_index));

  const PolicyConfig pc = resolve_policy_config(spec, config.env);
  std::unique_ptr<Policy> policy = make_policy(spec.name, pc, policy_rng);

  RegretCurve curve;
  curve.policy = spec.name;
  curve.seed = trace_seed(config.master_seed, rep);
  const bool oracle = policy->requires_ground_truth();
  for (int t = 0; t < config.env.horizon; ++t) {
    for (int u = 0; u < config.env.n_users; ++u) {
      const RoundOutcome out = serve_round(trace, t, u, serve_rng);
      if (oracle) policy->inform_ground_truth(u, trace.true_model_id(u, t));
      const Decision decision = policy->choose(u, out.candidates, policy_rng);
      record_regret(curve, out, decision);
      policy->feedback(u, out.candidates[decision.arm_index],
                       out.noisy_reward(decision.arm_index), policy_rng);
    }
  }
  return curve;
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int reps = config.replications;
  const int n_policies = static_cast<int>(config.policies.size());
  const int n_cells = reps * n_policies;

  std::vector<RegretCurve> curves(n_cells);
  std::vector<double> wall(n_cells, 0.0);
  std::vector<std::exception_ptr> errors(n_cells);
  std::atomic<int> next{0};

  auto work = [&]() {
    while (true) {
      const int cell = next.fetch_add(1);
      if (cell >= n_cells) break;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        curves[cell] = run_cell(config, cell % reps, cell / reps);
      } catch (...) {
        errors[cell] = std::current_exception();
      }
      wall[cell] = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    }
  };

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n_cells));
  std::vector<std::thread> workers;
  for (int i = 1; i < n_threads; ++i) workers.emplace_back(work);
  work();
  for (std::thread& w : workers) w.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  RunResult result;
  result.curves = std::move(curves);

  nlohmann::json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["master_seed"] = config.master_seed;
  manifest["replications"] = reps;
  manifest["env"] = env_to_json(config.env);
  manifest["policies"] = nlohmann::json::array();
  for (const PolicySpec& spec : config.policies) {
    const PolicyConfig pc = resolve_policy_config(spec, config.env);
    manifest["policies"].push_back(nlohmann::json{
        {"name", spec.name},
        {"ridge", pc.ridge},
        {"delta1", pc.delta1},
        {"delta2", pc.delta2},
        {"tau", pc.window},
        {"rho", pc.rho},
        {"noise_sd", pc.noise_sd},
        {"gamma_a", pc.gamma_a},
        {"gamma_b", pc.gamma_b},
        {"gibbs_every", pc.gibbs_every}});
  }
  manifest["seeds"] = nlohmann::json::array();
  for (int r = 0; r < reps; ++r) {
    nlohmann::json row{{"rep", r},
                       {"trace", trace_seed(config.master_seed, r)},
                       {"serve", serve_seed(config.master_seed, r)}};
    nlohmann::json per_policy;
    for (int p = 0; p < n_policies; ++p)
      per_policy[config.policies[p].name] =
          policy_seed(config.master_seed, r, p);
    row["policy"] = per_policy;
    manifest["seeds"].push_back(row);
  }
  nlohmann::json wall_json;
  for (int p = 0; p < n_policies; ++p) {
    nlohmann::json per_rep = nlohmann::json::array();
    for (int r = 0; r < reps; ++r) per_rep.push_back(wall[p * reps + r]);
    wall_json[config.policies[p].name] = per_rep;
  }
  manifest["wall_seconds"] = wall_json;
  result.manifest = std::move(manifest);
  return result;
}

void write_regret_csv(const std::string& path,
                      std::span<const RegretCurve> curves) {
  std::string buf;
  buf.reserve(1 << 20);
  buf += "policy,seed,round,instantaneous_regret,cumulative_regret\n";
  char line[192];
  for (const RegretCurve& curve : curves) {
    for (std::size_t i = 0; i < curve.instantaneous.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,%llu,%zu,%.17g,%.17g\n",
                    curve.policy.c_str(),
                    static_cast<unsigned long long>(curve.seed), i,
                    curve.instantaneous[i], curve.cumulative[i]);
      buf += line;
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

nlohmann::json run_experiment_files(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  RunResult result = run_experiment(config);

  const std::string regret_path =
      (fs::path(config.out_dir) / "regret.csv").string();
  write_regret_csv(regret_path, result.curves);
  result.manifest["artifacts"] = nlohmann::json::array({regret_path});

  if (config.export_traces) {
    for (int r = 0; r < config.replications; ++r) {
      Rng rng(trace_seed(config.master_seed, r));
      const EnvironmentTrace trace = generate_trace(config.env, rng);
      const std::string path =
          (fs::path(config.out_dir) / ("trace_rep" + std::to_string(r) + ".txt"))
              .string();
      write_trace_file(trace, path);
      result.manifest["artifacts"].push_back(path);
    }
  }

  const std::string manifest_path =
      (fs::path(config.out_dir) / "manifest.json").string();
  std::ofstream mout(manifest_path);
  if (!mout) throw std::runtime_error("cannot open output file: " + manifest_path);
  mout << result.manifest.dump(2) << '\n';
  return result.manifest;
}

RegretSummary summarize_final_regret(std::span<const RegretCurve> curves) {
  RegretSummary s;
  std::vector<double> finals;
  finals.reserve(curves.size());
  for (const RegretCurve& c : curves) finals.push_back(c.final_cumulative());
  s.reps = static_cast<int>(finals.size());
  for (double f : finals) s.mean += f;
  if (s.reps > 0) s.mean /= s.reps;
  s.stderr_mean = sample_stderr(finals);
  return s;
}

GridConfig parse_grid_config(const nlohmann::json& j) {
  if (!j.contains("grid"))
    throw std::invalid_argument("config: grid file needs a grid array");
  nlohmann::json base = j;
  base.erase("grid");
  GridConfig config;
  config.base = parse_experiment_config(base);
  for (const auto& row_json : j.at("grid")) {
    check_keys(row_json, "grid.",
               {"users", "k", "s_min", "s_max", "horizon", "noise_sd"});
    GridRow row;
    row.users = row_json.at("users").get<int>();
    row.k = row_json.at("k").get<int>();
    row.s_min = row_json.at("s_min").get<int>();
    row.s_max = row_json.at("s_max").get<int>();
    row.horizon = row_json.at("horizon").get<int>();
    row.noise_sd = row_json.at("noise_sd").get<double>();
    config.rows.push_back(row);
  }
  if (config.rows.empty())
    throw std::invalid_argument("config: grid is empty");
  return config;
}

GridConfig load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_grid_config(j);
}

ExperimentConfig apply_grid_row(const ExperimentConfig& base,
                                const GridRow& row) {
  ExperimentConfig config = base;
  config.env.n_users = row.users;
  config.env.s_min = row.s_min;
  config.env.s_max = row.s_max;
  config.env.horizon = row.horizon;
  config.env.noise_sd = row.noise_sd;
  if (auto* dp = std::get_if<DpSetting>(&config.env.setting)) {
    dp->init_k = row.k;
  } else if (auto* mix = std::get_if<FixedMixtureSetting>(&config.env.setting)) {
    mix->k = row.k;
    mix->weights.clear();
  } else {
    std::get<StationarySetting>(config.env.setting).shared_k = row.k;
  }
  config.validate();
  return config;
}

std::vector<GridSummaryRow> run_table_grid(const GridConfig& config) {
  std::vector<GridSummaryRow> summary;
  for (std::size_t i = 0; i < config.rows.size(); ++i) {
    const ExperimentConfig cell = apply_grid_row(config.base, config.rows[i]);
    const RunResult result = run_experiment(cell);
    const int reps = cell.replications;
    for (std::size_t p = 0; p < cell.policies.size(); ++p) {
      const auto slice = std::span<const RegretCurve>(result.curves)
                             .subspan(p * reps, reps);
      const RegretSummary s = summarize_final_regret(slice);
      summary.push_back(GridSummaryRow{static_cast<int>(i),
                                       cell.policies[p].name, s.mean,
                                       s.stderr_mean, s.reps});
    }
  }
  return summary;
}

void write_grid_csv(const std::string& path,
                    std::span<const GridSummaryRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "grid_row,policy,mean_regret,stderr,reps\n";
  for (const GridSummaryRow& row : rows)
    out << row.grid_row << ',' << row.policy << ','
        << format_double(row.mean_regret) << ','
        << format_double(row.stderr_mean) << ',' << row.reps << '\n';
}

nlohmann::json run_table_grid_files(const GridConfig& config) {
  fs::create_directories(config.base.out_dir);
  const std::vector<GridSummaryRow> rows = run_table_grid(config);
  const std::string csv_path =
      (fs::path(config.base.out_dir) / "grid_summary.csv").string();
  write_grid_csv(csv_path, rows);

  nlohmann::json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["master_seed"] = config.base.master_seed;
  manifest["rows"] = nlohmann::json::array();
  for (const GridRow& row : config.rows)
    manifest["rows"].push_back(nlohmann::json{{"users", row.users},
                                              {"k", row.k},
                                              {"s_min", row.s_min},
                                              {"s_max", row.s_max},
                                              {"horizon", row.horizon},
                                              {"noise_sd", row.noise_sd}});
  manifest["artifacts"] = nlohmann::json::array({csv_path});
  const std::string manifest_path =
      (fs::path(config.base.out_dir) / "grid_manifest.json").string();
  std::ofstream mout(manifest_path);
  if (!mout) throw std::runtime_error("cannot open output file: " + manifest_path);
  mout << manifest.dump(2) << '\n';
  return manifest;
}

std::vector<PolicyReplay> run_replay(const ExperimentConfig& config,
                                     const std::string& log_path) {
  int dim = 0;
  {
    std::ifstream probe(log_path);
    if (!probe) throw std::runtime_error("cannot open event log: " + log_path);
    EventLogReader reader(probe);
    dim = reader.dim();
  }
  EnvConfig env_like = config.env;
  env_like.dim = dim;

  std::vector<PolicySpec> specs = config.policies;
  bool has_random = false;
  for (const PolicySpec& spec : specs) {
    if (spec.name == "oracle_linucb")
      throw std::invalid_argument(
          "replay: oracle_linucb needs ground truth, unavailable in logs");
    if (spec.name == "random") has_random = true;
  }
  if (!has_random) specs.push_back(PolicySpec{"random", PolicyParams{}});

  std::vector<PolicyReplay> replays;
  std::vector<double> random_curve;
  for (std::size_t p = 0; p < specs.size(); ++p) {
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open event log: " + log_path);
    EventLogReader reader(in);
    Rng rng(policy_seed(config.master_seed, 0, static_cast<int>(p)));
    const PolicyConfig pc = resolve_policy_config(specs[p], env_like);
    std::unique_ptr<Policy> policy = make_policy(specs[p].name, pc, rng);
    PolicyReplay entry;
    entry.policy = specs[p].name;
    entry.result = replay(*policy, reader, rng);
    if (specs[p].name == "random")
      random_curve = entry.result.cumulative_reward;
    replays.push_back(std::move(entry));
  }
  for (PolicyReplay& entry : replays)
    entry.normalized =
        normalized_reward(entry.result.cumulative_reward, random_curve);
  return replays;
}

nlohmann::json run_replay_files(const ExperimentConfig& config,
                                const std::string& log_path) {
  fs::create_directories(config.out_dir);
  const std::vector<PolicyReplay> replays = run_replay(config, log_path);

  const std::string curve_path =
      (fs::path(config.out_dir) / "replay.csv").string();
  {
    std::string buf;
    buf.reserve(1 << 20);
    buf += "record,policy,cumulative_reward,normalized\n";
    char line[160];
    for (const PolicyReplay& entry : replays) {
      for (std::size_t i = 0; i < entry.result.cumulative_reward.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%s,%.17g,%.17g\n", i,
                      entry.policy.c_str(), entry.result.cumulative_reward[i],
                      entry.normalized[i]);
        buf += line;
      }
    }
    std::ofstream out(curve_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + curve_path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }

  const std::string summary_path =
      (fs::path(config.out_dir) / "replay_summary.csv").string();
  {
    std::ofstream out(summary_path);
    if (!out)
      throw std::runtime_error("cannot open output file: " + summary_path);
    out << "policy,total_events,matched,reward_sum,reward_rate,normalized_rate\n";
    double random_rate = 0.0;
    for (const PolicyReplay& entry : replays)
      if (entry.policy == "random") random_rate = entry.result.reward_rate();
    for (const PolicyReplay& entry : replays) {
      const double norm_rate =
          random_rate > 0.0 ? entry.result.reward_rate() / random_rate
                            : std::numeric_limits<double>::quiet_NaN();
      out << entry.policy << ',' << entry.result.total_events << ','
          << entry.result.matched << ','
          << format_double(entry.result.reward_sum) << ','
          << format_double(entry.result.reward_rate()) << ','
          << format_double(norm_rate) << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["log"] = log_path;
  manifest["artifacts"] = nlohmann::json::array({curve_path, summary_path});
  const std::string manifest_path =
      (fs::path(config.out_dir) / "replay_manifest.json").string();
  std::ofstream mout(manifest_path);
  if (!mout) throw std::runtime_error("cannot open output file: " + manifest_path);
  mout << manifest.dump(2) << '\n';
  return manifest;
}

void generate_event_log(const EnvConfig& env, long events, std::uint64_t seed,
                        std::ostream& out) {
  env.validate();
  const long capacity =
      static_cast<long>(env.n_users) * static_cast<long>(env.horizon);
  if (events < 1 || events > capacity)
    throw std::invalid_argument(
        "gen-log: events must lie in [1, users*horizon]");

  Rng trace_rng(trace_seed(seed, 0));
  const EnvironmentTrace trace = generate_trace(env, trace_rng);
  Rng serve_rng(serve_seed(seed, 0));
  Rng arm_rng(Rng::derive(seed, 3, 0));

  EventLogWriter writer(out, env.dim, env.candidates_per_round);
  long written = 0;
  for (int t = 0; t < env.horizon && written < events; ++t) {
    for (int u = 0; u < env.n_users && written < events; ++u) {
      const RoundOutcome round = serve_round(trace, t, u, serve_rng);
      EventLogRecord record;
      record.round = written;
      record.user = u;
      record.logged_arm = arm_rng.uniform_int(env.candidates_per_round);
      record.reward = round.noisy_reward(record.logged_arm);
      record.candidates = round.candidates;
      writer.write(record);
      ++written;
    }
  }
}

std::string generate_event_log_file(const ExperimentConfig& config,
                                    long events) {
  fs::create_directories(config.out_dir);
  if (events <= 0)
    events = static_cast<long>(config.env.n_users) *
             static_cast<long>(config.env.horizon);
  const std::string path = (fs::path(config.out_dir) / "events.log").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  generate_event_log(config.env, events, config.master_seed, out);
  return path;
}

}  // namespace codband

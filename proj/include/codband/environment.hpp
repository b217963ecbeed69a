#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "codband/bayes_linear.hpp"
#include "codband/rng.hpp"

namespace codband {

/// Ground-truth parameters drawn from a Chinese-restaurant process seeded
/// with init_k pre-generated unit vectors.
struct DpSetting {
  double alpha0 = 1.0;
  int init_k = 10;
};

/// Ground-truth parameters drawn from a fixed set of k unit vectors with the
/// given mixture weights (empty -> uniform).
struct FixedMixtureSetting {
  int k = 10;
  std::vector<double> weights;
};

/// One parameter per user for the whole horizon. shared_k > 0 assigns users
/// uniformly among shared_k unit vectors; shared_k == 0 draws an independent
/// parameter per user.
struct StationarySetting {
  int shared_k = 2;
};

using EnvSetting = std::variant<DpSetting, FixedMixtureSetting, StationarySetting>;

struct EnvConfig {
  int n_users = 10;
  int horizon = 100;
  int dim = 5;
  int pool_size = 1000;
  int candidates_per_round = 25;
  int s_min = 1;
  int s_max = 1;
  double noise_sd = 0.1;
  EnvSetting setting = StationarySetting{};
  std::uint64_t seed = 0;

  void validate() const;
};

/// One stationary period of one user.
struct Period {
  int start = 0;     // first round governed by this parameter
  int model_id = 0;  // index into the unique ground-truth parameter registry
  Eigen::VectorXd theta;
};

struct EnvironmentTrace {
  EnvConfig config;
  std::vector<Context> arm_pool;
  std::vector<std::vector<Period>> user_periods;
  int n_unique_models = 0;

  const Period& period_at(int user, int t) const;
  int true_model_id(int user, int t) const { return period_at(user, t).model_id; }
  const Eigen::VectorXd& true_theta(int user, int t) const {
    return period_at(user, t).theta;
  }
};

/// Everything the runner needs about one (round, user) interaction. The
/// noise draw is fixed up front so the outcome does not depend on which arm
/// the policy then picks.
struct RoundOutcome {
  std::vector<int> candidate_indices;
  std::vector<Context> candidates;
  Eigen::VectorXd expected;
  double best_expected = 0.0;
  double noise = 0.0;

  double noisy_reward(int arm) const { return expected[arm] + noise; }
};

EnvironmentTrace generate_trace(const EnvConfig& config, Rng& rng);

RoundOutcome serve_round(const EnvironmentTrace& trace, int t, int user,
                         Rng& rng);

/// Detectability audit: fraction of pool arms whose expected reward moves by
/// more than delta across each change point.
struct ChangeAudit {
  int user = 0;
  int change_index = 0;  // 1-based index of the change within the user
  double rho = 0.0;
};

std::vector<ChangeAudit> audit_assumption1(const EnvironmentTrace& trace,
                                           double delta);

/// Line-delimited trace export, one record per user-period:
/// user start theta... model_id.
void write_trace(const EnvironmentTrace& trace, std::ostream& out);
void write_trace_file(const EnvironmentTrace& trace, const std::string& path);

}  // namespace codband

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "codband/bayes_linear.hpp"
#include "codband/change_detect.hpp"
#include "codband/dp_pool.hpp"
#include "codband/rng.hpp"

namespace codband {

/// One arm choice plus diagnostics.
struct Decision {
  int arm_index = 0;
  std::optional<int> model_key;  // global model used (collaborative policies)
  Eigen::VectorXd theta;         // parameter vector behind the argmax
};

struct FeedbackResult {
  bool detected = false;  // change detector fired this round
};

/// Hyperparameters shared by the policies. window == 0 resolves to
/// recommended_tau(rho) at construction.
struct PolicyConfig {
  int dim = 1;
  double ridge = 1.0;
  double noise_sd = 0.1;
  double delta1 = 0.05;
  double delta2 = 0.05;
  int window = 0;
  double rho = 0.5;
  double gamma_a = 1.0;
  double gamma_b = 1.0;
  int gibbs_every = 1;

  DetectorConfig detector_config() const;
};

/// Shared decision interface. feedback for round t is delivered before
/// choose for round t+1 of the same user.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual Decision choose(int user, const std::vector<Context>& candidates,
                          Rng& rng) = 0;
  virtual FeedbackResult feedback(int user, const Context& x, double reward,
                                  Rng& rng) = 0;

  /// Simulation-only policies (oracle) need the environment's true model id
  /// for (user, round) before each choose.
  virtual bool requires_ground_truth() const { return false; }
  virtual void inform_ground_truth(int /*user*/, int /*true_model_id*/) {}
};

/// Collaborative dynamic bandit: DP pool of shared models, collapsed Gibbs
/// reassignment of each user's recent observations, confidence-bound change
/// detection and Thompson sampling for arm selection.
class CoDBandPolicy : public Policy {
 public:
  CoDBandPolicy(const PolicyConfig& config, Rng& init_rng);

  std::string name() const override { return "codband"; }
  Decision choose(int user, const std::vector<Context>& candidates,
                  Rng& rng) override;
  FeedbackResult feedback(int user, const Context& x, double reward,
                          Rng& rng) override;

  const ModelPool& pool() const { return pool_; }
  int dataset_size(int user) const;
  std::optional<int> model_key(int user) const;

 private:
  struct UserState {
    std::vector<Observation> dataset;  // observations since the last reset
    RidgeAccumulator detector_ridge;
    DetectorState detector;
    std::optional<int> model_key;
    long rounds = 0;

    explicit UserState(const PolicyConfig& config)
        : detector_ridge(config.dim, config.ridge) {}
  };

  UserState& user_state(int user);

  PolicyConfig config_;
  DetectorConfig detector_config_;
  ModelPool pool_;
  std::unordered_map<int, UserState> users_;
};

/// Per-user LinUCB baseline: argmax of ridge prediction plus confidence bound.
class LinUcbPolicy : public Policy {
 public:
  explicit LinUcbPolicy(const PolicyConfig& config);

  std::string name() const override { return "linucb"; }
  Decision choose(int user, const std::vector<Context>& candidates,
                  Rng& rng) override;
  FeedbackResult feedback(int user, const Context& x, double reward,
                          Rng& rng) override;

 private:
  PolicyConfig config_;
  std::unordered_map<int, RidgeAccumulator> users_;
};

/// LinUCB keyed by the environment's true global model id, sharing
/// observations across all users currently governed by that model.
/// Only usable in simulation.
class OracleLinUcbPolicy : public Policy {
 public:
  explicit OracleLinUcbPolicy(const PolicyConfig& config);

  std::string name() const override { return "oracle_linucb"; }
  Decision choose(int user, const std::vector<Context>& candidates,
                  Rng& rng) override;
  FeedbackResult feedback(int user, const Context& x, double reward,
                          Rng& rng) override;
  bool requires_ground_truth() const override { return true; }
  void inform_ground_truth(int user, int true_model_id) override;

 private:
  RidgeAccumulator& model_state(int model_id);
  int truth_for(int user) const;

  PolicyConfig config_;
  std::unordered_map<int, int> truth_;   // user -> current true model id
  std::unordered_map<int, RidgeAccumulator> models_;
};

/// Ablation isolating collaboration: per-user Thompson sampling with the
/// same change detector; the posterior resets to the prior on detection.
class RestartTsPolicy : public Policy {
 public:
  explicit RestartTsPolicy(const PolicyConfig& config);

  std::string name() const override { return "restart_ts"; }
  Decision choose(int user, const std::vector<Context>& candidates,
                  Rng& rng) override;
  FeedbackResult feedback(int user, const Context& x, double reward,
                          Rng& rng) override;

 private:
  struct UserState {
    LinearPosterior posterior;
    RidgeAccumulator detector_ridge;
    DetectorState detector;

    explicit UserState(const PolicyConfig& config)
        : posterior(config.dim, config.ridge, config.noise_sd),
          detector_ridge(config.dim, config.ridge) {}
  };

  UserState& user_state(int user);

  PolicyConfig config_;
  DetectorConfig detector_config_;
  std::unordered_map<int, UserState> users_;
};

/// Uniform-random arm selection; the logging policy for offline replay.
class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  Decision choose(int user, const std::vector<Context>& candidates,
                  Rng& rng) override;
  FeedbackResult feedback(int user, const Context& x, double reward,
                          Rng& rng) override;
};

/// Factory for the policy names accepted by the experiment runner:
/// codband, linucb, oracle_linucb, restart_ts, random.
std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const PolicyConfig& config, Rng& init_rng);

/// Index of the highest score; ties resolve to the lowest index.
int argmax_index(const Eigen::VectorXd& scores);

/// Shared candidate validation: nonempty, dimension d, norm <= 1 + 1e-9.
void validate_candidates(const std::vector<Context>& candidates, int dim);

}  // namespace codband

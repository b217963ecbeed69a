#include "codband/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace codband {

int argmax_index(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

void validate_candidates(const std::vector<Context>& candidates, int dim) {
  if (candidates.empty())
    throw std::invalid_argument("policy: candidate list is empty");
  for (const Context& x : candidates) {
    if (x.size() != dim)
      throw std::invalid_argument("policy: candidate dimension mismatch");
    if (x.norm() > 1.0 + 1e-9)
      throw std::invalid_argument("policy: candidate norm exceeds 1");
  }
}

DetectorConfig PolicyConfig::detector_config() const {
  DetectorConfig d;
  d.delta1 = delta1;
  d.delta2 = delta2;
  d.ridge = ridge;
  d.noise_sd = noise_sd;
  d.window = window;
  if (d.window == 0) {
    d.window = 1;  // placeholder so recommended_tau can validate the rest
    d.window = recommended_tau(rho, d);
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// CoDBand

CoDBandPolicy::CoDBandPolicy(const PolicyConfig& config, Rng& init_rng)
    : config_(config),
      detector_config_(config.detector_config()),
      pool_(config.dim, config.ridge, config.noise_sd, /*alpha0=*/1.0,
            config.gamma_a, config.gamma_b) {
  if (config_.gibbs_every < 1)
    throw std::invalid_argument("codband: gibbs_every must be >= 1");
  config_.window = detector_config_.window;
  pool_.init_alpha0(init_rng);
}

CoDBandPolicy::UserState& CoDBandPolicy::user_state(int user) {
  auto it = users_.find(user);
  if (it == users_.end())
    it = users_.emplace(user, UserState(config_)).first;
  return it->second;
}

int CoDBandPolicy::dataset_size(int user) const {
  auto it = users_.find(user);
  return it == users_.end() ? 0 : static_cast<int>(it->second.dataset.size());
}

std::optional<int> CoDBandPolicy::model_key(int user) const {
  auto it = users_.find(user);
  return it == users_.end() ? std::nullopt : it->second.model_key;
}

Decision CoDBandPolicy::choose(int user, const std::vector<Context>& candidates,
                               Rng& rng) {
  validate_candidates(candidates, config_.dim);
  UserState& state = user_state(user);
  // A user with an empty observation window (new, or just past a detected
  // change) draws a model from the Chinese-restaurant prior.
  if (state.dataset.empty()) state.model_key = pool_.sample_prior_model(rng);

  Decision decision;
  decision.model_key = state.model_key;
  decision.theta = pool_.model(*state.model_key).posterior.sample(rng);
  Eigen::VectorXd scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[static_cast<int>(i)] = candidates[i].dot(decision.theta);
  decision.arm_index = argmax_index(scores);
  return decision;
}

FeedbackResult CoDBandPolicy::feedback(int user, const Context& x,
                                       double reward, Rng& rng) {
  auto it = users_.find(user);
  if (it == users_.end() || !it->second.model_key)
    throw std::logic_error("codband: feedback before choose");
  UserState& state = it->second;

  // Badness bit from the pre-update estimator over D^u.
  const double predicted = state.detector_ridge.predict(x);
  const double cb = state.detector_ridge.confidence_bound(
      x, detector_config_.noise_sd, detector_config_.delta1);
  const int bit = test_bit(predicted, reward, cb, detector_config_);
  state.detector.push(bit, detector_config_);

  // Extend the user's window and the assigned global model.
  state.dataset.push_back(Observation{x, reward});
  state.detector_ridge.add(x, reward);
  pool_.absorb_into(*state.model_key, x, reward);

  // Collapsed Gibbs reassignment of the whole window, then the
  // concentration-parameter step.
  state.rounds += 1;
  if (state.rounds % config_.gibbs_every == 0)
    state.model_key = pool_.gibbs_reassign(*state.model_key, state.dataset, rng);
  pool_.resample_alpha0(pool_.total_assignments(), rng);

  FeedbackResult result;
  result.detected = state.detector.check(detector_config_);
  if (result.detected) {
    state.dataset.clear();
    state.detector_ridge.reset();
    state.detector.reset();
  }
  return result;
}

// ---------------------------------------------------------------------------
// LinUCB

LinUcbPolicy::LinUcbPolicy(const PolicyConfig& config) : config_(config) {
  if (config_.delta1 <= 0.0 || config_.delta1 >= 1.0)
    throw std::invalid_argument("linucb: delta1 must lie in (0, 1)");
}

Decision LinUcbPolicy::choose(int user, const std::vector<Context>& candidates,
                              Rng& /*rng*/) {
  validate_candidates(candidates, config_.dim);
  auto it = users_.find(user);
  if (it == users_.end())
    it = users_.emplace(user, RidgeAccumulator(config_.dim, config_.ridge))
             .first;
  const RidgeAccumulator& acc = it->second;

  Eigen::VectorXd scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[static_cast<int>(i)] =
        acc.predict(candidates[i]) +
        acc.confidence_bound(candidates[i], config_.noise_sd, config_.delta1);
  Decision decision;
  decision.arm_index = argmax_index(scores);
  decision.theta = acc.estimate();
  return decision;
}

FeedbackResult LinUcbPolicy::feedback(int user, const Context& x, double reward,
                                      Rng& /*rng*/) {
  auto it = users_.find(user);
  if (it == users_.end())
    throw std::logic_error("linucb: feedback before choose");
  it->second.add(x, reward);
  return {};
}

// ---------------------------------------------------------------------------
// Oracle LinUCB

OracleLinUcbPolicy::OracleLinUcbPolicy(const PolicyConfig& config)
    : config_(config) {}

void OracleLinUcbPolicy::inform_ground_truth(int user, int true_model_id) {
  truth_[user] = true_model_id;
}

int OracleLinUcbPolicy::truth_for(int user) const {
  auto it = truth_.find(user);
  if (it == truth_.end())
    throw std::logic_error(
        "oracle_linucb: ground-truth model id unavailable (simulation only)");
  return it->second;
}

RidgeAccumulator& OracleLinUcbPolicy::model_state(int model_id) {
  auto it = models_.find(model_id);
  if (it == models_.end())
    it = models_
             .emplace(model_id, RidgeAccumulator(config_.dim, config_.ridge))
             .first;
  return it->second;
}

Decision OracleLinUcbPolicy::choose(int user,
                                    const std::vector<Context>& candidates,
                                    Rng& /*rng*/) {
  validate_candidates(candidates, config_.dim);
  RidgeAccumulator& acc = model_state(truth_for(user));
  Eigen::VectorXd scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[static_cast<int>(i)] =
        acc.predict(candidates[i]) +
        acc.confidence_bound(candidates[i], config_.noise_sd, config_.delta1);
  Decision decision;
  decision.arm_index = argmax_index(scores);
  decision.model_key = truth_for(user);
  decision.theta = acc.estimate();
  return decision;
}

FeedbackResult OracleLinUcbPolicy::feedback(int user, const Context& x,
                                            double reward, Rng& /*rng*/) {
  model_state(truth_for(user)).add(x, reward);
  return {};
}

// ---------------------------------------------------------------------------
// Restart Thompson sampling

RestartTsPolicy::RestartTsPolicy(const PolicyConfig& config)
    : config_(config), detector_config_(config.detector_config()) {
  config_.window = detector_config_.window;
}

RestartTsPolicy::UserState& RestartTsPolicy::user_state(int user) {
  auto it = users_.find(user);
  if (it == users_.end())
    it = users_.emplace(user, UserState(config_)).first;
  return it->second;
}

Decision RestartTsPolicy::choose(int user,
                                 const std::vector<Context>& candidates,
                                 Rng& rng) {
  validate_candidates(candidates, config_.dim);
  UserState& state = user_state(user);
  Decision decision;
  decision.theta = state.posterior.sample(rng);
  Eigen::VectorXd scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[static_cast<int>(i)] = candidates[i].dot(decision.theta);
  decision.arm_index = argmax_index(scores);
  return decision;
}

FeedbackResult RestartTsPolicy::feedback(int user, const Context& x,
                                         double reward, Rng& /*rng*/) {
  auto it = users_.find(user);
  if (it == users_.end())
    throw std::logic_error("restart_ts: feedback before choose");
  UserState& state = it->second;

  const double predicted = state.detector_ridge.predict(x);
  const double cb = state.detector_ridge.confidence_bound(
      x, detector_config_.noise_sd, detector_config_.delta1);
  const int bit = test_bit(predicted, reward, cb, detector_config_);
  state.detector.push(bit, detector_config_);

  state.detector_ridge.add(x, reward);
  state.posterior.absorb(x, reward);

  FeedbackResult result;
  result.detected = state.detector.check(detector_config_);
  if (result.detected) {
    state.posterior =
        LinearPosterior(config_.dim, config_.ridge, config_.noise_sd);
    state.detector_ridge.reset();
    state.detector.reset();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Random

Decision RandomPolicy::choose(int /*user*/,
                              const std::vector<Context>& candidates,
                              Rng& rng) {
  if (candidates.empty())
    throw std::invalid_argument("policy: candidate list is empty");
  Decision decision;
  decision.arm_index = rng.uniform_int(static_cast<int>(candidates.size()));
  return decision;
}

FeedbackResult RandomPolicy::feedback(int /*user*/, const Context& /*x*/,
                                      double /*reward*/, Rng& /*rng*/) {
  return {};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const PolicyConfig& config, Rng& init_rng) {
  if (name == "codband") return std::make_unique<CoDBandPolicy>(config, init_rng);
  if (name == "linucb") return std::make_unique<LinUcbPolicy>(config);
  if (name == "oracle_linucb")
    return std::make_unique<OracleLinUcbPolicy>(config);
  if (name == "restart_ts") return std::make_unique<RestartTsPolicy>(config);
  if (name == "random") return std::make_unique<RandomPolicy>();
  throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace codband

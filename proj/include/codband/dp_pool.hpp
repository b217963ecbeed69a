#pragma once

#include <map>
#include <span>
#include <vector>

#include "codband/bayes_linear.hpp"
#include "codband/rng.hpp"

namespace codband {

/// One globally shared bandit model plus the number of user stationary
/// periods currently counted against it.
struct GlobalModel {
  LinearPosterior posterior;
  int assign_count = 0;
};

/// Categorical distribution over the pool: probs[i] belongs to keys[i] for
/// i < keys.size(), and probs.back() is the fresh-model branch.
struct ModelWeights {
  std::vector<int> keys;
  std::vector<double> probs;
};

/// Dirichlet-Process pool of shared linear bandit models.
///
/// Models are keyed by monotonically increasing integers that are never
/// reused. All models share (dim, ridge, noise_sd). The concentration
/// parameter alpha0 carries a Gamma(a, b) prior (shape/rate) and is
/// resampled with the auxiliary-variable step of Escobar and West.
class ModelPool {
 public:
  ModelPool(int dim, double ridge, double noise_sd, double alpha0,
            double gamma_a, double gamma_b);

  int dim() const { return dim_; }
  double ridge() const { return ridge_; }
  double noise_sd() const { return noise_sd_; }
  double alpha0() const { return alpha0_; }
  double gamma_a() const { return gamma_a_; }
  double gamma_b() const { return gamma_b_; }

  int size() const { return static_cast<int>(models_.size()); }
  bool contains(int key) const { return models_.count(key) > 0; }
  std::vector<int> keys() const;
  const GlobalModel& model(int key) const;
  int total_assignments() const;
  int total_observations() const;

  /// Draw alpha0 from its Gamma prior (Algorithm start-up).
  void init_alpha0(Rng& rng) { alpha0_ = rng.gamma(gamma_a_, gamma_b_); }

  /// Chinese-restaurant prior over (existing models, fresh model):
  /// entry k proportional to assign_count_k, last entry proportional to alpha0.
  ModelWeights crp_prior_weights() const;

  /// Categorical draw from crp_prior_weights. A fresh prior model is created
  /// when the last branch is drawn. The chosen model's count is incremented.
  int sample_prior_model(Rng& rng);

  /// Collapsed posterior over (existing models, fresh model) for a dataset:
  /// entry k proportional to n_k * prod_i predictive(model k, obs_i), fresh
  /// branch proportional to alpha0 * prod_i prior predictive. Accumulated in
  /// log space and normalized.
  ModelWeights posterior_weights(std::span<const Observation> dataset) const;

  /// One collapsed Gibbs step for a user's observation set: removes the
  /// dataset from its current model (dropping the model if its count hits
  /// zero), samples a model from posterior_weights, absorbs the dataset
  /// there and returns the selected key.
  int gibbs_reassign(int current_key, std::span<const Observation> dataset,
                     Rng& rng);

  /// One auxiliary-variable Gibbs step for alpha0 given the model count and
  /// the total number of assignments. Returns the new value.
  double resample_alpha0(int n_assignments, Rng& rng);

  /// Bayesian rank-one update of one model (arm-feedback path).
  void absorb_into(int key, const Context& x, double reward);

 private:
  GlobalModel& model_mut(int key);
  int create_model();

  int dim_;
  double ridge_;
  double noise_sd_;
  double alpha0_;
  double gamma_a_;
  double gamma_b_;
  int next_key_ = 1;
  std::map<int, GlobalModel> models_;
};

}  // namespace codband

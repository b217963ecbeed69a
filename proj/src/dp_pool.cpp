#include "codband/dp_pool.hpp"

#include <cmath>

#include "codband/stats.hpp"

namespace codband {

ModelPool::ModelPool(int dim, double ridge, double noise_sd, double alpha0,
                     double gamma_a, double gamma_b)
    : dim_(dim),
      ridge_(ridge),
      noise_sd_(noise_sd),
      alpha0_(alpha0),
      gamma_a_(gamma_a),
      gamma_b_(gamma_b) {
  if (dim < 1) throw std::invalid_argument("ModelPool: dim must be >= 1");
  if (ridge <= 0.0) throw std::invalid_argument("ModelPool: ridge must be > 0");
  if (noise_sd <= 0.0)
    throw std::invalid_argument("ModelPool: noise_sd must be > 0");
  if (alpha0 <= 0.0)
    throw std::invalid_argument("ModelPool: alpha0 must be > 0");
  if (gamma_a <= 0.0 || gamma_b <= 0.0)
    throw std::invalid_argument("ModelPool: Gamma prior needs a > 0, b > 0");
}

std::vector<int> ModelPool::keys() const {
  std::vector<int> out;
  out.reserve(models_.size());
  for (const auto& [key, model] : models_) out.push_back(key);
  return out;
}

const GlobalModel& ModelPool::model(int key) const {
  auto it = models_.find(key);
  if (it == models_.end())
    throw std::invalid_argument("ModelPool: no model with key " +
                                std::to_string(key));
  return it->second;
}

GlobalModel& ModelPool::model_mut(int key) {
  auto it = models_.find(key);
  if (it == models_.end())
    throw std::invalid_argument("ModelPool: no model with key " +
                                std::to_string(key));
  return it->second;
}

int ModelPool::total_assignments() const {
  int n = 0;
  for (const auto& [key, model] : models_) n += model.assign_count;
  return n;
}

int ModelPool::total_observations() const {
  int n = 0;
  for (const auto& [key, model] : models_) n += model.posterior.n_obs();
  return n;
}

int ModelPool::create_model() {
  const int key = next_key_++;
  models_.emplace(key, GlobalModel{LinearPosterior(dim_, ridge_, noise_sd_), 0});
  return key;
}

ModelWeights ModelPool::crp_prior_weights() const {
  ModelWeights w;
  w.keys = keys();
  w.probs.reserve(w.keys.size() + 1);
  double total = alpha0_;
  for (int key : w.keys) {
    const double nk = models_.at(key).assign_count;
    w.probs.push_back(nk);
    total += nk;
  }
  w.probs.push_back(alpha0_);
  for (double& p : w.probs) p /= total;
  return w;
}

int ModelPool::sample_prior_model(Rng& rng) {
  const ModelWeights w = crp_prior_weights();
  const int idx = rng.categorical(w.probs);
  const int key = idx < static_cast<int>(w.keys.size()) ? w.keys[idx]
                                                        : create_model();
  model_mut(key).assign_count += 1;
  return key;
}

ModelWeights ModelPool::posterior_weights(
    std::span<const Observation> dataset) const {
  ModelWeights w;
  w.keys = keys();
  std::vector<double> logw;
  logw.reserve(w.keys.size() + 1);
  for (int key : w.keys) {
    const GlobalModel& m = models_.at(key);
    double lw = std::log(static_cast<double>(m.assign_count));
    for (const Observation& obs : dataset)
      lw += m.posterior.predictive_loglik(obs.x, obs.reward);
    logw.push_back(lw);
  }
  {
    // Fresh-model branch: zero-mean prior predictive with variance
    // noise_sd^2 + |x|^2 / ridge.
    double lw = std::log(alpha0_);
    const double noise_var = noise_sd_ * noise_sd_;
    for (const Observation& obs : dataset)
      lw += normal_logpdf(obs.reward, 0.0,
                          noise_var + obs.x.squaredNorm() / ridge_);
    logw.push_back(lw);
  }
  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm))
    throw std::runtime_error("ModelPool: posterior weights underflowed");
  w.probs.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i)
    w.probs[i] = std::exp(logw[i] - norm);
  return w;
}

int ModelPool::gibbs_reassign(int current_key,
                              std::span<const Observation> dataset, Rng& rng) {
  GlobalModel& current = model_mut(current_key);
  current.posterior.expel_all(dataset);
  current.assign_count -= 1;
  if (current.assign_count == 0) models_.erase(current_key);

  const ModelWeights w = posterior_weights(dataset);
  const int idx = rng.categorical(w.probs);
  const int key = idx < static_cast<int>(w.keys.size()) ? w.keys[idx]
                                                        : create_model();
  GlobalModel& selected = model_mut(key);
  selected.posterior.absorb_all(dataset);
  selected.assign_count += 1;
  return key;
}

double ModelPool::resample_alpha0(int n_assignments, Rng& rng) {
  const int k = size();
  if (k < 1)
    throw std::invalid_argument("resample_alpha0: pool must hold a model");
  if (n_assignments < 1)
    throw std::invalid_argument("resample_alpha0: needs n_assignments >= 1");
  const double n = n_assignments;
  const double eta = rng.beta(alpha0_ + 1.0, n);
  const double rate = gamma_b_ - std::log(eta);
  const double odds = (gamma_a_ + k - 1.0) / (n * rate);
  const double pi = odds / (1.0 + odds);
  alpha0_ = rng.uniform() < pi ? rng.gamma(gamma_a_ + k, rate)
                               : rng.gamma(gamma_a_ + k - 1.0, rate);
  return alpha0_;
}

void ModelPool::absorb_into(int key, const Context& x, double reward) {
  model_mut(key).posterior.absorb(x, reward);
}

}  // namespace codband

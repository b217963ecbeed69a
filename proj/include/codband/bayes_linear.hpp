#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <span>
#include <stdexcept>
#include <vector>

#include "codband/rng.hpp"

namespace codband {

using Context = Eigen::VectorXd;

/// One (context, reward) pair.
struct Observation {
  Context x;
  double reward = 0.0;
};

/// Raised when an update would leave a model in an invalid state
/// (e.g. removing observations that were never absorbed).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conjugate Gaussian posterior for a linear reward model
/// r = x' theta + noise, noise ~ N(0, noise_sd^2), prior theta ~ N(0, I/ridge).
///
/// Maintains the precision matrix (ridge*I + sum x x'/sigma^2), the moment
/// vector (sum x r/sigma^2) and the mean (solved from the precision after
/// every update through a Cholesky factorization). Supports exact removal of
/// previously absorbed observations.
class LinearPosterior {
 public:
  LinearPosterior(int dim, double ridge, double noise_sd);

  int dim() const { return static_cast<int>(moment_.size()); }
  double ridge() const { return ridge_; }
  double noise_sd() const { return noise_sd_; }
  int n_obs() const { return n_obs_; }

  const Eigen::MatrixXd& precision() const { return precision_; }
  const Eigen::VectorXd& moment() const { return moment_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::MatrixXd covariance() const;

  /// Rank-one Bayesian update with a single observation.
  void absorb(const Context& x, double reward);
  void absorb(const Observation& obs) { absorb(obs.x, obs.reward); }
  void absorb_all(std::span<const Observation> data);

  /// Exact inverse of absorb. The observations must have been absorbed
  /// before; violations surface as StateError.
  void expel(const Context& x, double reward);
  void expel(const Observation& obs) { expel(obs.x, obs.reward); }
  void expel_all(std::span<const Observation> data);

  /// Draw theta ~ N(mean, precision^-1).
  Eigen::VectorXd sample(Rng& rng) const;

  /// Marginalized predictive density N(r | x'mean, noise_sd^2 + x'Cov x).
  double predictive_loglik(const Context& x, double reward) const;
  double predictive_likelihood(const Context& x, double reward) const;

 private:
  void check_dim(const Context& x) const;
  void refresh();  // factorize precision, re-solve mean

  double ridge_;
  double noise_sd_;
  int n_obs_ = 0;
  Eigen::MatrixXd precision_;
  Eigen::VectorXd moment_;
  Eigen::VectorXd mean_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable Eigen::VectorXd scratch_;
};

/// Ridge regression estimator (lambda*I + sum x x')^-1 (sum r x).
/// Note: no noise scaling, this is the detector-side estimator, distinct
/// from the Bayesian update above.
Eigen::VectorXd ridge_estimate(std::span<const Observation> data, double ridge,
                               int dim);

/// High-probability confidence bound alpha * sqrt(x' A^-1 x) with
/// A = ridge*I + sum x x' and
/// alpha = noise_sd*sqrt(d*log(1 + n/(d*ridge)) + 2*log(1/delta1)) + sqrt(ridge).
double confidence_bound(std::span<const Observation> data, const Context& x,
                        double ridge, double noise_sd, double delta1);

/// The alpha width factor shared by confidence_bound and RidgeAccumulator.
double confidence_width(int n_obs, int dim, double ridge, double noise_sd,
                        double delta1);

/// Incremental form of the ridge estimator plus its confidence bound.
/// Equivalent to the batch functions over the same observations.
class RidgeAccumulator {
 public:
  RidgeAccumulator(int dim, double ridge);

  int dim() const { return static_cast<int>(bvec_.size()); }
  int count() const { return count_; }
  double ridge() const { return ridge_; }

  void add(const Context& x, double reward);
  void reset();

  const Eigen::VectorXd& estimate() const { return theta_; }
  double predict(const Context& x) const { return x.dot(theta_); }
  double confidence_bound(const Context& x, double noise_sd,
                          double delta1) const;

 private:
  double ridge_;
  int count_ = 0;
  Eigen::MatrixXd gram_;  // ridge*I + sum x x'
  Eigen::VectorXd bvec_;  // sum r x
  Eigen::VectorXd theta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  mutable Eigen::VectorXd scratch_;
};

}  // namespace codband

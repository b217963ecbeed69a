#include "codband/bayes_linear.hpp"

#include <cmath>

#include "codband/stats.hpp"

namespace codband {

LinearPosterior::LinearPosterior(int dim, double ridge, double noise_sd)
    : ridge_(ridge), noise_sd_(noise_sd) {
  if (dim < 1) throw std::invalid_argument("LinearPosterior: dim must be >= 1");
  if (ridge <= 0.0)
    throw std::invalid_argument("LinearPosterior: ridge must be > 0");
  if (noise_sd <= 0.0)
    throw std::invalid_argument("LinearPosterior: noise_sd must be > 0");
  precision_ = ridge * Eigen::MatrixXd::Identity(dim, dim);
  moment_ = Eigen::VectorXd::Zero(dim);
  mean_ = Eigen::VectorXd::Zero(dim);
  refresh();
}

Eigen::MatrixXd LinearPosterior::covariance() const {
  return llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
}

void LinearPosterior::check_dim(const Context& x) const {
  if (x.size() != moment_.size())
    throw std::invalid_argument("LinearPosterior: context dimension mismatch");
}

void LinearPosterior::absorb(const Context& x, double reward) {
  check_dim(x);
  const double inv_var = 1.0 / (noise_sd_ * noise_sd_);
  precision_.selfadjointView<Eigen::Lower>().rankUpdate(x, inv_var);
  precision_.triangularView<Eigen::StrictlyUpper>() =
      precision_.transpose().triangularView<Eigen::StrictlyUpper>();
  moment_.noalias() += inv_var * reward * x;
  ++n_obs_;
  refresh();
}

void LinearPosterior::absorb_all(std::span<const Observation> data) {
  if (data.empty()) return;
  const double inv_var = 1.0 / (noise_sd_ * noise_sd_);
  for (const Observation& obs : data) {
    check_dim(obs.x);
    precision_.selfadjointView<Eigen::Lower>().rankUpdate(obs.x, inv_var);
    moment_.noalias() += inv_var * obs.reward * obs.x;
  }
  precision_.triangularView<Eigen::StrictlyUpper>() =
      precision_.transpose().triangularView<Eigen::StrictlyUpper>();
  n_obs_ += static_cast<int>(data.size());
  refresh();
}

void LinearPosterior::expel(const Context& x, double reward) {
  const Observation obs{x, reward};
  expel_all(std::span<const Observation>(&obs, 1));
}

void LinearPosterior::expel_all(std::span<const Observation> data) {
  if (data.empty()) return;
  if (static_cast<int>(data.size()) > n_obs_)
    throw StateError("LinearPosterior: removing more observations than held");
  const double inv_var = 1.0 / (noise_sd_ * noise_sd_);
  Eigen::MatrixXd precision = precision_;
  Eigen::VectorXd moment = moment_;
  for (const Observation& obs : data) {
    check_dim(obs.x);
    precision.selfadjointView<Eigen::Lower>().rankUpdate(obs.x, -inv_var);
    moment.noalias() -= inv_var * obs.reward * obs.x;
  }
  precision.triangularView<Eigen::StrictlyUpper>() =
      precision.transpose().triangularView<Eigen::StrictlyUpper>();
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw StateError("LinearPosterior: removal left a non-SPD precision");
  precision_ = std::move(precision);
  moment_ = std::move(moment);
  llt_ = std::move(llt);
  mean_ = llt_.solve(moment_);
  n_obs_ -= static_cast<int>(data.size());
}

void LinearPosterior::refresh() {
  llt_.compute(precision_);
  if (llt_.info() != Eigen::Success)
    throw StateError("LinearPosterior: precision is not SPD");
  mean_ = llt_.solve(moment_);
}

Eigen::VectorXd LinearPosterior::sample(Rng& rng) const {
  Eigen::VectorXd z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
  // precision = L L'; L'^-1 z has covariance precision^-1.
  llt_.matrixU().solveInPlace(z);
  return mean_ + z;
}

double LinearPosterior::predictive_loglik(const Context& x,
                                          double reward) const {
  check_dim(x);
  scratch_ = x;
  llt_.matrixL().solveInPlace(scratch_);
  const double var = noise_sd_ * noise_sd_ + scratch_.squaredNorm();
  return normal_logpdf(reward, x.dot(mean_), var);
}

double LinearPosterior::predictive_likelihood(const Context& x,
                                              double reward) const {
  return std::exp(predictive_loglik(x, reward));
}

Eigen::VectorXd ridge_estimate(std::span<const Observation> data, double ridge,
                               int dim) {
  RidgeAccumulator acc(dim, ridge);
  for (const Observation& obs : data) acc.add(obs.x, obs.reward);
  return acc.estimate();
}

double confidence_width(int n_obs, int dim, double ridge, double noise_sd,
                        double delta1) {
  if (delta1 <= 0.0 || delta1 >= 1.0)
    throw std::invalid_argument("confidence_width: delta1 must lie in (0, 1)");
  const double logdet =
      dim * std::log(1.0 + static_cast<double>(n_obs) / (dim * ridge));
  return noise_sd * std::sqrt(logdet + 2.0 * std::log(1.0 / delta1)) +
         std::sqrt(ridge);
}

double confidence_bound(std::span<const Observation> data, const Context& x,
                        double ridge, double noise_sd, double delta1) {
  RidgeAccumulator acc(static_cast<int>(x.size()), ridge);
  for (const Observation& obs : data) acc.add(obs.x, obs.reward);
  return acc.confidence_bound(x, noise_sd, delta1);
}

RidgeAccumulator::RidgeAccumulator(int dim, double ridge) : ridge_(ridge) {
  if (dim < 1) throw std::invalid_argument("RidgeAccumulator: dim must be >= 1");
  if (ridge <= 0.0)
    throw std::invalid_argument("RidgeAccumulator: ridge must be > 0");
  gram_ = ridge * Eigen::MatrixXd::Identity(dim, dim);
  bvec_ = Eigen::VectorXd::Zero(dim);
  theta_ = Eigen::VectorXd::Zero(dim);
  llt_.compute(gram_);
}

void RidgeAccumulator::add(const Context& x, double reward) {
  if (x.size() != bvec_.size())
    throw std::invalid_argument("RidgeAccumulator: context dimension mismatch");
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
  gram_.triangularView<Eigen::StrictlyUpper>() =
      gram_.transpose().triangularView<Eigen::StrictlyUpper>();
  bvec_.noalias() += reward * x;
  ++count_;
  llt_.compute(gram_);
  theta_ = llt_.solve(bvec_);
}

void RidgeAccumulator::reset() {
  const int d = dim();
  gram_ = ridge_ * Eigen::MatrixXd::Identity(d, d);
  bvec_.setZero();
  theta_.setZero();
  count_ = 0;
  llt_.compute(gram_);
}

double RidgeAccumulator::confidence_bound(const Context& x, double noise_sd,
                                          double delta1) const {
  const double alpha = confidence_width(count_, dim(), ridge_, noise_sd, delta1);
  scratch_ = x;
  llt_.matrixL().solveInPlace(scratch_);
  return alpha * std::sqrt(scratch_.squaredNorm());
}

}  // namespace codband

#include <doctest.h>

#include <cmath>

#include "codband/bayes_linear.hpp"
#include "codband/stats.hpp"
#include "test_util.hpp"

using namespace codband;
using namespace codband::testing;

namespace {

Eigen::Vector2d vec2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("prior state matches the definition") {
  LinearPosterior p(2, 1.0, 1.0);
  CHECK(p.precision().isApprox(Eigen::Matrix2d::Identity()));
  CHECK(p.mean().isZero());
  CHECK(p.moment().isZero());
  CHECK(p.n_obs() == 0);

  LinearPosterior q(1, 0.25, 0.1);
  CHECK(q.precision()(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("invalid prior parameters are rejected") {
  CHECK_THROWS_AS(LinearPosterior(2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LinearPosterior(2, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LinearPosterior(2, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LinearPosterior(0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("absorb applies the rank-one update") {
  LinearPosterior p(2, 1.0, 1.0);
  p.absorb(vec2(1, 0), 1.0);
  Eigen::Matrix2d want_precision;
  want_precision << 2, 0, 0, 1;
  CHECK(p.precision().isApprox(want_precision, 1e-12));
  CHECK(p.mean().isApprox(vec2(0.5, 0.0), 1e-12));
  CHECK(p.n_obs() == 1);

  CHECK_THROWS_AS(p.absorb(Eigen::Vector3d::Ones(), 1.0),
                  std::invalid_argument);
}

TEST_CASE("absorb then expel round-trips to the prior") {
  LinearPosterior p(3, 0.5, 0.2);
  const LinearPosterior prior = p;
  Rng rng(7);
  const Observation obs{random_context(3, rng), 0.8};
  p.absorb(obs);
  p.expel(obs);
  CHECK((p.precision() - prior.precision()).norm() <= 1e-10);
  CHECK((p.moment() - prior.moment()).norm() <= 1e-10);
  CHECK((p.mean() - prior.mean()).norm() <= 1e-10);
  CHECK(p.n_obs() == 0);
}

TEST_CASE("absorbing a perfectly predicted reward leaves the mean in place") {
  Rng rng(11);
  LinearPosterior p(3, 1.0, 0.5);
  for (int i = 0; i < 10; ++i)
    p.absorb(random_context(3, rng), rng.normal());
  const Eigen::VectorXd mean_before = p.mean();
  const Eigen::VectorXd x = random_context(3, rng);
  p.absorb(x, x.dot(mean_before));
  CHECK((p.mean() - mean_before).norm() <= 1e-10);
  // In particular unchanged along directions orthogonal to x.
  Eigen::VectorXd v = random_unit_vector(3, rng);
  v -= v.dot(x) / x.squaredNorm() * x;
  CHECK(std::abs(v.dot(p.mean()) - v.dot(mean_before)) <= 1e-10);
}

TEST_CASE("expel matches the batch posterior of the survivors") {
  Rng rng(123);
  const int dim = 4;
  LinearPosterior p(dim, 0.7, 0.3);
  std::vector<Observation> absorbed;
  for (int i = 0; i < 50; ++i) {
    absorbed.push_back({random_context(dim, rng), rng.normal(0.0, 1.0)});
    p.absorb(absorbed.back());
  }
  std::vector<Observation> removed(absorbed.begin(), absorbed.begin() + 20);
  std::vector<Observation> kept(absorbed.begin() + 20, absorbed.end());
  p.expel_all(removed);

  const BatchPosterior want = batch_posterior(kept, dim, 0.7, 0.3);
  CHECK(relative_error(p.precision(), want.precision) <= 1e-8);
  CHECK(relative_error(p.moment(), want.moment) <= 1e-8);
  CHECK(relative_error(p.mean(), want.mean) <= 1e-8);
  CHECK(p.n_obs() == 30);
}

TEST_CASE("expel from a fresh prior fails loudly") {
  LinearPosterior p(2, 1.0, 1.0);
  CHECK_THROWS_AS(p.expel(vec2(1, 0), 1.0), StateError);
}

TEST_CASE("random interleavings of absorb and expel match the batch oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + rng.uniform_int(5);
    const double ridge = 0.2 + rng.uniform();
    const double noise_sd = 0.1 + rng.uniform();
    LinearPosterior p(dim, ridge, noise_sd);
    std::vector<Observation> held;
    for (int step = 0; step < 60; ++step) {
      if (!held.empty() && rng.uniform() < 0.35) {
        const int i = rng.uniform_int(static_cast<int>(held.size()));
        p.expel(held[i]);
        held.erase(held.begin() + i);
      } else {
        held.push_back({random_context(dim, rng), rng.normal()});
        p.absorb(held.back());
      }
    }
    const BatchPosterior want = batch_posterior(held, dim, ridge, noise_sd);
    CHECK(relative_error(p.precision(), want.precision) <= 1e-8);
    CHECK(relative_error(p.mean(), want.mean) <= 1e-8);
  }
}

TEST_CASE("posterior sampling has the right moments") {
  LinearPosterior p(2, 4.0, 1.0);
  Rng rng(99);
  const int n = 100000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d outer = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd draw = p.sample(rng);
    sum += draw;
    outer += draw * draw.transpose();
  }
  const Eigen::Vector2d mean = sum / n;
  const Eigen::Matrix2d cov = outer / n - mean * mean.transpose();
  // Prior covariance is I/4.
  CHECK(std::abs(cov(0, 0) - 0.25) <= 0.05 * 0.25);
  CHECK(std::abs(cov(1, 1) - 0.25) <= 0.05 * 0.25);
  CHECK(std::abs(cov(0, 1)) <= 0.01);
  // Empirical mean within 4 sd / sqrt(n) of the posterior mean, per axis.
  const double tol = 4.0 * 0.5 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean[0]) <= tol);
  CHECK(std::abs(mean[1]) <= tol);
}

TEST_CASE("samples concentrate at the mean in the low-noise limit") {
  LinearPosterior p(2, 1.0, 0.01);
  for (int i = 0; i < 50; ++i) {
    p.absorb(vec2(1, 0), 0.7);
    p.absorb(vec2(0, 1), -0.2);
  }
  Rng rng(5);
  double max_dev = 0.0;
  for (int i = 0; i < 200; ++i)
    max_dev = std::max(max_dev, (p.sample(rng) - p.mean()).norm());
  CHECK(max_dev <= 0.02);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  LinearPosterior p(3, 1.0, 0.5);
  Rng a(42), b(42);
  CHECK(p.sample(a) == p.sample(b));
}

TEST_CASE("ridge_estimate closed forms") {
  CHECK(ridge_estimate({}, 1.0, 3).isZero());

  std::vector<Observation> one{{Eigen::VectorXd::Ones(1), 2.0}};
  CHECK(ridge_estimate(one, 1.0, 1)(0) == doctest::Approx(1.0));

  // Consistency: noiseless data with a vanishing ridge recovers theta*.
  Rng rng(17);
  const int dim = 3;
  const Eigen::VectorXd theta = random_unit_vector(dim, rng);
  std::vector<Observation> data;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_context(dim, rng);
    data.push_back({x, x.dot(theta)});
  }
  CHECK((ridge_estimate(data, 1e-6, dim) - theta).norm() <= 1e-3);

  // Matches the batch oracle on noisy data.
  for (Observation& obs : data) obs.reward += rng.normal(0.0, 0.3);
  CHECK((ridge_estimate(data, 0.8, dim) - batch_ridge(data, dim, 0.8)).norm() <=
        1e-10);
}

TEST_CASE("confidence bound formula and shape") {
  const Eigen::VectorXd x = vec2(0.6, 0.8);  // unit norm
  const double cb0 = confidence_bound({}, x, 1.0, 0.1, 0.05);
  const double alpha0 = 0.1 * std::sqrt(2.0 * std::log(20.0)) + 1.0;
  CHECK(cb0 == doctest::Approx(alpha0).epsilon(1e-12));
  CHECK(cb0 == doctest::Approx(1.2448).epsilon(1e-4));

  // Monotone non-increasing in |D| for repeated identical contexts.
  std::vector<Observation> data;
  double prev = cb0;
  for (int i = 0; i < 30; ++i) {
    data.push_back({x, 0.3});
    const double cb = confidence_bound(data, x, 1.0, 0.1, 0.05);
    CHECK(cb <= prev + 1e-12);
    prev = cb;
  }

  CHECK(confidence_bound(data, vec2(0, 0), 1.0, 0.1, 0.05) == 0.0);
  CHECK_THROWS_AS(confidence_bound(data, x, 1.0, 0.1, 1.5),
                  std::invalid_argument);
}

TEST_CASE("confidence bound covers the estimation error") {
  // Stationary trials: |x'(theta_hat - theta*)| <= CB in >= 93% of cases.
  Rng rng(31337);
  const int dim = 3;
  const double ridge = 1.0, noise_sd = 0.1, delta1 = 0.05;
  int covered = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd theta = rng.uniform() * random_unit_vector(dim, rng);
    RidgeAccumulator acc(dim, ridge);
    const int n = rng.uniform_int(0, 50);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = random_context(dim, rng);
      acc.add(x, x.dot(theta) + rng.normal(0.0, noise_sd));
    }
    const Eigen::VectorXd x = random_context(dim, rng);
    const double err = std::abs(acc.predict(x) - x.dot(theta));
    if (err <= acc.confidence_bound(x, noise_sd, delta1)) ++covered;
  }
  CHECK(static_cast<double>(covered) / trials >= 0.93);
}

TEST_CASE("accumulator agrees with the batch detector estimator") {
  Rng rng(88);
  const int dim = 4;
  RidgeAccumulator acc(dim, 0.6);
  std::vector<Observation> data;
  for (int i = 0; i < 40; ++i) {
    data.push_back({random_context(dim, rng), rng.normal()});
    acc.add(data.back().x, data.back().reward);
  }
  CHECK((acc.estimate() - batch_ridge(data, dim, 0.6)).norm() <= 1e-9);
  const Eigen::VectorXd x = random_context(dim, rng);
  CHECK(acc.confidence_bound(x, 0.2, 0.05) ==
        doctest::Approx(confidence_bound(data, x, 0.6, 0.2, 0.05))
            .epsilon(1e-10));
  acc.reset();
  CHECK(acc.count() == 0);
  CHECK(acc.estimate().isZero());
}

TEST_CASE("predictive likelihood closed form") {
  // Posterior with precision diag(2,1), mean (0.5, 0), sigma = 1.
  LinearPosterior p(2, 1.0, 1.0);
  p.absorb(vec2(1, 0), 1.0);
  const double got = p.predictive_likelihood(vec2(1, 0), 1.0);
  // Predictive is N(1 | 0.5, 1 + 0.5).
  CHECK(got == doctest::Approx(normal_pdf(1.0, 0.5, 1.5)).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.2997).epsilon(1e-3));
}

TEST_CASE("prior predictive variance is sigma^2 + |x|^2/ridge") {
  const double ridge = 2.5, noise_sd = 0.3;
  LinearPosterior p(2, ridge, noise_sd);
  const Eigen::VectorXd x = vec2(0.3, -0.4);
  const double want = normal_pdf(
      0.9, 0.0, noise_sd * noise_sd + x.squaredNorm() / ridge);
  CHECK(p.predictive_likelihood(x, 0.9) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("predictive likelihood matches quadrature of the integral form") {
  Rng rng(4242);
  for (int trial = 0; trial < 10; ++trial) {
    LinearPosterior p(2, 0.5 + rng.uniform(), 0.2 + 0.5 * rng.uniform());
    const int n = rng.uniform_int(0, 8);
    for (int i = 0; i < n; ++i) p.absorb(random_context(2, rng), rng.normal());
    const Eigen::VectorXd x = random_context(2, rng);
    const double r = rng.normal();
    const double oracle = predictive_by_quadrature(
        p.mean(), p.precision().inverse(), x, r,
        p.noise_sd() * p.noise_sd());
    CHECK(p.predictive_likelihood(x, r) == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("predictive density integrates to one over rewards") {
  LinearPosterior p(2, 0.8, 0.4);
  Rng rng(3);
  for (int i = 0; i < 5; ++i) p.absorb(random_context(2, rng), rng.normal());
  const Eigen::VectorXd x = random_context(2, rng);
  const double mean = x.dot(p.mean());
  // Simpson rule over mean +- 12 sd.
  const double sd = 3.0;  // generous cap on the predictive sd here
  const double lo = mean - 12 * sd, hi = mean + 12 * sd;
  const int n = 4000;
  const double h = (hi - lo) / n;
  double integral = p.predictive_likelihood(x, lo) +
                    p.predictive_likelihood(x, hi);
  for (int i = 1; i < n; ++i)
    integral += p.predictive_likelihood(x, lo + i * h) * (i % 2 ? 4.0 : 2.0);
  integral *= h / 3.0;
  CHECK(std::abs(integral - 1.0) <= 1e-4);
}

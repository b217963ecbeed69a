#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace codband {

/// Log density of N(x | mean, var).
inline double normal_logpdf(double x, double mean, double var) {
  const double diff = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(normal_logpdf(x, mean, var));
}

/// log(sum(exp(v))) with max subtraction.
inline double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Inverse error function. Winitzki initial guess refined by Newton steps;
/// accurate to ~1e-14 on (-1, 1).
inline double inverse_erf(double y) {
  if (y <= -1.0 || y >= 1.0)
    throw std::domain_error("inverse_erf: argument must lie in (-1, 1)");
  if (y == 0.0) return 0.0;

  const double a = 0.147;
  const double ln1 = std::log(1.0 - y * y);
  const double t = 2.0 / (std::numbers::pi * a) + 0.5 * ln1;
  double x = std::sqrt(std::sqrt(t * t - ln1 / a) - t);
  if (y < 0.0) x = -x;

  const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < 4; ++i) {
    const double err = std::erf(x) - y;
    x -= err / (two_over_sqrt_pi * std::exp(-x * x));
  }
  return x;
}

}  // namespace codband

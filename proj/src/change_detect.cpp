#include "codband/change_detect.hpp"

#include <cmath>
#include <stdexcept>

#include "codband/stats.hpp"

namespace codband {

void DetectorConfig::validate() const {
  if (delta1 <= 0.0 || delta1 >= 1.0)
    throw std::invalid_argument("DetectorConfig: delta1 must lie in (0, 1)");
  if (delta2 <= 0.0 || delta2 >= 1.0)
    throw std::invalid_argument("DetectorConfig: delta2 must lie in (0, 1)");
  if (window < 1)
    throw std::invalid_argument("DetectorConfig: window must be >= 1");
  if (ridge <= 0.0)
    throw std::invalid_argument("DetectorConfig: ridge must be > 0");
  if (noise_sd < 0.0)
    throw std::invalid_argument("DetectorConfig: noise_sd must be >= 0");
  if (threshold() >= 1.0)
    throw std::invalid_argument(
        "DetectorConfig: threshold >= 1 makes detection impossible");
}

double DetectorConfig::threshold() const {
  return delta1 + std::sqrt(std::log(1.0 / delta2) / (2.0 * window));
}

double epsilon(const DetectorConfig& config) {
  if (config.noise_sd == 0.0) return 0.0;
  return std::sqrt(2.0) * config.noise_sd * inverse_erf(1.0 - config.delta1);
}

int test_bit(double predicted, double observed, double cb,
             const DetectorConfig& config) {
  if (cb < 0.0) throw std::invalid_argument("test_bit: cb must be >= 0");
  return std::abs(predicted - observed) > cb + epsilon(config) ? 1 : 0;
}

int recommended_tau(double rho, const DetectorConfig& config) {
  const double margin = rho * (1.0 - config.delta1) - config.delta1;
  if (margin <= 0.0)
    throw std::invalid_argument(
        "recommended_tau: need rho*(1-delta1) > delta1");
  return static_cast<int>(
      std::ceil(2.0 * std::log(2.0 / config.delta2) / (margin * margin)));
}

void DetectorState::push(int bit, const DetectorConfig& config) {
  bits_.push_back(bit);
  ones_ += bit;
  while (static_cast<int>(bits_.size()) > config.window) {
    ones_ -= bits_.front();
    bits_.pop_front();
  }
}

bool DetectorState::check(const DetectorConfig& config) const {
  if (bits_.empty()) return false;
  return window_mean() > config.threshold();
}

bool DetectorState::push_and_check(int bit, const DetectorConfig& config) {
  push(bit, config);
  return check(config);
}

void DetectorState::reset() {
  bits_.clear();
  ones_ = 0;
}

double DetectorState::window_mean() const {
  if (bits_.empty()) return 0.0;
  return static_cast<double>(ones_) / static_cast<double>(bits_.size());
}

}  // namespace codband

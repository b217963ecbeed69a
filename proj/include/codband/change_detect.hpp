#pragma once

#include <deque>

namespace codband {

/// Parameters of the per-user change detector.
struct DetectorConfig {
  double delta1 = 0.05;  // per-round badness level
  double delta2 = 0.05;  // per-window false-alarm level
  int window = 50;       // tau, size of the sliding bit window
  double ridge = 1.0;
  double noise_sd = 0.1;

  /// Throws unless 0 < delta1, delta2 < 1, window >= 1 and the detection
  /// threshold stays below 1.
  void validate() const;

  /// delta1 + sqrt(ln(1/delta2) / (2 * window)).
  double threshold() const;
};

/// Two-sided (1 - delta1) Gaussian quantile half-width sqrt(2)*sigma*erfinv(1-delta1).
double epsilon(const DetectorConfig& config);

/// Badness bit: 1 iff |predicted - observed| > cb + epsilon (strict).
int test_bit(double predicted, double observed, double cb,
             const DetectorConfig& config);

/// Minimal window length that guarantees detection probability >= 1 - delta2
/// for a change where at least a rho portion of arms moved by the assumed
/// gap: ceil(2*ln(2/delta2) / (rho*(1-delta1) - delta1)^2).
int recommended_tau(double rho, const DetectorConfig& config);

/// Sliding window over the most recent test bits.
class DetectorState {
 public:
  void push(int bit, const DetectorConfig& config);
  bool check(const DetectorConfig& config) const;

  /// push followed by check.
  bool push_and_check(int bit, const DetectorConfig& config);

  void reset();

  double window_mean() const;
  int window_size() const { return static_cast<int>(bits_.size()); }

 private:
  std::deque<int> bits_;
  int ones_ = 0;
};

}  // namespace codband

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace codband {

/// Seeded random stream used everywhere randomness is consumed.
///
/// Every experiment cell (replication x policy) owns its own Rng, seeded
/// via derive() so that results do not depend on execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return unit_(engine_); }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw.
  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma draw in shape/rate parameterization (mean = shape/rate).
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(engine_);
  }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(engine_);
  }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }

  /// Categorical draw from a normalized probability vector.
  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    scratch_.resize(n);
    for (int i = 0; i < n; ++i) scratch_[i] = i;
    std::vector<int> out(k);
    for (int i = 0; i < k; ++i) {
      const int j = uniform_int(i, n - 1);
      std::swap(scratch_[i], scratch_[j]);
      out[i] = scratch_[i];
    }
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

  /// Deterministic stream derivation: mixes (seed, a, b) with splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
    std::uint64_t x = seed;
    x = splitmix(x + 0x9E3779B97F4A7C15ULL * (a + 1));
    x = splitmix(x + 0x9E3779B97F4A7C15ULL * (b + 1));
    return x;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<int> scratch_;
};

}  // namespace codband

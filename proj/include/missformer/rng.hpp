#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace missformer {

/// Seeded random source with explicitly implemented distributions so that a
/// given seed produces the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("Rng::uniform: lo > hi");
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  /// Gaussian via Box-Muller (one variate per call, second discarded).
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  /// Gaussian restricted to (0, inf) by resampling.
  double positive_normal(double mean, double stddev) {
    if (stddev == 0.0) {
      if (mean <= 0.0) throw std::invalid_argument("Rng::positive_normal: degenerate draw <= 0");
      return mean;
    }
    for (;;) {
      const double v = normal(mean, stddev);
      if (v > 0.0) return v;
    }
  }

  bool bernoulli(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("Rng::bernoulli: p outside [0,1]");
    return uniform(0.0, 1.0) < p;
  }

  /// Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<int>(x % range);
  }

  /// Stable sub-stream seed for (seed, stream) pairs; used to hand out
  /// independent streams per epoch, per sample, or per worker.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace missformer

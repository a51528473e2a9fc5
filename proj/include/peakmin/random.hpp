#pragma once

#include <cstdint>
#include <random>

namespace peakmin {

/// Seedable random source with platform-independent output.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard)
/// and maps raw draws to doubles explicitly, so that generated graphs and
/// scenarios are reproducible bit-for-bit across compilers. The standard
/// distribution classes are deliberately avoided: their algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Bernoulli trial with success probability p.
  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is irrelevant at the scales used here (n << 2^64).
    return gen_() % n;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace peakmin

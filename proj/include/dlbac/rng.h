#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dlbac {

// SplitMix64. Every random draw in the library goes through this generator
// and the derived distributions below.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Uniform integer in [0, bound) by rejection of the biased tail.
  // `bound` must be positive.
  std::uint64_t uniform(std::uint64_t bound);

  // Uniform integer in [lo, hi].
  std::int64_t uniform_in(std::int64_t lo, std::int64_t hi);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform_real();

  // Standard normal via the Box-Muller transform; one fresh pair of
  // uniforms per call (the second variate is discarded).
  double normal();

  bool bernoulli(double p) { return uniform_real() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  // Derives an independent stream for a named sub-task.
  SplitMix64 fork(std::uint64_t salt);

 private:
  std::uint64_t state_;
};

// Inverse-CDF sampler of a Zipf(s) law over {0, ..., n-1}.
class ZipfSampler {
 public:
  ZipfSampler(std::uint32_t n, double s);
  std::uint32_t sample(SplitMix64& rng) const;

 private:
  std::vector<double> cdf_;
};

}  // namespace dlbac

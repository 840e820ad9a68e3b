#include "dlbac/rng.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dlbac {

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::uniform(std::uint64_t bound) {
  // Values below `threshold` would make the modulo biased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

std::int64_t SplitMix64::uniform_in(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(uniform(span));
}

double SplitMix64::uniform_real() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() {
  // 1 - u keeps the logarithm argument in (0, 1].
  const double u1 = 1.0 - uniform_real();
  const double u2 = uniform_real();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

SplitMix64 SplitMix64::fork(std::uint64_t salt) {
  SplitMix64 mixer(next() ^ (salt * 0xD1B54A32D192ED03ULL));
  return SplitMix64(mixer.next());
}

ZipfSampler::ZipfSampler(std::uint32_t n, double s) : cdf_(n) {
  double total = 0.0;
  for (std::uint32_t k = 0; k < n; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k + 1), s);
    cdf_[k] = total;
  }
  for (double& c : cdf_) c /= total;
}

std::uint32_t ZipfSampler::sample(SplitMix64& rng) const {
  const double u = rng.uniform_real();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return static_cast<std::uint32_t>(cdf_.size() - 1);
  return static_cast<std::uint32_t>(it - cdf_.begin());
}

}  // namespace dlbac

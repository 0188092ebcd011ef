// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "sirilab/common.hpp"

namespace sirilab {

// SplitMix64 finalizer. Used to derive independent seeds from (seed, salt)
// tuples; stable across platforms and standard libraries.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ splitmix64(v));
}

// FNV-1a over the bytes of `s`, mixed into `seed`.
inline std::uint64_t hash_str(std::uint64_t seed, std::string_view s) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return splitmix64(h);
}

// Deterministic RNG. All distributions are built directly on mt19937_64
// output words, never on std::*_distribution, so that the same seed yields
// bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of entropy.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Rejection-sampled, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    require(lo <= hi, "uniform_int: empty range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(gen_());  // full 64-bit range
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() / range * range;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % range);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, std::int64_t(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Xavier-uniform bound sqrt(6 / (fan_in + fan_out)).
inline double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (double(fan_in) + double(fan_out)));
}

// Fills a matrix with Xavier-uniform samples in row-major order (fixed
// traversal so the draw is independent of Eigen's storage layout).
template <typename S>
void fill_xavier(MatX<S>& m, int fan_in, int fan_out, Rng& rng) {
  const double bound = xavier_bound(fan_in, fan_out);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace sirilab

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "mtkit/common.hpp"

namespace mtkit {

// Deterministic 64-bit generator (splitmix64). Every stochastic stage in
// the toolkit draws from this so runs are reproducible across platforms;
// std::mt19937 + std::*_distribution are avoided because their output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n) via rejection; unbiased for any n.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::next_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream for (stage, key) from one global seed, so
// shard-parallel work sees the same draws regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                                 std::string_view key = {}) {
  std::uint64_t h = fnv1a64(stage);
  h = fnv1a64(key, h);
  h ^= seed + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace mtkit

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tsfm {

/// SplitMix64 finalizer. Full-avalanche, platform-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Value of draw k under seed: a pure function of (seed, k).
inline std::uint64_t counter_u64(std::uint64_t seed, std::uint64_t k) {
  return splitmix64(splitmix64(seed) ^ (k * 0xD6E8FEB86659FD93ull + 0x2545F4914F6CDD1Dull));
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t k) {
  return static_cast<double>(counter_u64(seed, k) >> 11) * 0x1.0p-53;
}

/// Counter-based generator: draw k is a pure function of (seed, k), so state
/// round-trips as (seed, draw_count) and streams can be split by index.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t draw_count = 0)
      : seed_(seed), count_(draw_count) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draw_count() const { return count_; }

  std::uint64_t next_u64() { return counter_u64(seed_, count_++); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Normal(0, std) truncated to [-2 std, 2 std] by rejection.
  double truncated_normal(double stddev) {
    for (;;) {
      const double x = normal();
      if (std::abs(x) <= 2.0) return x * stddev;
    }
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t count_ = 0;
};

/// Independent substream for a named parameter or subsystem.
inline CounterRng named_stream(std::uint64_t seed, std::string_view name) {
  return CounterRng(splitmix64(seed) ^ fnv1a64(name));
}

}  // namespace tsfm

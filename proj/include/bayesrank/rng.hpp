#pragma once

#include <cstdint>
#include <random>

namespace bayesrank {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum class SeedStream : std::uint64_t {
  matrix = 1,
  replication = 2,
  subset = 3,
};

/// Seed for item `index` of `stream`: mix64(seed ^ mix64(stream << 32 ^ index)).
/// Replications draw from independent streams, so results do not depend on
/// which thread runs which replication or in what order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream,
                                    std::uint64_t index) noexcept {
  return mix64(seed ^ mix64((static_cast<std::uint64_t>(stream) << 32) ^ index));
}

/// mt19937_64 with hand-rolled variates; the std distributions are not
/// specified bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bayesrank

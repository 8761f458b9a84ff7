#pragma once

#include <cstdint>

namespace vapvi {

/// Purpose tags keep the streams drawn for one (episode, step) independent.
enum class DrawPurpose : std::uint64_t {
  kInitialState = 1,
  kAction = 2,
  kTransition = 3,
  kRewardNoiseA = 4,
  kRewardNoiseB = 5,
  kInstance = 6,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Hashes an ordered key tuple into one 64-bit word.
std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

/// Counter-based random source. Every draw is a pure function of its key,
/// so an episode's draws do not depend on generation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t episode, std::uint64_t step, DrawPurpose purpose) const;

  /// Standard normal via Box-Muller on two keyed uniforms.
  double normal(std::uint64_t episode, std::uint64_t step) const;

 private:
  std::uint64_t seed_;
};

}  // namespace vapvi

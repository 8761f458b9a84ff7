#include "vapvi/rng.hpp"
#include "vapvi/common.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace vapvi {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (c + 0x2545f4914f6cdd1dULL));
  return h;
}

double CounterRng::uniform(std::uint64_t episode, std::uint64_t step, DrawPurpose purpose) const {
  const std::uint64_t bits = hash_key(seed_, episode, step, static_cast<std::uint64_t>(purpose));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t episode, std::uint64_t step) const {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform(episode, step, DrawPurpose::kRewardNoiseA);
  const double u2 = uniform(episode, step, DrawPurpose::kRewardNoiseB);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace vapvi

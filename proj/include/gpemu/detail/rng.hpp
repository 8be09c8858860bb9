#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gpemu::detail {

/// splitmix64 mixing step; used to derive independent seeds from a base seed
/// plus structural coordinates (generation, slot, replication, ...).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next, Rest... rest) {
  return derive_seed(mix64(base ^ mix64(next)), rest...);
}

/// Small deterministic RNG facade. The output mappings (uniform, bounded int,
/// normal) are implemented here rather than with <random> distributions so a
/// stream produces the same draws on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open_low() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Lemire's multiply-shift; no rejection loop, so
  /// every call consumes exactly one engine draw.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; consumes exactly two engine draws.
  double normal() {
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gpemu::detail

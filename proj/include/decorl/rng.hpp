#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace decorl {

/// Seeded random source with hand-rolled draw functions.
///
/// The standard <random> distributions are implementation-defined, so two
/// different standard libraries can turn the same engine stream into
/// different values. Everything here is defined directly on top of the
/// mt19937_64 output so that seeded runs reproduce bit-for-bit anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  void seed(std::uint64_t s) { gen_.seed(s); }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). The 2^-53 modulo bias is far below anything
  /// observable at the draw counts used here.
  std::size_t uniform_int(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  /// Standard normal via Box-Muller (no cached second value, so the draw
  /// count per call is constant).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// splitmix64 step, used to derive independent child seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives the seed for stream `salt` of base seed `seed`. Two mixing rounds
/// so that (seed, salt) and (seed + 1, salt - 1) land far apart.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix_seed(mix_seed(seed) ^ salt);
}

}  // namespace decorl

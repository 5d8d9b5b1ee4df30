#pragma once

#include <cmath>
#include <cstdint>

namespace promocast {

/// SplitMix64 (Steele, Lea & Flood 2014). Chosen over std::mt19937 +
/// std::*_distribution because every derived draw below is pinned to an
/// explicit algorithm, so streams reproduce bit-exactly across platforms
/// and implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double next_double_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached state.
  double next_normal() {
    const double u1 = next_double_open();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Decorrelated child stream (seed hashed with the stream index).
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return Rng(mix.next_u64());
  }

private:
  std::uint64_t state_;
};

}  // namespace promocast

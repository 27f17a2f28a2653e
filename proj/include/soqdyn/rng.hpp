#pragma once

#include <cstdint>

namespace soqdyn {

/// splitmix64: tiny, fast, reproducible across platforms. All randomness in
/// the library flows from one recorded master seed through derive_seed.
struct SplitMix64 {
  std::uint64_t state = 0x9e3779b97f4a7c15ull;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  SplitMix64 mix(master ^ (0x5851f42d4c957f2dull * (salt + 1)));
  mix.next();
  return mix.next();
}

}  // namespace soqdyn

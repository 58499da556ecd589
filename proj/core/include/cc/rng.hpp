#pragma once

#include <cstdint>

namespace cc::rng {

// splitmix64 finalizer; the basis of all counter-based randomness here.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b) {
  std::uint64_t u = mix64(seed);
  u = mix64(u ^ a);
  u = mix64(u ^ b);
  return u;
}

inline double to_unit(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

/// Uniform in [0, 1), reproducible from (seed, a, b) order-independently.
inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return to_unit(counter_hash(seed, a, b));
}

}  // namespace cc::rng

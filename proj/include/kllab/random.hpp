#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "kllab/core.hpp"

namespace kllab {

/// Generator for stream `index` of an experiment seeded with `seed`.
/// Streams are independent of how many other streams exist or run first.
inline std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

/// Uniform in [0,1) from the top 53 bits. Spelled out because the standard
/// distributions are not reproducible across library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draws a symbol; nullopt when the draw lands in the deficiency.
inline std::optional<Symbol> sample(const Distribution& d, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t x = 0; x < d.size(); ++x) {
    acc += d[x];
    if (u < acc) return static_cast<Symbol>(x);
  }
  return std::nullopt;
}

}  // namespace kllab

#pragma once

// Seeded random instances for property tests.

#include <memory>
#include <random>
#include <vector>

#include "kllab/core.hpp"
#include "kllab/mixture.hpp"

namespace gen {

using kllab::Distribution;

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int integer(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random distribution; `zero_chance` zeroes entries (never all of them).
inline Distribution simplex(std::mt19937_64& rng, int n, double zero_chance = 0.0) {
  Distribution d(static_cast<std::size_t>(n));
  double z = 0.0;
  for (auto& x : d) z += x = uniform(rng) < zero_chance ? 0.0 : -std::log(1.0 - uniform(rng));
  if (z == 0.0) {
    d[static_cast<std::size_t>(integer(rng, 0, n - 1))] = 1.0;
    return d;
  }
  for (auto& x : d) x /= z;
  return d;
}

/// Row with counts out of 8 (exactly representable; encodable as counts).
inline Distribution eighths(std::mt19937_64& rng, int n, bool full_support = true) {
  while (true) {
    std::vector<int> c(static_cast<std::size_t>(n), full_support ? 1 : 0);
    int left = 8 - (full_support ? n : 0);
    if (left < 0) left = 0;
    for (int i = 0; i < left; ++i) ++c[static_cast<std::size_t>(integer(rng, 0, n - 1))];
    Distribution d;
    int total = 0;
    for (int x : c) total += x;
    if (total == 0) continue;
    for (int x : c) d.push_back(static_cast<double>(x) / total);
    return d;
  }
}

inline std::shared_ptr<kllab::TabularPredictor> tabular(std::mt19937_64& rng, int a, int order,
                                                        double zero_chance = 0.0) {
  std::size_t rows = 1;
  for (int i = 0; i < order; ++i) rows *= static_cast<std::size_t>(a);
  std::vector<Distribution> act, obs;
  for (std::size_t r = 0; r < rows; ++r) {
    act.push_back(simplex(rng, a, zero_chance));
    obs.push_back(simplex(rng, a, zero_chance));
  }
  return std::make_shared<kllab::TabularPredictor>(a, order, act, obs);
}

inline std::shared_ptr<kllab::TabularPredictor> tabular_eighths(std::mt19937_64& rng, int a, int order) {
  std::size_t rows = 1;
  for (int i = 0; i < order; ++i) rows *= static_cast<std::size_t>(a);
  std::vector<Distribution> act, obs;
  for (std::size_t r = 0; r < rows; ++r) {
    act.push_back(eighths(rng, a));
    obs.push_back(eighths(rng, a));
  }
  return std::make_shared<kllab::TabularPredictor>(a, order, act, obs);
}

/// Class of `n` random order-0/1 tables with a random positive prior.
inline kllab::ModelClassPosterior model_class(std::mt19937_64& rng, int a, int n, double zero_chance = 0.0) {
  std::vector<kllab::SemiDistributionPtr> models;
  std::vector<double> prior;
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    models.push_back(tabular(rng, a, integer(rng, 0, 1), zero_chance));
    prior.push_back(uniform(rng, 0.1, 1.0));
    z += prior.back();
  }
  for (double& w : prior) w /= z;
  return kllab::ModelClassPosterior(models, prior);
}

/// Random history of `len` symbols.
inline kllab::History history(std::mt19937_64& rng, int a, std::size_t len) {
  std::vector<kllab::Symbol> s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(integer(rng, 0, a - 1));
  return kllab::History(s);
}

/// Utility with an independent random value per complete history.
inline kllab::UtilityFunction random_utility(std::mt19937_64& rng, int horizon) {
  const std::uint64_t salt = rng();
  return kllab::UtilityFunction(
      horizon,
      [salt](const kllab::History& h) {
        std::uint64_t z = salt;
        for (kllab::Symbol x : h.symbols()) z = (z ^ static_cast<std::uint64_t>(x + 1)) * 0x100000001b3ULL;
        z ^= z >> 29;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 32;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
      },
      "random table");
}

}  // namespace gen

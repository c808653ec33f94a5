#pragma once

#include <utility>
#include <vector>

#include "kllab/core.hpp"
#include "kllab/planning.hpp"

namespace kllab {

/// Nats. +infinity when p puts mass where q has none; 0 ln(0/q) = 0.
double stepwise_kl(const Distribution& p, const Distribution& q);

struct DivergenceReport {
  double value = 0.0;
  /// Observations o_k .. o_{m-1} of the maximizing branch (the last
  /// observation never influences an action and is omitted).
  std::vector<Symbol> maximizing_observations;
  /// (timestep, expected per-step contribution) along the maximizing branch.
  std::vector<std::pair<int, double>> per_step;
};

/// Max over observation sequences of the KL divergence between the action
/// sequences drawn by `pi` and by `beta` from `start` to the horizon m.
DivergenceReport lifetime_kl(const Policy& pi, const SemiDistribution& beta, const History& start,
                             int horizon, const PlanningOptions& opts = {});

/// Path KL for one fixed observation sequence o_k .. o_{m-1}.
DivergenceReport branch_lifetime_kl(const Policy& pi, const SemiDistribution& beta,
                                    const History& start, int horizon,
                                    const std::vector<Symbol>& observations,
                                    const PlanningOptions& opts = {});
/// KL of the sampled action sequence, with observations drawn from `env`.
/// Covers action steps t = k .. last_step where k is the next step after
/// `start`; last_step defaults to the horizon.
double expected_lifetime_kl(const Policy& pi, const SemiDistribution& beta,
                            const SemiDistribution& env, const History& start, int last_step,
                            const PlanningOptions& opts = {});

/// Max over observation sequences of sum over action sequences of the
/// positive part of pi-path probability minus beta-path probability.
DivergenceReport lifetime_tvd(const Policy& pi, const Policy& beta, const History& start,
                              int horizon, const PlanningOptions& opts = {});

}  // namespace kllab

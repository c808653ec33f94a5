#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kllab/core.hpp"
#include "kllab/mixture.hpp"
#include "kllab/planning.hpp"

namespace kllab {

struct TopSet {
  double alpha = 1.0;
  std::vector<std::size_t> members;  // in sorted-posterior order
  std::vector<std::pair<std::size_t, double>> sorted_posteriors;

  bool contains(std::size_t index) const;
};

/// Sorted by posterior descending, then index ascending; index n is a member
/// iff its weight is at least alpha times the cumulative weight of itself and
/// every model sorted before it.
TopSet top_set(const std::vector<double>& posterior, double alpha);
/// Uses the joint posterior of `state`.
TopSet top_set(const ModelClassPosterior& state, double alpha);

struct PessimisticPrediction {
  Distribution minimum;
  double help_mass = 0.0;
};

/// Per-symbol minimum over the top set at the state's history.
PessimisticPrediction pessimistic_predict(const ModelClassPosterior& state, double alpha);

/// The imitator as a predictor: conditions `prior_state` on each context.
/// Contexts with zero joint probability under every model get zero mass.
class PessimisticImitator final : public SemiDistribution {
 public:
  PessimisticImitator(ModelClassPosterior prior_state, double alpha);
  int alphabet_size() const override { return state_.alphabet_size(); }
  Distribution predict(const History& context) const override;
  std::string describe() const override;
  /// Top set at `context`, or nullopt for a zero-probability context.
  std::optional<TopSet> top_set_at(const History& context) const;

 private:
  ModelClassPosterior state_;
  double alpha_;
};

struct ContainmentReport {
  std::size_t contexts_checked = 0;
  std::size_t contexts_with_mu = 0;
  std::vector<History> mu_left_top_set;
  std::vector<History> violations;  // imitator above mu while mu is a member
  double kl_pi_mu = 0.0;
  double kl_pi_imitator = 0.0;
  bool pointwise_holds = true;
  bool kl_order_holds = true;
};

/// Enumerates every context below `start` up to the horizon.
ContainmentReport containment_check(const Policy& pi, const ModelClassPosterior& prior_state,
                                    double alpha, std::size_t mu_index, const History& start,
                                    int horizon, const PlanningOptions& opts = {});

struct RetentionReport {
  std::size_t histories = 0;
  std::size_t retained = 0;
  double frequency = 0.0;
  double interval_low = 0.0;   // exact 95% binomial interval
  double interval_high = 0.0;
  /// Per history: first prefix length at which mu left the top set, or -1.
  std::vector<long> first_exit;
};

/// Samples histories from model `mu_index` and records whether it stayed in
/// the top set at every prefix. Requires alpha < delta * prior(mu) unless
/// `enforce_precondition` is false; a violation is a ConfigError.
RetentionReport retention_experiment(const ModelClassPosterior& prior_state, std::size_t mu_index,
                                     double alpha, double delta, std::size_t num_histories,
                                     std::size_t history_length, std::uint64_t seed,
                                     bool enforce_precondition = true);

/// Clopper-Pearson interval for k successes in n trials.
std::pair<double, double> exact_binomial_interval(std::size_t k, std::size_t n, double confidence);

}  // namespace kllab

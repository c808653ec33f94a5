#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "kllab/core.hpp"

namespace kllab {

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlanningOptions {
  /// Utility credited to the deficiency mass of any policy or environment
  /// prediction, i.e. to sequences that stop before the horizon.
  double unfinished_utility = 0.0;
  /// Refuse when |X|^(2 * lookahead) exceeds this many nodes.
  double node_cap = 1e7;
};

/// Steps left between `start` and the utility's horizon. Throws
/// std::invalid_argument unless `start` ends at an action boundary within the
/// horizon.
std::size_t lookahead(const UtilityFunction& u, const History& start);
/// Throws CapacityError when |X|^(2 * steps) exceeds the cap.
void check_capacity(int alphabet_size, std::size_t steps, double node_cap);

/// Expected utility of following `policy` from `start` in `env`.
double policy_value(const SemiDistribution& env, const Policy& policy, const UtilityFunction& u,
                    const History& start, const PlanningOptions& opts = {});

/// max over policies, by backward induction.
double optimal_value(const SemiDistribution& env, const UtilityFunction& u, const History& start,
                     const PlanningOptions& opts = {});

/// E_o[V*(h a o)] for every action a at the action position `h`.
std::vector<double> action_values(const SemiDistribution& env, const UtilityFunction& u,
                                  const History& h, const PlanningOptions& opts = {});

/// True iff action a attains V*(h) within 1e-10.
bool is_v_optimal(const SemiDistribution& env, const UtilityFunction& u, const History& h,
                  Symbol action, const PlanningOptions& opts = {});

/// Deterministic policy given as a table from action contexts to actions.
/// Contexts outside the table are an error.
class PolicyTable final : public SemiDistribution {
 public:
  PolicyTable(int alphabet_size, std::map<History, Symbol> actions);

  int alphabet_size() const override { return size_; }
  Distribution predict(const History& context) const override;
  std::string describe() const override;
  const std::map<History, Symbol>& actions() const { return actions_; }
  Symbol action(const History& context) const;

 private:
  int size_;
  std::map<History, Symbol> actions_;
};

/// Optimal deterministic policy at every action node below `start`, ties to
/// the lowest action.
std::shared_ptr<const PolicyTable> optimal_policy(const SemiDistribution& env,
                                                  const UtilityFunction& u, const History& start,
                                                  const PlanningOptions& opts = {});

/// Memoizes predictions by context. Not thread-safe.
class CachedPredictor final : public SemiDistribution {
 public:
  explicit CachedPredictor(SemiDistributionPtr inner) : inner_(std::move(inner)) {}
  int alphabet_size() const override { return inner_->alphabet_size(); }
  Distribution predict(const History& context) const override;
  std::vector<double> conditionals_along(const History& h) const override {
    return inner_->conditionals_along(h);
  }
  std::string describe() const override { return inner_->describe(); }

 private:
  SemiDistributionPtr inner_;
  mutable std::map<History, Distribution> cache_;
};

}  // namespace kllab

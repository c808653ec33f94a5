#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kllab/core.hpp"
#include "kllab/divergence.hpp"
#include "kllab/mixture.hpp"
#include "kllab/planning.hpp"
#include "kllab/toylang.hpp"

namespace kllab {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stochastic policy stored per action context.
class PolicyMap final : public SemiDistribution {
 public:
  PolicyMap(int alphabet_size, std::map<History, Distribution> rows, std::string name = "policy map");
  int alphabet_size() const override { return size_; }
  Distribution predict(const History& context) const override;
  std::string describe() const override { return name_; }
  const std::map<History, Distribution>& rows() const { return rows_; }

 private:
  int size_;
  std::map<History, Distribution> rows_;
  std::string name_;
};

struct ConstrainedSolution {
  PolicyPtr policy;
  double achieved_value = 0.0;
  double achieved_constraint = 0.0;  // nats (KL) or probability (TVD)
  double multiplier = 0.0;           // KL case; 0 for the greedy limit
  bool certified = false;
  double expected_kl = 0.0;          // KL case only
};

struct KlSolverOptions {
  double lambda_min = 1e-6;
  double lambda_max = 1e6;
  int max_iterations = 200;
  double relative_tolerance = 1e-6;
  PlanningOptions planning;
};

/// Maximizes value subject to lifetime_kl(policy, beta) <= budget over the
/// soft policy family pi(a|h) ~ beta(a|h) exp(Q(h,a) / lambda). The multiplier
/// is set on the expected KL and then raised until the max-over-observations
/// KL fits the budget.
ConstrainedSolution kl_constrained_optimize(const SemiDistribution& env, const SemiDistribution& beta,
                                            const UtilityFunction& u, const History& start,
                                            double budget_nats, const KlSolverOptions& opts = {});

/// Soft policy for a fixed multiplier; lambda = 0 gives the greedy limit
/// (beta restricted to the maximizing actions).
std::shared_ptr<const PolicyMap> soft_policy(const SemiDistribution& env, const SemiDistribution& beta,
                                             const UtilityFunction& u, const History& start,
                                             double lambda, const PlanningOptions& opts = {});

struct TvdSolverOptions {
  int resolution = 100;       // grid points per unit on every simplex coordinate
  double max_candidates = 2e7;
  PlanningOptions planning;
};

/// Brute force over policies whose probabilities are multiples of
/// 1/resolution at every action node reachable with positive environment
/// probability. Unreachable nodes keep beta. Ties: higher value, then smaller
/// TVD, then the first grid point in enumeration order.
ConstrainedSolution tvd_constrained_optimize(const SemiDistribution& env, const Policy& beta,
                                             const UtilityFunction& u, const History& start,
                                             double budget, const TvdSolverOptions& opts = {});

/// Follows base's action predictions until the trigger first happens, then
/// post evaluated on the history from that point on.
PolicyPtr make_switch_policy(SemiDistributionPtr base, EventPtr trigger, PolicyPtr post);

/// Deterministic policy over the subtree below `start` as a finite-state
/// predictor reading the history from `start` on. Throws EncodingError when
/// more than 64 states are needed.
std::shared_ptr<const FiniteStatePredictor> policy_automaton(const PolicyTable& policy,
                                                             const History& start, int horizon);

struct Theorem1Report {
  double target_value = 0.0;
  double optimal_value = 0.0;
  double achieved_value = 0.0;
  double measured_kl = 0.0;  // nats
  std::size_t delta_bits = 0;
  double bound_nats = 0.0;
  double slack = 0.0;
  bool holds = false;
  std::string post_policy;
  std::string post_encoding;
  DivergenceReport kl_report;
};

/// Builds the switch-augmented class, picks the shortest encodable post
/// policy whose value exceeds `target_value`, and compares the switch policy's
/// lifetime KL against the augmented mixture with the wrapper overhead.
/// `cls` must be unconditioned; the trigger must first happen exactly at the
/// end of `start`.
Theorem1Report theorem1_bound_check(const ModelClassPosterior& cls, const toylang::Language& lang,
                                    const toylang::EventCode& trigger, const UtilityFunction& u,
                                    const History& start, double target_value,
                                    VariantWeighting weighting = VariantWeighting::chain,
                                    const PlanningOptions& opts = {});

struct SpendStep {
  int timestep = 0;
  double kl = 0.0;          // nats
  double cumulative = 0.0;  // nats
};

struct SpendProfile {
  History realized;
  std::vector<SpendStep> steps;
  double total() const { return steps.empty() ? 0.0 : steps.back().cumulative; }
};

/// Per-step KL(pi || beta) along one branch sampled with actions from `pi` and
/// observations from `env`, from `start` to the horizon.
SpendProfile budget_spend_profile(const Policy& pi, const SemiDistribution& beta,
                                  const SemiDistribution& env, const History& start, int horizon,
                                  std::uint64_t seed);

}  // namespace kllab

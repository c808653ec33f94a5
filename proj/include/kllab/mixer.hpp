#pragma once

#include <stdexcept>
#include <vector>

#include "kllab/core.hpp"

namespace kllab {

/// Raised for gradients at a boundary solution or for a = b.
class GradientUndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct MixQuery {
  Distribution proposed;  // a
  Distribution base;      // b, full support
  double target_kl = 0.0;
};

struct MixSolution {
  double alpha = 0.0;
  double achieved_kl = 0.0;
};

/// KL(alpha a + (1 - alpha) b || b), nondecreasing and convex in alpha.
double mixed_kl(const Distribution& a, const Distribution& b, double alpha);

/// Smallest mixing weight whose KL reaches the target, by bisection. Targets
/// above KL(a || b) give alpha = 1.
MixSolution solve_alpha(const MixQuery& q);

struct AlphaGradients {
  double d_target = 0.0;
  std::vector<double> d_proposed;  // treats each a(x) as a free coordinate
};

/// Implicit-function gradients of the interior solution alpha.
AlphaGradients alpha_gradients(const MixQuery& q, double alpha);

/// Signed per-episode KL account.
class KLBudgetLedger {
 public:
  explicit KLBudgetLedger(double total_nats);

  double total() const { return total_; }
  double spent() const { return spent_; }
  double remaining() const { return total_ - spent_; }

  /// Charges ln(policy_prob / base_prob); negative charges refund budget.
  KLBudgetLedger step(double policy_prob, double base_prob) const;
  /// logistic(activation) * remaining, floored at zero.
  double step_target(double activation) const;

 private:
  double total_;
  double spent_ = 0.0;
};

}  // namespace kllab

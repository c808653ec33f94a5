#include "kllab/mixer.hpp"

#include <cmath>

namespace kllab {

namespace {

void check_query(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size() || a.empty()) throw std::domain_error("a and b must share an alphabet");
  for (double p : a)
    if (!(p >= 0.0)) throw std::domain_error("proposed distribution has a negative entry");
  for (double p : b)
    if (!(p > 0.0)) throw std::domain_error("base distribution needs full support");
  if (std::abs(mass(a) - 1.0) > 1e-12 || std::abs(mass(b) - 1.0) > 1e-12)
    throw std::domain_error("a and b must each sum to one");
}

double slope(const Distribution& a, const Distribution& b, double alpha) {
  double g = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    const double q = alpha * a[x] + (1.0 - alpha) * b[x];
    if (q > 0.0) g += (a[x] - b[x]) * std::log(q / b[x]);
  }
  return g;
}

}  // namespace

double mixed_kl(const Distribution& a, const Distribution& b, double alpha) {
  double g = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    const double q = alpha * a[x] + (1.0 - alpha) * b[x];
    if (q > 0.0) g += q * std::log(q / b[x]);
  }
  return std::max(g, 0.0);
}

MixSolution solve_alpha(const MixQuery& q) {
  check_query(q.proposed, q.base);
  if (!(q.target_kl >= 0.0)) throw std::domain_error("target KL must be nonnegative");
  const double full = mixed_kl(q.proposed, q.base, 1.0);
  if (q.target_kl <= 0.0) return {0.0, 0.0};
  if (q.target_kl >= full) return {1.0, full};
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mixed_kl(q.proposed, q.base, mid) < q.target_kl)
      lo = mid;
    else
      hi = mid;
  }
  const double g_lo = mixed_kl(q.proposed, q.base, lo);
  const double g_hi = mixed_kl(q.proposed, q.base, hi);
  return std::abs(g_lo - q.target_kl) < std::abs(g_hi - q.target_kl) ? MixSolution{lo, g_lo}
                                                                     : MixSolution{hi, g_hi};
}

AlphaGradients alpha_gradients(const MixQuery& q, double alpha) {
  check_query(q.proposed, q.base);
  if (!(alpha > 0.0 && alpha < 1.0)) throw GradientUndefinedError("alpha is on the boundary");
  const double g_prime = slope(q.proposed, q.base, alpha);
  if (!(g_prime > 0.0)) throw GradientUndefinedError("KL is flat in alpha (a equals b)");
  AlphaGradients out;
  out.d_target = 1.0 / g_prime;
  for (std::size_t x = 0; x < q.proposed.size(); ++x) {
    const double mix = alpha * q.proposed[x] + (1.0 - alpha) * q.base[x];
    out.d_proposed.push_back(-alpha * (std::log(mix / q.base[x]) + 1.0) / g_prime);
  }
  return out;
}

KLBudgetLedger::KLBudgetLedger(double total_nats) : total_(total_nats) {
  if (!(total_nats >= 0.0)) throw std::domain_error("budget must be nonnegative");
}

KLBudgetLedger KLBudgetLedger::step(double policy_prob, double base_prob) const {
  if (!(policy_prob > 0.0 && policy_prob <= 1.0) || !(base_prob > 0.0 && base_prob <= 1.0))
    throw std::domain_error("ledger probabilities must lie in (0,1]");
  KLBudgetLedger next = *this;
  next.spent_ += std::log(policy_prob / base_prob);
  return next;
}

double KLBudgetLedger::step_target(double activation) const {
  const double fraction = 1.0 / (1.0 + std::exp(-activation));
  return fraction * std::max(remaining(), 0.0);
}

}  // namespace kllab

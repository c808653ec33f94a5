#include "kllab/divergence.hpp"

#include <cmath>
#include <limits>

namespace kllab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const SemiDistribution& a, const SemiDistribution& b) {
  if (a.alphabet_size() != b.alphabet_size())
    throw std::invalid_argument("divergence operands disagree on the alphabet");
}

std::size_t steps_to(const History& start, int horizon) {
  if (start.size() % 2 != 0) throw std::invalid_argument("start history must end at an action boundary");
  if (horizon < 0 || start.completed_steps() > static_cast<std::size_t>(horizon))
    throw std::invalid_argument("start history is longer than the horizon");
  return static_cast<std::size_t>(horizon) - start.completed_steps();
}

/// Calls fn(branch) for every observation sequence of length n, in
/// lexicographic order.
template <class Fn>
void for_each_branch(int alphabet, std::size_t n, Fn&& fn) {
  std::vector<Symbol> branch(n, 0);
  while (true) {
    fn(branch);
    std::size_t i = n;
    while (i > 0 && branch[i - 1] == alphabet - 1) branch[--i] = 0;
    if (i == 0) return;
    ++branch[i - 1];
  }
}

/// Accumulates reach-weighted stepwise KL per depth for a fixed branch.
void branch_kl(const Policy& pi, const SemiDistribution& beta, const History& h,
               const std::vector<Symbol>& branch, std::size_t depth, std::size_t steps,
               double reach, std::vector<double>& per_depth) {
  const Distribution p = pi.predict(h);
  const Distribution q = beta.predict(h);
  per_depth[depth] += reach * stepwise_kl(p, q);
  if (depth + 1 == steps) return;
  for (Symbol a = 0; a < static_cast<Symbol>(p.size()); ++a)
    if (p[a] > 0.0)
      branch_kl(pi, beta, h.append(a).append(branch[depth]), branch, depth + 1, steps,
                reach * p[a], per_depth);
}

double branch_tvd(const Policy& pi, const Policy& beta, const History& h,
                  const std::vector<Symbol>& branch, std::size_t depth, std::size_t steps,
                  double p_path, double q_path) {
  if (depth == steps) return std::max(0.0, p_path - q_path);
  // Once pi has no mass left the remaining terms are all zero.
  if (p_path == 0.0) return 0.0;
  const Distribution p = pi.predict(h);
  const Distribution q = beta.predict(h);
  double total = 0.0;
  for (Symbol a = 0; a < static_cast<Symbol>(p.size()); ++a) {
    const History next = depth + 1 < steps ? h.append(a).append(branch[depth]) : h;
    total += branch_tvd(pi, beta, next, branch, depth + 1, steps, p_path * p[a], q_path * q[a]);
  }
  return total;
}

}  // namespace

double stepwise_kl(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("distributions differ in size");
  double total = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] <= 0.0) continue;
    if (q[x] <= 0.0) return kInf;
    total += p[x] * std::log(p[x] / q[x]);
  }
  return total;
}

DivergenceReport lifetime_kl(const Policy& pi, const SemiDistribution& beta, const History& start,
                             int horizon, const PlanningOptions& opts) {
  check_pair(pi, beta);
  const std::size_t steps = steps_to(start, horizon);
  check_capacity(pi.alphabet_size(), steps, opts.node_cap);
  DivergenceReport best;
  if (steps == 0) return best;
  const int first_step = static_cast<int>(start.completed_steps()) + 1;
  bool have = false;
  for_each_branch(pi.alphabet_size(), steps - 1, [&](const std::vector<Symbol>& branch) {
    std::vector<double> per_depth(steps, 0.0);
    branch_kl(pi, beta, start, branch, 0, steps, 1.0, per_depth);
    double total = 0.0;
    for (double c : per_depth) total += c;
    if (!have || total > best.value) {
      have = true;
      best.value = total;
      best.maximizing_observations = branch;
      best.per_step.clear();
      for (std::size_t d = 0; d < steps; ++d)
        best.per_step.emplace_back(first_step + static_cast<int>(d), per_depth[d]);
    }
  });
  return best;
}

DivergenceReport branch_lifetime_kl(const Policy& pi, const SemiDistribution& beta,
                                    const History& start, int horizon,
                                    const std::vector<Symbol>& observations,
                                    const PlanningOptions& opts) {
  check_pair(pi, beta);
  const std::size_t steps = steps_to(start, horizon);
  check_capacity(pi.alphabet_size(), steps, opts.node_cap);
  DivergenceReport r;
  if (steps == 0) return r;
  if (observations.size() != steps - 1)
    throw std::invalid_argument("branch must fix every observation before the last action");
  for (Symbol o : observations)
    if (o < 0 || o >= pi.alphabet_size()) throw std::invalid_argument("observation outside the alphabet");
  std::vector<double> per_depth(steps, 0.0);
  branch_kl(pi, beta, start, observations, 0, steps, 1.0, per_depth);
  const int first_step = static_cast<int>(start.completed_steps()) + 1;
  r.maximizing_observations = observations;
  for (std::size_t d = 0; d < steps; ++d) {
    r.value += per_depth[d];
    r.per_step.emplace_back(first_step + static_cast<int>(d), per_depth[d]);
  }
  return r;
}

namespace {

double expected_kl_from(const Policy& pi, const SemiDistribution& beta, const SemiDistribution& env,
                        const History& h, int last_step) {
  if (static_cast<int>(h.completed_steps()) + 1 > last_step) return 0.0;
  const Distribution p = pi.predict(h);
  double total = stepwise_kl(p, beta.predict(h));
  if (std::isinf(total)) return total;
  for (Symbol a = 0; a < static_cast<Symbol>(p.size()); ++a) {
    if (p[a] <= 0.0) continue;
    const History ha = h.append(a);
    const Distribution o = env.predict(ha);
    for (Symbol x = 0; x < static_cast<Symbol>(o.size()); ++x)
      if (o[x] > 0.0) total += p[a] * o[x] * expected_kl_from(pi, beta, env, ha.append(x), last_step);
  }
  return total;
}

}  // namespace

double expected_lifetime_kl(const Policy& pi, const SemiDistribution& beta,
                            const SemiDistribution& env, const History& start, int last_step,
                            const PlanningOptions& opts) {
  check_pair(pi, beta);
  check_pair(pi, env);
  if (start.size() % 2 != 0) throw std::invalid_argument("start history must end at an action boundary");
  const int first = static_cast<int>(start.completed_steps()) + 1;
  if (last_step < first - 1) throw std::invalid_argument("last step precedes the start");
  check_capacity(pi.alphabet_size(), static_cast<std::size_t>(last_step - first + 1), opts.node_cap);
  return expected_kl_from(pi, beta, env, start, last_step);
}

DivergenceReport lifetime_tvd(const Policy& pi, const Policy& beta, const History& start,
                              int horizon, const PlanningOptions& opts) {
  check_pair(pi, beta);
  const std::size_t steps = steps_to(start, horizon);
  check_capacity(pi.alphabet_size(), steps, opts.node_cap);
  DivergenceReport best;
  if (steps == 0) return best;
  bool have = false;
  for_each_branch(pi.alphabet_size(), steps - 1, [&](const std::vector<Symbol>& branch) {
    const double v = branch_tvd(pi, beta, start, branch, 0, steps, 1.0, 1.0);
    if (!have || v > best.value) {
      have = true;
      best.value = v;
      best.maximizing_observations = branch;
    }
  });
  return best;
}

}  // namespace kllab

#include "kllab/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kllab/random.hpp"

namespace kllab {

PolicyMap::PolicyMap(int alphabet_size, std::map<History, Distribution> rows, std::string name)
    : size_(Alphabet(alphabet_size).size()), rows_(std::move(rows)), name_(std::move(name)) {
  for (const auto& [h, d] : rows_) check_semi_distribution(d, size_);
}

Distribution PolicyMap::predict(const History& context) const {
  auto it = rows_.find(context);
  if (it == rows_.end()) throw std::out_of_range("policy has no row for '" + context.str() + "'");
  return it->second;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Every action node below `start`, with beta and the environment's
/// observation predictions cached. Nodes are stored in pre-order.
class GameTree {
 public:
  struct Node {
    History h;
    std::size_t depth = 0;
    Distribution beta;
    std::vector<Distribution> env;  // indexed by action
    std::vector<int> child;         // a * |X| + o; -1 on the last level
    std::vector<double> leaf;       // utilities on the last level
    double reach = 1.0;             // environment probability of the path here
    std::size_t branch_lo = 0;      // observation branches through this node:
    std::size_t branch_hi = 0;      //   [branch_lo, branch_hi) in lexicographic order
  };

  GameTree(const SemiDistribution& env, const SemiDistribution& beta, const UtilityFunction& u,
           const History& start, const PlanningOptions& opts)
      : a_(env.alphabet_size()), u0_(opts.unfinished_utility) {
    if (beta.alphabet_size() != a_) throw std::invalid_argument("base and environment disagree on the alphabet");
    steps_ = lookahead(u, start);
    if (steps_ == 0) throw std::invalid_argument("no action left before the horizon");
    check_capacity(a_, steps_, opts.node_cap);
    branches_ = 1;
    for (std::size_t i = 0; i + 1 < steps_; ++i) branches_ *= static_cast<std::size_t>(a_);
    build(env, beta, u, start, 0, 1.0, 0, branches_);
  }

  std::size_t branches() const { return branches_; }

  int alphabet() const { return a_; }
  std::size_t steps() const { return steps_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Q(n, a) given continuation values V of the child nodes.
  double q(std::size_t n, Symbol a, const std::vector<double>& v) const {
    const Node& node = nodes_[n];
    const Distribution& o = node.env[a];
    double total = (1.0 - mass(o)) * u0_;
    for (Symbol x = 0; x < a_; ++x) {
      if (o[x] <= 0.0) continue;
      const std::size_t k = static_cast<std::size_t>(a * a_ + x);
      total += o[x] * (node.child[k] < 0 ? node.leaf[k] : v[node.child[k]]);
    }
    return total;
  }

  double value(const std::vector<Distribution>& pi) const {
    std::vector<double> v(nodes_.size(), 0.0);
    for (std::size_t n = nodes_.size(); n-- > 0;) {
      double total = (1.0 - mass(pi[n])) * u0_;
      for (Symbol a = 0; a < a_; ++a)
        if (pi[n][a] > 0.0) total += pi[n][a] * q(n, a, v);
      v[n] = total;
    }
    return v[0];
  }

  double expected_kl(const std::vector<Distribution>& pi) const {
    std::vector<double> ek(nodes_.size(), 0.0);
    for (std::size_t n = nodes_.size(); n-- > 0;) {
      const Node& node = nodes_[n];
      double total = stepwise_kl(pi[n], node.beta);
      if (std::isinf(total)) {
        ek[n] = total;
        continue;
      }
      if (node.depth + 1 < steps_) {
        for (Symbol a = 0; a < a_; ++a) {
          if (pi[n][a] <= 0.0) continue;
          for (Symbol x = 0; x < a_; ++x)
            if (node.env[a][x] > 0.0)
              total += pi[n][a] * node.env[a][x] * ek[node.child[a * a_ + x]];
        }
      }
      ek[n] = total;
    }
    return ek[0];
  }

  /// Max over observation branches of the summed positive parts.
  double tvd(const std::vector<Distribution>& pi) const {
    std::vector<Symbol> branch(steps_ - 1, 0);
    double best = 0.0;
    while (true) {
      best = std::max(best, branch_tvd(pi, branch, 0, 1.0, 1.0));
      std::size_t i = branch.size();
      while (i > 0 && branch[i - 1] == a_ - 1) branch[--i] = 0;
      if (i == 0) return best;
      ++branch[i - 1];
    }
  }

  /// Path KL for every observation branch, in lexicographic branch order.
  std::vector<double> branch_kls(const std::vector<Distribution>& pi) const {
    std::vector<double> out(branches_, 0.0);
    std::vector<double> step(nodes_.size());
    for (std::size_t n = 0; n < nodes_.size(); ++n) step[n] = stepwise_kl(pi[n], nodes_[n].beta);
    std::vector<Symbol> branch(steps_ - 1, 0);
    for (std::size_t b = 0; b < branches_; ++b) {
      std::size_t rest = b;
      for (std::size_t i = branch.size(); i-- > 0;) {
        branch[i] = static_cast<Symbol>(rest % static_cast<std::size_t>(a_));
        rest /= static_cast<std::size_t>(a_);
      }
      out[b] = branch_kl(pi, step, branch, 0, 1.0);
    }
    return out;
  }

  std::shared_ptr<const PolicyMap> to_policy(const std::vector<Distribution>& pi,
                                             std::string name) const {
    std::map<History, Distribution> rows;
    for (std::size_t n = 0; n < nodes_.size(); ++n) rows.emplace(nodes_[n].h, pi[n]);
    return std::make_shared<PolicyMap>(a_, std::move(rows), std::move(name));
  }

  std::vector<Distribution> beta_rows() const {
    std::vector<Distribution> out;
    for (const auto& n : nodes_) out.push_back(n.beta);
    return out;
  }

 private:
  int build(const SemiDistribution& env, const SemiDistribution& beta, const UtilityFunction& u,
            const History& h, std::size_t depth, double reach, std::size_t lo, std::size_t hi) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.h = h;
    node.depth = depth;
    node.reach = reach;
    node.branch_lo = lo;
    node.branch_hi = hi;
    node.beta = beta.predict(h);
    const bool last = depth + 1 == steps_;
    node.child.assign(static_cast<std::size_t>(a_ * a_), -1);
    if (last) node.leaf.assign(static_cast<std::size_t>(a_ * a_), 0.0);
    for (Symbol a = 0; a < a_; ++a) {
      const History ha = h.append(a);
      node.env.push_back(env.predict(ha));
      for (Symbol x = 0; x < a_; ++x) {
        const std::size_t k = static_cast<std::size_t>(a * a_ + x);
        if (last)
          node.leaf[k] = u(ha.append(x));
        else {
          const std::size_t width = (hi - lo) / static_cast<std::size_t>(a_);
          node.child[k] = build(env, beta, u, ha.append(x), depth + 1, reach * node.env[a][x],
                                lo + width * static_cast<std::size_t>(x),
                                lo + width * static_cast<std::size_t>(x + 1));
        }
      }
    }
    nodes_[id] = std::move(node);
    return id;
  }

  double branch_tvd(const std::vector<Distribution>& pi, const std::vector<Symbol>& branch,
                    std::size_t n, double p_path, double q_path) const {
    const Node& node = nodes_[n];
    double total = 0.0;
    for (Symbol a = 0; a < a_; ++a) {
      const double p = p_path * pi[n][a];
      const double q = q_path * node.beta[a];
      if (node.depth + 1 == steps_) {
        total += std::max(0.0, p - q);
      } else if (p > 0.0) {
        total += branch_tvd(pi, branch, node.child[a * a_ + branch[node.depth]], p, q);
      }
    }
    return total;
  }

  double branch_kl(const std::vector<Distribution>& pi, const std::vector<double>& step,
                   const std::vector<Symbol>& branch, std::size_t n, double reach) const {
    const Node& node = nodes_[n];
    double total = reach * step[n];
    if (node.depth + 1 == steps_ || std::isinf(total)) return total;
    for (Symbol a = 0; a < a_; ++a)
      if (pi[n][a] > 0.0)
        total += branch_kl(pi, step, branch, node.child[a * a_ + branch[node.depth]], reach * pi[n][a]);
    return total;
  }

  int a_;
  double u0_;
  std::size_t steps_ = 0;
  std::size_t branches_ = 1;
  std::vector<Node> nodes_;
};

/// Soft (lambda > 0) or greedy-limit (lambda = 0) backward induction.
std::vector<Distribution> soft_rows(const GameTree& tree, double lambda, double unfinished) {
  const auto& nodes = tree.nodes();
  const int a_n = tree.alphabet();
  std::vector<double> v(nodes.size(), 0.0);
  std::vector<Distribution> pi(nodes.size());
  for (std::size_t n = nodes.size(); n-- > 0;) {
    const Distribution& beta = nodes[n].beta;
    const double halt = std::max(0.0, 1.0 - mass(beta));
    std::vector<double> q(static_cast<std::size_t>(a_n));
    for (Symbol a = 0; a < a_n; ++a) q[a] = tree.q(n, a, v);
    Distribution row(static_cast<std::size_t>(a_n), 0.0);
    if (lambda == 0.0) {
      double best = -kInf;
      for (Symbol a = 0; a < a_n; ++a)
        if (beta[a] > 0.0) best = std::max(best, q[a]);
      if (halt > kMassTolerance) best = std::max(best, unfinished);
      double kept = 0.0;
      for (Symbol a = 0; a < a_n; ++a)
        if (beta[a] > 0.0 && q[a] >= best - 1e-12) kept += beta[a];
      const bool keep_halt = halt > kMassTolerance && unfinished >= best - 1e-12;
      if (keep_halt) kept += halt;
      for (Symbol a = 0; a < a_n; ++a)
        if (beta[a] > 0.0 && q[a] >= best - 1e-12) row[a] = beta[a] / kept;
      v[n] = best;
    } else {
      double top = -kInf;
      std::vector<double> t(static_cast<std::size_t>(a_n), -kInf);
      for (Symbol a = 0; a < a_n; ++a)
        if (beta[a] > 0.0) top = std::max(top, t[a] = std::log(beta[a]) + q[a] / lambda);
      const double t_halt = halt > kMassTolerance ? std::log(halt) + unfinished / lambda : -kInf;
      top = std::max(top, t_halt);
      double z = t_halt == -kInf ? 0.0 : std::exp(t_halt - top);
      for (Symbol a = 0; a < a_n; ++a)
        if (t[a] != -kInf) z += std::exp(t[a] - top);
      for (Symbol a = 0; a < a_n; ++a)
        if (t[a] != -kInf) row[a] = std::exp(t[a] - top) / z;
      v[n] = lambda * (top + std::log(z));
    }
    pi[n] = std::move(row);
  }
  return pi;
}

/// Backward pass for the per-branch Lagrangian: node n trades value weighted
/// by its environment reach against its KL weighted by the multipliers of the
/// observation branches through it. Zero total multiplier means greedy.
std::vector<Distribution> branch_weighted_rows(const GameTree& tree, const std::vector<double>& mu,
                                               double unfinished) {
  const auto& nodes = tree.nodes();
  const int a_n = tree.alphabet();
  std::vector<double> prefix(mu.size() + 1, 0.0);
  for (std::size_t b = 0; b < mu.size(); ++b) prefix[b + 1] = prefix[b] + mu[b];
  std::vector<double> j(nodes.size(), 0.0);
  std::vector<Distribution> pi(nodes.size());
  for (std::size_t n = nodes.size(); n-- > 0;) {
    const auto& node = nodes[n];
    const bool last = node.child[0] < 0;
    const double temp = prefix[node.branch_hi] - prefix[node.branch_lo];
    const double halt = std::max(0.0, 1.0 - mass(node.beta));
    std::vector<double> g(static_cast<std::size_t>(a_n));
    for (Symbol a = 0; a < a_n; ++a) {
      const Distribution& o = node.env[a];
      double total = node.reach * (1.0 - mass(o)) * unfinished;
      for (Symbol x = 0; x < a_n; ++x) {
        const std::size_t k = static_cast<std::size_t>(a * a_n + x);
        total += last ? node.reach * o[x] * node.leaf[k] : j[node.child[k]];
      }
      g[a] = total;
    }
    const double g_halt = node.reach * unfinished;
    Distribution row(static_cast<std::size_t>(a_n), 0.0);
    if (temp <= 0.0) {
      double best = -kInf;
      for (Symbol a = 0; a < a_n; ++a)
        if (node.beta[a] > 0.0) best = std::max(best, g[a]);
      if (halt > kMassTolerance) best = std::max(best, g_halt);
      double kept = halt > kMassTolerance && g_halt >= best - 1e-12 ? halt : 0.0;
      for (Symbol a = 0; a < a_n; ++a)
        if (node.beta[a] > 0.0 && g[a] >= best - 1e-12) kept += node.beta[a];
      for (Symbol a = 0; a < a_n; ++a)
        if (node.beta[a] > 0.0 && g[a] >= best - 1e-12) row[a] = node.beta[a] / kept;
      j[n] = best;
    } else {
      std::vector<double> t(static_cast<std::size_t>(a_n), -kInf);
      double top = halt > kMassTolerance ? std::log(halt) + g_halt / temp : -kInf;
      const double t_halt = top;
      for (Symbol a = 0; a < a_n; ++a)
        if (node.beta[a] > 0.0) top = std::max(top, t[a] = std::log(node.beta[a]) + g[a] / temp);
      double z = t_halt == -kInf ? 0.0 : std::exp(t_halt - top);
      for (Symbol a = 0; a < a_n; ++a)
        if (t[a] != -kInf) z += std::exp(t[a] - top);
      for (Symbol a = 0; a < a_n; ++a)
        if (t[a] != -kInf) row[a] = std::exp(t[a] - top) / z;
      j[n] = temp * (top + std::log(z));
    }
    pi[n] = std::move(row);
  }
  return pi;
}

/// Coordinate descent on the dual over per-branch multipliers. Returns the
/// tightest feasible policy found, or nothing when it cannot certify one.
std::optional<std::vector<Distribution>> refine_by_branch(const GameTree& tree, double budget,
                                                          double unfinished, double slack) {
  constexpr double kMuMin = 1e-14, kMuMax = 1e6;
  constexpr int kSweeps = 60, kBisection = 60;
  std::vector<double> mu(tree.branches(), 0.0);
  auto kls = [&](const std::vector<double>& m) {
    return tree.branch_kls(branch_weighted_rows(tree, m, unfinished));
  };
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t b = 0; b < mu.size(); ++b) {
      const double old = mu[b];
      mu[b] = 0.0;
      if (kls(mu)[b] > budget) {
        double lo = std::log(kMuMin), hi = std::log(kMuMax);
        mu[b] = kMuMax;
        if (kls(mu)[b] <= budget) {
          for (int it = 0; it < kBisection; ++it) {
            const double mid = 0.5 * (lo + hi);
            mu[b] = std::exp(mid);
            (kls(mu)[b] > budget ? lo : hi) = mid;
          }
          mu[b] = std::exp(hi);
        }
      }
      moved = std::max(moved, std::abs(mu[b] - old) / std::max(1e-300, std::max(mu[b], old)));
    }
    if (moved < 1e-9) break;
  }
  // Coupled multipliers can leave a branch marginally over budget; scale up.
  auto worst = [&](const std::vector<double>& m) {
    const auto k = kls(m);
    return *std::max_element(k.begin(), k.end());
  };
  if (worst(mu) > budget + slack) {
    double lo = 0.0, hi = std::log(kMuMax / std::max(kMuMin, *std::max_element(mu.begin(), mu.end())));
    auto scaled = [&](double s) {
      std::vector<double> m = mu;
      for (double& x : m) x = x > 0.0 ? x * std::exp(s) : 0.0;
      return m;
    };
    if (worst(scaled(hi)) > budget + slack) return std::nullopt;
    for (int it = 0; it < kBisection; ++it) {
      const double mid = 0.5 * (lo + hi);
      (worst(scaled(mid)) > budget + slack ? lo : hi) = mid;
    }
    mu = scaled(hi);
  }
  return branch_weighted_rows(tree, mu, unfinished);
}

double max_kl(const GameTree& tree, const std::vector<Distribution>& pi, const History& start,
              int horizon, const PlanningOptions& opts) {
  const auto policy = tree.to_policy(pi, "candidate");
  const auto beta = tree.to_policy(tree.beta_rows(), "base");
  return lifetime_kl(*policy, *beta, start, horizon, opts).value;
}

}  // namespace

std::shared_ptr<const PolicyMap> soft_policy(const SemiDistribution& env, const SemiDistribution& beta,
                                             const UtilityFunction& u, const History& start,
                                             double lambda, const PlanningOptions& opts) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("multiplier must be nonnegative");
  const GameTree tree(env, beta, u, start, opts);
  std::ostringstream name;
  name << "soft policy (lambda " << lambda << ")";
  return tree.to_policy(soft_rows(tree, lambda, opts.unfinished_utility), name.str());
}

ConstrainedSolution kl_constrained_optimize(const SemiDistribution& env, const SemiDistribution& beta,
                                            const UtilityFunction& u, const History& start,
                                            double budget_nats, const KlSolverOptions& opts) {
  if (!(budget_nats >= 0.0)) throw std::invalid_argument("budget must be nonnegative");
  if (!(opts.lambda_min > 0.0 && opts.lambda_max > opts.lambda_min))
    throw std::invalid_argument("bad multiplier bracket");
  const GameTree tree(env, beta, u, start, opts.planning);
  const int horizon = u.horizon();
  const double u0 = opts.planning.unfinished_utility;
  const double feasible_slack = 1e-9;

  auto finish = [&](std::vector<Distribution> pi, double lambda, double certified_kl,
                    const char* name) {
    ConstrainedSolution s;
    s.achieved_value = tree.value(pi);
    s.expected_kl = tree.expected_kl(pi);
    s.achieved_constraint = certified_kl;
    s.multiplier = lambda;
    s.certified = certified_kl <= budget_nats + feasible_slack;
    s.policy = tree.to_policy(pi, name);
    return s;
  };

  if (budget_nats == 0.0) return finish(tree.beta_rows(), kInf, 0.0, "base policy");

  auto greedy = soft_rows(tree, 0.0, u0);
  const double greedy_kl = max_kl(tree, greedy, start, horizon, opts.planning);
  if (greedy_kl <= budget_nats + feasible_slack)
    return finish(std::move(greedy), 0.0, greedy_kl, "greedy-limit policy");

  auto expected_at = [&](double log_lambda) {
    return tree.expected_kl(soft_rows(tree, std::exp(log_lambda), u0));
  };
  double lo = std::log(opts.lambda_min);
  double hi = std::log(opts.lambda_max);
  if (expected_at(hi) > budget_nats) {
    // Even the flattest member spends too much; only the base is certain.
    return finish(tree.beta_rows(), kInf, 0.0, "base policy");
  }
  if (expected_at(lo) <= budget_nats) {
    hi = lo;
  } else {
    const double tol = opts.relative_tolerance * budget_nats;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double g = expected_at(mid);
      if (g > budget_nats)
        lo = mid;
      else
        hi = mid;
      if (budget_nats - expected_at(hi) <= tol) break;
    }
    if (it == opts.max_iterations && budget_nats - expected_at(hi) > tol)
      throw ConvergenceError("multiplier search did not reach the budget within the iteration cap");
  }

  // Certify against the max-over-observations constraint, tightening if needed.
  auto pi = soft_rows(tree, std::exp(hi), u0);
  double kl = max_kl(tree, pi, start, horizon, opts.planning);
  if (kl > budget_nats + feasible_slack) {
    double fail = hi;
    double pass = std::log(opts.lambda_max);
    auto pass_rows = soft_rows(tree, std::exp(pass), u0);
    double pass_kl = max_kl(tree, pass_rows, start, horizon, opts.planning);
    if (pass_kl > budget_nats + feasible_slack)
      return finish(tree.beta_rows(), kInf, 0.0, "base policy");
    for (int it = 0; it < opts.max_iterations; ++it) {
      const double mid = 0.5 * (fail + pass);
      if (mid <= fail || mid >= pass || pass - fail < 1e-12) break;
      auto rows = soft_rows(tree, std::exp(mid), u0);
      const double k = max_kl(tree, rows, start, horizon, opts.planning);
      if (k > budget_nats + feasible_slack) {
        fail = mid;
      } else {
        pass = mid;
        pass_rows = std::move(rows);
        pass_kl = k;
      }
    }
    hi = pass;
    pi = std::move(pass_rows);
    kl = pass_kl;
  }
  ConstrainedSolution single = finish(std::move(pi), std::exp(hi), kl, "kl-constrained soft policy");

  // One multiplier prices every branch by its environment probability, which
  // is conservative when observations are random or depend on the action.
  // Separate multipliers per observation branch close that gap.
  if (tree.branches() > 1 || tree.nodes().size() > 1) {
    if (auto rows = refine_by_branch(tree, budget_nats, u0, feasible_slack)) {
      const double refined_kl = max_kl(tree, *rows, start, horizon, opts.planning);
      if (refined_kl <= budget_nats + feasible_slack && tree.value(*rows) > single.achieved_value) {
        ConstrainedSolution s = finish(std::move(*rows), single.multiplier, refined_kl,
                                       "kl-constrained branch-priced policy");
        return s;
      }
    }
  }
  return single;
}

// ---------------------------------------------------------------------------

namespace {

void compositions(int parts, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  // Descending first coordinate so that more mass on low actions comes first.
  for (int k = total; k >= 0; --k) {
    cur.push_back(k);
    compositions(parts - 1, total - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

ConstrainedSolution tvd_constrained_optimize(const SemiDistribution& env, const Policy& beta,
                                             const UtilityFunction& u, const History& start,
                                             double budget, const TvdSolverOptions& opts) {
  if (!(budget >= 0.0)) throw std::invalid_argument("budget must be nonnegative");
  if (opts.resolution < 1) throw std::invalid_argument("grid resolution must be positive");
  const GameTree tree(env, beta, u, start, opts.planning);
  const auto& nodes = tree.nodes();
  const int a_n = tree.alphabet();

  std::vector<std::vector<int>> grid_counts;
  std::vector<int> cur;
  compositions(a_n, opts.resolution, cur, grid_counts);

  // A node is free when some action sequence reaches it with positive
  // environment probability.
  std::vector<bool> reachable(nodes.size(), false);
  reachable[0] = true;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!reachable[n] || nodes[n].depth + 1 == tree.steps()) continue;
    for (Symbol a = 0; a < a_n; ++a)
      for (Symbol x = 0; x < a_n; ++x)
        if (nodes[n].env[a][x] > 0.0) reachable[nodes[n].child[a * a_n + x]] = true;
  }

  std::vector<std::size_t> free;
  std::vector<std::vector<Distribution>> options(nodes.size());
  double candidates = 1.0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    options[n].push_back(nodes[n].beta);
    if (!reachable[n]) continue;
    for (const auto& c : grid_counts) {
      Distribution d(static_cast<std::size_t>(a_n));
      for (int x = 0; x < a_n; ++x) d[x] = static_cast<double>(c[x]) / opts.resolution;
      bool same = true;
      for (int x = 0; x < a_n; ++x) same = same && std::abs(d[x] - nodes[n].beta[x]) <= 1e-15;
      if (!same) options[n].push_back(std::move(d));
    }
    free.push_back(n);
    candidates *= static_cast<double>(options[n].size());
  }
  if (candidates > opts.max_candidates) {
    std::ostringstream os;
    os << "TVD brute force needs " << candidates << " candidates, cap is " << opts.max_candidates;
    throw CapacityError(os.str());
  }

  std::vector<std::size_t> choice(free.size(), 0);
  std::vector<Distribution> pi = tree.beta_rows();
  std::vector<Distribution> best_pi;
  double best_value = -kInf, best_tvd = kInf;
  while (true) {
    for (std::size_t i = 0; i < free.size(); ++i) pi[free[i]] = options[free[i]][choice[i]];
    const double t = tree.tvd(pi);
    if (t <= budget + 1e-12) {
      const double v = tree.value(pi);
      if (v > best_value + 1e-12 || (v >= best_value - 1e-12 && t < best_tvd - 1e-12)) {
        best_value = v;
        best_tvd = t;
        best_pi = pi;
      }
    }
    std::size_t i = free.size();
    while (i > 0 && choice[i - 1] + 1 == options[free[i - 1]].size()) choice[--i] = 0;
    if (i == 0) break;
    ++choice[i - 1];
  }
  ConstrainedSolution s;
  s.achieved_value = tree.value(best_pi);
  s.achieved_constraint = best_tvd;
  s.certified = best_tvd <= budget + 1e-9;
  s.policy = tree.to_policy(best_pi, "tvd-constrained grid policy");
  return s;
}

// ---------------------------------------------------------------------------

PolicyPtr make_switch_policy(SemiDistributionPtr base, EventPtr trigger, PolicyPtr post) {
  return std::make_shared<SwitchPredictor>(std::move(base), std::move(trigger), std::move(post));
}

std::shared_ptr<const FiniteStatePredictor> policy_automaton(const PolicyTable& policy,
                                                             const History& start, int horizon) {
  const int a_n = policy.alphabet_size();
  if (start.size() % 2 != 0 || static_cast<int>(start.completed_steps()) >= horizon)
    throw std::invalid_argument("policy automaton needs an action boundary before the horizon");
  const std::size_t steps = static_cast<std::size_t>(horizon) - start.completed_steps();
  const Distribution uniform(static_cast<std::size_t>(a_n), 1.0 / a_n);
  std::vector<int> transitions;
  std::vector<Distribution> action_rows, observation_rows;

  auto new_state = [&](Distribution action_row) {
    const int id = static_cast<int>(action_rows.size());
    if (id >= toylang::kMaxAutomatonStates)
      throw toylang::EncodingError("policy tree needs more than 64 automaton states");
    action_rows.push_back(std::move(action_row));
    observation_rows.push_back(uniform);
    transitions.resize(transitions.size() + static_cast<std::size_t>(a_n), 0);
    return id;
  };
  // Off-policy symbols fall back to state 0; the policy never sees them.
  auto build = [&](auto&& self, const History& h, std::size_t depth) -> int {
    const Symbol a = policy.action(h);
    Distribution point(static_cast<std::size_t>(a_n), 0.0);
    point[a] = 1.0;
    const int id = new_state(std::move(point));
    if (depth + 1 < steps) {
      const int pending = new_state(uniform);
      transitions[id * a_n + a] = pending;
      for (Symbol o = 0; o < a_n; ++o) {
        const int child = self(self, h.append(a).append(o), depth + 1);
        transitions[pending * a_n + o] = child;
      }
    }
    return id;
  };
  build(build, start, 0);
  const int states = static_cast<int>(action_rows.size());
  return std::make_shared<FiniteStatePredictor>(a_n, states, std::move(transitions),
                                                std::move(action_rows), std::move(observation_rows));
}

// ---------------------------------------------------------------------------

Theorem1Report theorem1_bound_check(const ModelClassPosterior& cls, const toylang::Language& lang,
                                    const toylang::EventCode& trigger, const UtilityFunction& u,
                                    const History& start, double target_value,
                                    VariantWeighting weighting, const PlanningOptions& opts) {
  if (!cls.history().empty()) throw std::invalid_argument("model class must be unconditioned");
  const int a_n = cls.alphabet_size();
  auto event = std::make_shared<const Event>(lang.instantiate(trigger));
  const auto first = event->first_happening(start.symbols());
  if (!first || *first != start.size())
    throw std::invalid_argument("trigger must first happen at the last timestep of the start history");
  const std::size_t steps = lookahead(u, start);
  if (steps == 0) throw std::invalid_argument("no action left before the horizon");

  // Variants predict observations exactly like their bases, so values under
  // the augmented mixture equal values under the original one.
  auto xi = std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(cls));
  const double best = optimal_value(*xi, u, start, opts);
  if (!(target_value < best)) {
    std::ostringstream os;
    os << "target value " << target_value << " is not below the optimal value " << best;
    throw InfeasibleError(os.str());
  }

  struct Candidate {
    PolicyPtr policy;
    std::size_t overhead;
  };
  std::vector<Candidate> candidates;
  const Distribution uniform(static_cast<std::size_t>(a_n), 1.0 / a_n);
  for (Symbol a = 0; a < a_n; ++a) {
    Distribution point(static_cast<std::size_t>(a_n), 0.0);
    point[a] = 1.0;
    auto p = std::make_shared<StationaryPredictor>(point, uniform);
    candidates.push_back({p, lang.wrapper_overhead(trigger, lang.encode_predictor(*p))});
  }
  try {
    auto tree = optimal_policy(*xi, u, start, opts);
    auto automaton = policy_automaton(*tree, start, u.horizon());
    candidates.push_back({automaton, lang.wrapper_overhead(trigger, lang.encode_predictor(*automaton))});
  } catch (const toylang::EncodingError&) {
    // Only the constant policies remain.
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& l, const Candidate& r) { return l.overhead < r.overhead; });

  PolicyPtr post;
  for (const auto& c : candidates) {
    const SwitchPredictor sw(xi, event, c.policy);
    if (policy_value(*xi, sw, u, start, opts) > target_value) {
      post = c.policy;
      break;
    }
  }
  if (!post)
    throw toylang::EncodingError("no encodable post policy reaches the target value");

  const AugmentedClass aug = augment_with_switch_variants(cls, lang, trigger, *post, weighting);
  auto xi_aug = std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(aug.state));
  const PolicyPtr sw = make_switch_policy(xi_aug, event, aug.post_policy);

  Theorem1Report r;
  r.target_value = target_value;
  r.optimal_value = best;
  r.achieved_value = policy_value(*xi_aug, *sw, u, start, opts);
  r.kl_report = lifetime_kl(*sw, *xi_aug, start, u.horizon(), opts);
  r.measured_kl = r.kl_report.value;
  r.delta_bits = aug.wrapper_overhead_bits;
  r.bound_nats = static_cast<double>(r.delta_bits) * std::log(2.0);
  r.slack = r.bound_nats - r.measured_kl;
  // Rounding in the mixture can put an exactly tight bound a few ulps over.
  r.holds = r.measured_kl <= r.bound_nats + 1e-12 * std::max(1.0, r.bound_nats);
  r.post_policy = post->describe();
  r.post_encoding = lang.encode(toylang::PredictorCode{lang.encode_predictor(*post), {}});
  return r;
}

SpendProfile budget_spend_profile(const Policy& pi, const SemiDistribution& beta,
                                  const SemiDistribution& env, const History& start, int horizon,
                                  std::uint64_t seed) {
  if (start.size() % 2 != 0) throw std::invalid_argument("start history must end at an action boundary");
  auto rng = seeded_stream(seed, 0);
  SpendProfile out;
  History h = start;
  double cumulative = 0.0;
  while (static_cast<int>(h.completed_steps()) < horizon) {
    const Distribution p = pi.predict(h);
    const double kl = stepwise_kl(p, beta.predict(h));
    cumulative += kl;
    out.steps.push_back({static_cast<int>(h.completed_steps()) + 1, kl, cumulative});
    const auto a = sample(p, rng);
    if (!a) break;
    h = h.append(*a);
    const auto o = sample(env.predict(h), rng);
    if (!o) break;
    h = h.append(*o);
  }
  out.realized = h;
  return out;
}

}  // namespace kllab

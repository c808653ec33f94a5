#include "kllab/planning.hpp"

#include <cmath>
#include <sstream>

namespace kllab {

std::size_t lookahead(const UtilityFunction& u, const History& start) {
  if (start.size() % 2 != 0) throw std::invalid_argument("start history must end at an action boundary");
  const auto horizon = static_cast<std::size_t>(u.horizon());
  if (start.completed_steps() > horizon)
    throw std::invalid_argument("start history is longer than the horizon");
  return horizon - start.completed_steps();
}

void check_capacity(int alphabet_size, std::size_t steps, double node_cap) {
  const double nodes = std::pow(static_cast<double>(alphabet_size), 2.0 * static_cast<double>(steps));
  if (nodes > node_cap) {
    std::ostringstream os;
    os << "enumeration of " << nodes << " nodes exceeds the cap of " << node_cap;
    throw CapacityError(os.str());
  }
}

namespace {

class Expectimax {
 public:
  Expectimax(const SemiDistribution& env, const Policy* policy, const UtilityFunction& u,
             const PlanningOptions& opts)
      : env_(env), policy_(policy), u_(u), opts_(opts), a_(env.alphabet_size()) {}

  double value(const History& h) const {
    if (h.completed_steps() == static_cast<std::size_t>(u_.horizon())) return u_(h);
    if (policy_ == nullptr) {
      const auto q = action_values(h);
      double best = q[0];
      for (double v : q) best = std::max(best, v);
      return best;
    }
    const Distribution pi = policy_->predict(h);
    double total = (1.0 - mass(pi)) * opts_.unfinished_utility;
    for (Symbol a = 0; a < a_; ++a)
      if (pi[a] > 0.0) total += pi[a] * after_action(h.append(a));
    return total;
  }

  std::vector<double> action_values(const History& h) const {
    std::vector<double> q(static_cast<std::size_t>(a_));
    for (Symbol a = 0; a < a_; ++a) q[a] = after_action(h.append(a));
    return q;
  }

 private:
  double after_action(const History& ha) const {
    const Distribution o = env_.predict(ha);
    double total = (1.0 - mass(o)) * opts_.unfinished_utility;
    for (Symbol x = 0; x < a_; ++x)
      if (o[x] > 0.0) total += o[x] * value(ha.append(x));
    return total;
  }

  const SemiDistribution& env_;
  const Policy* policy_;
  const UtilityFunction& u_;
  const PlanningOptions& opts_;
  int a_;
};

void check_alphabets(const SemiDistribution& env, const Policy* policy) {
  if (policy && policy->alphabet_size() != env.alphabet_size())
    throw std::invalid_argument("policy and environment disagree on the alphabet");
}

}  // namespace

double policy_value(const SemiDistribution& env, const Policy& policy, const UtilityFunction& u,
                    const History& start, const PlanningOptions& opts) {
  check_alphabets(env, &policy);
  check_capacity(env.alphabet_size(), lookahead(u, start), opts.node_cap);
  return Expectimax(env, &policy, u, opts).value(start);
}

double optimal_value(const SemiDistribution& env, const UtilityFunction& u, const History& start,
                     const PlanningOptions& opts) {
  check_capacity(env.alphabet_size(), lookahead(u, start), opts.node_cap);
  return Expectimax(env, nullptr, u, opts).value(start);
}

std::vector<double> action_values(const SemiDistribution& env, const UtilityFunction& u,
                                  const History& h, const PlanningOptions& opts) {
  const std::size_t steps = lookahead(u, h);
  if (steps == 0) throw std::invalid_argument("no action left before the horizon");
  check_capacity(env.alphabet_size(), steps, opts.node_cap);
  return Expectimax(env, nullptr, u, opts).action_values(h);
}

bool is_v_optimal(const SemiDistribution& env, const UtilityFunction& u, const History& h,
                  Symbol action, const PlanningOptions& opts) {
  if (action < 0 || action >= env.alphabet_size()) throw std::out_of_range("action outside alphabet");
  const auto q = action_values(env, u, h, opts);
  double best = q[0];
  for (double v : q) best = std::max(best, v);
  return std::abs(q[action] - best) <= 1e-10;
}

// ---------------------------------------------------------------------------

PolicyTable::PolicyTable(int alphabet_size, std::map<History, Symbol> actions)
    : size_(Alphabet(alphabet_size).size()), actions_(std::move(actions)) {
  for (const auto& [h, a] : actions_) {
    if (h.next_stream() != Stream::action) throw std::invalid_argument("policy keys must be action contexts");
    if (a < 0 || a >= size_) throw std::invalid_argument("policy action outside alphabet");
  }
}

Symbol PolicyTable::action(const History& context) const {
  auto it = actions_.find(context);
  if (it == actions_.end()) throw std::out_of_range("policy table has no entry for '" + context.str() + "'");
  return it->second;
}

Distribution PolicyTable::predict(const History& context) const {
  Distribution d(static_cast<std::size_t>(size_), 0.0);
  d[action(context)] = 1.0;
  return d;
}

std::string PolicyTable::describe() const {
  return "policy table (" + std::to_string(actions_.size()) + " contexts)";
}

namespace {

void fill_policy(const Expectimax& ex, const History& h, std::size_t steps, int a,
                 std::map<History, Symbol>& out) {
  if (steps == 0) return;
  const auto q = ex.action_values(h);
  Symbol best = 0;
  for (Symbol x = 1; x < a; ++x)
    if (q[x] > q[best]) best = x;
  out.emplace(h, best);
  for (Symbol act = 0; act < a; ++act)
    for (Symbol o = 0; o < a; ++o) fill_policy(ex, h.append(act).append(o), steps - 1, a, out);
}

}  // namespace

std::shared_ptr<const PolicyTable> optimal_policy(const SemiDistribution& env,
                                                  const UtilityFunction& u, const History& start,
                                                  const PlanningOptions& opts) {
  const std::size_t steps = lookahead(u, start);
  check_capacity(env.alphabet_size(), steps, opts.node_cap);
  // Memoizing the environment keeps the repeated subtree evaluations cheap.
  CachedPredictor cached(std::shared_ptr<const SemiDistribution>(&env, [](const SemiDistribution*) {}));
  Expectimax ex(cached, nullptr, u, opts);
  std::map<History, Symbol> table;
  fill_policy(ex, start, steps, env.alphabet_size(), table);
  return std::make_shared<PolicyTable>(env.alphabet_size(), std::move(table));
}

Distribution CachedPredictor::predict(const History& context) const {
  auto it = cache_.find(context);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(context, inner_->predict(context)).first->second;
}

}  // namespace kllab

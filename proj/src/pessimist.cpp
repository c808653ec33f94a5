#include "kllab/pessimist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "kllab/divergence.hpp"
#include "kllab/random.hpp"

namespace kllab {

bool TopSet::contains(std::size_t index) const {
  return std::find(members.begin(), members.end(), index) != members.end();
}

TopSet top_set(const std::vector<double>& posterior, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  TopSet out;
  out.alpha = alpha;
  for (std::size_t i = 0; i < posterior.size(); ++i) out.sorted_posteriors.emplace_back(i, posterior[i]);
  std::stable_sort(out.sorted_posteriors.begin(), out.sorted_posteriors.end(),
                   [](const auto& l, const auto& r) { return l.second > r.second; });
  double cumulative = 0.0;
  for (const auto& [index, w] : out.sorted_posteriors) {
    cumulative += w;
    if (w > 0.0 && w >= alpha * cumulative) out.members.push_back(index);
  }
  return out;
}

TopSet top_set(const ModelClassPosterior& state, double alpha) {
  return top_set(state.joint_posterior(), alpha);
}

namespace {

PessimisticPrediction minimum_over(const std::vector<SemiDistributionPtr>& models,
                                   const TopSet& top, const History& context, int alphabet) {
  PessimisticPrediction out;
  out.minimum.assign(static_cast<std::size_t>(alphabet), std::numeric_limits<double>::infinity());
  for (std::size_t i : top.members) {
    const Distribution d = models[i]->predict(context);
    for (int x = 0; x < alphabet; ++x) out.minimum[x] = std::min(out.minimum[x], d[x]);
  }
  out.help_mass = std::clamp(1.0 - mass(out.minimum), 0.0, 1.0);
  return out;
}

/// Joint posterior at `context` from the prior, or nullopt when every model
/// gives the context zero probability.
std::optional<std::vector<double>> joint_posterior_at(const ModelClassPosterior& prior,
                                                      const History& context) {
  std::vector<double> lw(prior.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < prior.size(); ++i) {
    lw[i] = std::log(prior.prior()[i]) + log_joint_probability(prior.model(i), context);
    top = std::max(top, lw[i]);
  }
  if (top == -std::numeric_limits<double>::infinity()) return std::nullopt;
  double z = 0.0;
  for (double& v : lw) z += v = std::exp(v - top);
  for (double& v : lw) v /= z;
  return lw;
}

}  // namespace

PessimisticPrediction pessimistic_predict(const ModelClassPosterior& state, double alpha) {
  return minimum_over(state.models(), top_set(state, alpha), state.history(), state.alphabet_size());
}

PessimisticImitator::PessimisticImitator(ModelClassPosterior prior_state, double alpha)
    : state_(std::move(prior_state)), alpha_(alpha) {
  if (!state_.history().empty()) throw std::invalid_argument("imitator needs an unconditioned class");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
}

std::optional<TopSet> PessimisticImitator::top_set_at(const History& context) const {
  const auto w = joint_posterior_at(state_, context);
  if (!w) return std::nullopt;
  return top_set(*w, alpha_);
}

Distribution PessimisticImitator::predict(const History& context) const {
  const auto top = top_set_at(context);
  if (!top) return Distribution(static_cast<std::size_t>(alphabet_size()), 0.0);
  return minimum_over(state_.models(), *top, context, alphabet_size()).minimum;
}

std::string PessimisticImitator::describe() const {
  std::ostringstream os;
  os << "pessimistic imitator (alpha " << alpha_ << ", " << state_.size() << " models)";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

void visit_contexts(const PessimisticImitator& nu, const ModelClassPosterior& prior,
                    std::size_t mu, const History& h, std::size_t max_len, ContainmentReport& r) {
  if (h.size() >= max_len) return;
  ++r.contexts_checked;
  if (const auto top = nu.top_set_at(h)) {
    if (top->contains(mu)) {
      ++r.contexts_with_mu;
      const Distribution lo = nu.predict(h);
      const Distribution m = prior.model(mu).predict(h);
      for (std::size_t x = 0; x < m.size(); ++x) {
        if (lo[x] > m[x]) {
          r.violations.push_back(h);
          r.pointwise_holds = false;
          break;
        }
      }
    } else {
      r.mu_left_top_set.push_back(h);
    }
  }
  for (Symbol x = 0; x < prior.alphabet_size(); ++x) visit_contexts(nu, prior, mu, h.append(x), max_len, r);
}

}  // namespace

ContainmentReport containment_check(const Policy& pi, const ModelClassPosterior& prior_state,
                                    double alpha, std::size_t mu_index, const History& start,
                                    int horizon, const PlanningOptions& opts) {
  if (mu_index >= prior_state.size()) throw std::out_of_range("mu index outside the class");
  if (start.size() % 2 != 0 || static_cast<int>(start.completed_steps()) > horizon)
    throw std::invalid_argument("start history must end at an action boundary within the horizon");
  check_capacity(prior_state.alphabet_size(),
                 static_cast<std::size_t>(horizon) - start.completed_steps(), opts.node_cap);
  const PessimisticImitator nu(prior_state, alpha);
  ContainmentReport r;
  visit_contexts(nu, prior_state, mu_index, start, static_cast<std::size_t>(2 * horizon), r);
  const CachedPredictor cached_nu(std::make_shared<PessimisticImitator>(prior_state, alpha));
  r.kl_pi_mu = lifetime_kl(pi, prior_state.model(mu_index), start, horizon, opts).value;
  r.kl_pi_imitator = lifetime_kl(pi, cached_nu, start, horizon, opts).value;
  r.kl_order_holds = r.kl_pi_imitator >= r.kl_pi_mu - 1e-12 * std::max(1.0, std::abs(r.kl_pi_mu));
  return r;
}

// ---------------------------------------------------------------------------

std::pair<double, double> exact_binomial_interval(std::size_t k, std::size_t n, double confidence) {
  if (n == 0 || k > n) throw std::invalid_argument("need 0 <= k <= n and n > 0");
  const double tail = (1.0 - confidence) / 2.0;
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, tail);
  const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - tail);
  return {lo, hi};
}

RetentionReport retention_experiment(const ModelClassPosterior& prior_state, std::size_t mu_index,
                                     double alpha, double delta, std::size_t num_histories,
                                     std::size_t history_length, std::uint64_t seed,
                                     bool enforce_precondition) {
  if (mu_index >= prior_state.size()) throw ConfigError("mu index outside the class");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
  if (enforce_precondition && !(alpha < delta * prior_state.prior()[mu_index])) {
    std::ostringstream os;
    os << "alpha " << alpha << " must be below delta * prior(mu) = "
       << delta * prior_state.prior()[mu_index];
    throw ConfigError(os.str());
  }
  if (num_histories == 0) throw ConfigError("need at least one history");

  const std::size_t n_models = prior_state.size();
  const SemiDistribution& mu = prior_state.model(mu_index);
  RetentionReport r;
  r.histories = num_histories;
  for (std::size_t i = 0; i < num_histories; ++i) {
    auto rng = seeded_stream(seed, i);
    std::vector<double> log_w(n_models);
    for (std::size_t m = 0; m < n_models; ++m) log_w[m] = std::log(prior_state.prior()[m]);
    std::vector<Symbol> symbols;
    long exit_at = -1;
    for (std::size_t t = 0;; ++t) {
      const double top = *std::max_element(log_w.begin(), log_w.end());
      std::vector<double> w(n_models);
      double z = 0.0;
      for (std::size_t m = 0; m < n_models; ++m) z += w[m] = std::exp(log_w[m] - top);
      for (double& x : w) x /= z;
      if (!top_set(w, alpha).contains(mu_index)) {
        exit_at = static_cast<long>(t);
        break;
      }
      if (t == history_length) break;
      const History h(symbols);
      const auto x = sample(mu.predict(h), rng);
      if (!x) break;  // mu halted: the history ends here
      for (std::size_t m = 0; m < n_models; ++m) {
        const double p = prior_state.model(m).predict(h)[*x];
        log_w[m] += p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      }
      symbols.push_back(*x);
    }
    r.first_exit.push_back(exit_at);
    if (exit_at < 0) ++r.retained;
  }
  r.frequency = static_cast<double>(r.retained) / static_cast<double>(num_histories);
  std::tie(r.interval_low, r.interval_high) = exact_binomial_interval(r.retained, num_histories, 0.95);
  return r;
}

}  // namespace kllab

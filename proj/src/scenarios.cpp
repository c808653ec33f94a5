#include "kllab/scenarios.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "kllab/divergence.hpp"
#include "kllab/optimizers.hpp"
#include "kllab/pessimist.hpp"
#include "kllab/random.hpp"
#include "model_yaml.hpp"

namespace kllab::scenarios {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Config access with unknown-key detection

class Config {
 public:
  explicit Config(YAML::Node node) : node_(std::move(node)) {
    if (!node_.IsMap()) throw ConfigError(yaml::where(node_) + "scenario must be a mapping");
    for (const char* k : {"name", "experiment", "description", "plots"}) used_.insert(k);
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  YAML::Node node(const std::string& key) {
    used_.insert(key);
    return yaml::required_node(node_, key);
  }

  template <class T>
  T need(const std::string& key) {
    used_.insert(key);
    return yaml::required<T>(node_, key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    return yaml::optional<T>(node_, key, fallback);
  }

  std::uint64_t seed() {
    if (!has("seed")) throw ConfigError(yaml::where(node_) + "this experiment is stochastic and needs a seed");
    return need<std::uint64_t>("seed");
  }

  /// Number checked against [lo, hi].
  double number(const std::string& key, double fallback, double lo, double hi) {
    const double v = get<double>(key, fallback);
    if (!(v >= lo && v <= hi)) {
      std::ostringstream os;
      os << where(key) << key << " = " << v << " must lie in [" << lo << ", " << hi << "]";
      throw ConfigError(os.str());
    }
    return v;
  }

  int integer(const std::string& key, int fallback, int lo, int hi) {
    const int v = get<int>(key, fallback);
    if (v < lo || v > hi) {
      std::ostringstream os;
      os << where(key) << key << " = " << v << " must lie in [" << lo << ", " << hi << "]";
      throw ConfigError(os.str());
    }
    return v;
  }

  std::string where(const std::string& key) const {
    return node_[key] ? yaml::where(node_[key]) : yaml::where(node_);
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key))
        throw ConfigError(yaml::where(kv.first) + "unknown key '" + key + "' for this experiment");
    }
  }

 private:
  YAML::Node node_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Shared parsing

ModelClassPosterior load_class(Config& c, const toylang::Language& lang) {
  const YAML::Node models = c.node("models");
  try {
    return build_model_class(yaml::model_specs(models, lang), lang);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(yaml::where(models) + e.what());
  }
}

std::vector<double> reward_row(const YAML::Node& node, int alphabet) {
  const auto r = yaml::as<std::vector<double>>(yaml::required_node(node, "reward"));
  if (static_cast<int>(r.size()) != alphabet)
    throw ConfigError(yaml::where(node) + "reward needs one entry per symbol");
  for (double x : r)
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(yaml::where(node) + "rewards must lie in [0,1]");
  return r;
}

UtilityFunction make_utility(const YAML::Node& node, int horizon, int alphabet) {
  const auto kind = yaml::required<std::string>(node, "kind");
  if (kind == "observation-reward")
    return UtilityFunction::observation_reward_sum(horizon, reward_row(node, alphabet));
  if (kind == "action-reward")
    return UtilityFunction::action_reward_sum(horizon, reward_row(node, alphabet));
  throw ConfigError(yaml::where(node) + "unknown utility kind '" + kind +
                    "' (observation-reward, action-reward)");
}

UtilityFunction load_utility(Config& c, int horizon, int alphabet) {
  return make_utility(c.node("utility"), horizon, alphabet);
}

toylang::EventCode load_event(const YAML::Node& node, const toylang::Language& lang) {
  using K = toylang::EventCode::Kind;
  const auto kind = yaml::required<std::string>(node, "kind");
  toylang::EventCode e;
  auto number = [&] {
    const auto v = yaml::required<std::uint64_t>(node, "value");
    try {
      return lang.canonical_integer(v);
    } catch (const toylang::EncodingError& err) {
      throw ConfigError(yaml::where(node) + err.what());
    }
  };
  auto symbol = [&] {
    const auto s = yaml::required<int>(node, "symbol");
    if (s < 0 || s >= lang.alphabet_size()) throw ConfigError(yaml::where(node) + "symbol outside the alphabet");
    return s;
  };
  if (kind == "never") {
    e.kind = K::never;
  } else if (kind == "always") {
    e.kind = K::always;
  } else if (kind == "at-timestep") {
    e.kind = K::at_timestep;
    e.number = number();
    if (e.number.value == 0) throw ConfigError(yaml::where(node) + "timesteps start at 1");
  } else if (kind == "length-at-least") {
    e.kind = K::length_at_least;
    e.number = number();
  } else if (kind == "observation-seen") {
    e.kind = K::observation_seen;
    e.symbol = symbol();
  } else if (kind == "action-seen") {
    e.kind = K::action_seen;
    e.symbol = symbol();
  } else if (kind == "last-observation-is") {
    e.kind = K::last_observation_is;
    e.symbol = symbol();
  } else {
    throw ConfigError(yaml::where(node) + "unknown event kind '" + kind + "'");
  }
  return e;
}

History load_history(Config& c, const std::string& key, int alphabet) {
  const auto text = c.get<std::string>(key, "");
  History h;
  try {
    h = History::parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(c.where(key) + e.what());
  }
  if (!h.valid_for(Alphabet(alphabet))) throw ConfigError(c.where(key) + "history symbol outside the alphabet");
  if (h.size() % 2 != 0) throw ConfigError(c.where(key) + "start history must end at an action boundary");
  return h;
}

std::vector<double> load_budgets(Config& c) {
  const YAML::Node node = c.node("budgets");
  const auto b = yaml::as<std::vector<double>>(node);
  if (b.empty()) throw ConfigError(yaml::where(node) + "budgets must not be empty");
  for (double x : b)
    if (!(x >= 0.0)) throw ConfigError(yaml::where(node) + "budgets must be nonnegative");
  return b;
}

std::size_t load_index(Config& c, const std::string& key, std::size_t size) {
  const int i = c.need<int>(key);
  if (i < 0 || static_cast<std::size_t>(i) >= size)
    throw ConfigError(c.where(key) + key + " must index a model of the class");
  return static_cast<std::size_t>(i);
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double x) { return format_number(x); }

void check(RunResult& r, const std::string& name, bool ok, const std::string& detail) {
  r.assertions.push_back({name, ok, detail});
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Standalone line chart. Non-finite points are dropped.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, bool bars = false) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = kInf, x1 = -kInf, y0 = 0.0, y1 = -kInf;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!(x1 > x0)) x0 -= 0.5, x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(x0) << "</text>\n"
     << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(x1) << "</text>\n"
     << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << num(y0) << "</text>\n"
     << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << num(y1) << "</text>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label
     << "</text>\n"
     << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 6];
    const auto& s = series[i];
    if (bars) {
      const double width = std::max(1.0, (W - L - R) / std::max<std::size_t>(1, s.points.size()) * 0.8);
      for (auto [x, y] : s.points)
        if (std::isfinite(x) && std::isfinite(y))
          os << "<rect x=\"" << px(x) - width / 2 << "\" y=\"" << py(y) << "\" width=\"" << width
             << "\" height=\"" << py(y0) - py(y) << "\" fill=\"" << color << "\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : s.points)
        if (std::isfinite(x) && std::isfinite(y)) os << px(x) << "," << py(y) << " ";
      os << "\"/>\n";
    }
    if (!s.label.empty())
      os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" text-anchor=\"end\" fill=\""
         << color << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiments

RunResult no_triangle(Config& c) {
  const double eps = c.number("epsilon", 0.1, 1e-12, 1e6);
  c.finish();
  RunResult r;
  const double half = std::min(eps, 1.0) / 2.0;
  // Bernoulli(p) puts p on symbol 1.
  auto bern = [](double p) {
    const Distribution row{1.0 - p, p};
    return std::make_shared<StationaryPredictor>(row, Distribution{0.5, 0.5});
  };
  const auto proposed = bern(half), base = bern(half), trusted = bern(0.0);
  const double pi_beta = lifetime_kl(*proposed, *base, {}, 1).value;
  const double tau_beta = lifetime_kl(*trusted, *base, {}, 1).value;
  const double pi_tau = lifetime_kl(*proposed, *trusted, {}, 1).value;
  const double closed_form = -std::log1p(-half);
  r.records = {{"epsilon", eps, "nats"},
               {"kl_proposed_base", pi_beta, "nats"},
               {"kl_trusted_base", tau_beta, "nats"},
               {"kl_proposed_trusted", pi_tau, "nats"},
               {"kl_trusted_base_closed_form", closed_form, "nats"}};
  r.tables.push_back({"divergences",
                      {"pair", "kl_nats"},
                      {{"proposed||base", num(pi_beta)},
                       {"trusted||base", num(tau_beta)},
                       {"proposed||trusted", num(pi_tau)}}});
  check(r, "kl_proposed_base_within_epsilon", pi_beta <= eps, num(pi_beta) + " <= " + num(eps));
  check(r, "kl_trusted_base_within_epsilon", tau_beta <= eps, num(tau_beta) + " <= " + num(eps));
  check(r, "kl_proposed_trusted_infinite", std::isinf(pi_tau), num(pi_tau));
  check(r, "kl_trusted_base_matches_closed_form", std::abs(tau_beta - closed_form) <= 1e-12,
        num(tau_beta) + " vs " + num(closed_form));
  return r;
}

/// Prefix of `steps` steps sampled from `env`, restricted so that `event`
/// first happens exactly at its end.
History trigger_prefix(const SemiDistribution& env, const Event& event, std::size_t steps,
                       std::mt19937_64& rng) {
  const int a_n = env.alphabet_size();
  if (event.contains(std::span<const Symbol>{})) {
    if (steps == 0) return {};
    throw ConfigError("trigger already holds on the empty history");
  }
  if (steps == 0) throw ConfigError("trigger cannot first happen on the empty history");
  History h;
  auto draw = [&](const Distribution& mass_by_symbol) -> Symbol {
    double total = 0.0;
    for (double m : mass_by_symbol) total += m;
    if (!(total > 0.0)) throw ConfigError("no positive-probability prefix makes the trigger first happen on time");
    Distribution d = mass_by_symbol;
    for (double& m : d) m /= total;
    return sample(d, rng).value_or(static_cast<Symbol>(a_n - 1));
  };
  for (std::size_t t = 1; t <= steps; ++t) {
    const bool want = t == steps;
    auto ok_after = [&](const History& ha, Symbol o) {
      return event.contains(ha.append(o).symbols()) == want;
    };
    const Distribution act = env.predict(h);
    Distribution act_mass(static_cast<std::size_t>(a_n), 0.0);
    for (Symbol a = 0; a < a_n; ++a) {
      if (act[a] <= 0.0) continue;
      const History ha = h.append(a);
      const Distribution obs = env.predict(ha);
      for (Symbol o = 0; o < a_n; ++o)
        if (obs[o] > 0.0 && ok_after(ha, o)) {
          act_mass[a] = act[a];
          break;
        }
    }
    const History ha = h.append(draw(act_mass));
    Distribution obs = env.predict(ha);
    for (Symbol o = 0; o < a_n; ++o)
      if (!ok_after(ha, o)) obs[o] = 0.0;
    h = ha.append(draw(obs));
  }
  return h;
}

RunResult switch_bound(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 4);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  if (cls.alphabet_size() != a_n) throw ConfigError(c.where("models") + "models disagree with the alphabet");
  const toylang::EventCode trigger = load_event(c.node("trigger"), lang);
  const int ahead = c.integer("lookahead", 2, 1, 4);
  const double gap = c.number("target_gap", 0.01, 1e-12, 1.0);
  const auto weighting_name = c.get<std::string>("weighting", "chain");
  if (weighting_name != "chain" && weighting_name != "plain")
    throw ConfigError(c.where("weighting") + "weighting must be chain or plain");
  const auto weighting = weighting_name == "chain" ? VariantWeighting::chain : VariantWeighting::plain;
  const YAML::Node steps_node = c.node("training_steps");
  const auto training = yaml::as<std::vector<int>>(steps_node);
  if (training.empty()) throw ConfigError(yaml::where(steps_node) + "training_steps must not be empty");
  for (int k : training)
    if (k < 1 || k > 200) throw ConfigError(yaml::where(steps_node) + "training steps must lie in [1, 200]");
  const YAML::Node utility = c.node("utility");
  make_utility(utility, 1, a_n);  // validate before any work
  const std::uint64_t seed = c.seed();
  c.finish();

  const Event event = lang.instantiate(trigger);
  const auto xi = std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(cls));
  RunResult r;
  Table t{"bound_by_prefix",
          {"training_steps", "start", "target_value", "optimal_value", "achieved_value", "measured_kl_nats",
           "delta_bits", "bound_nats", "slack_nats", "post_policy"},
          {}};
  std::vector<std::size_t> deltas;
  bool all_hold = true;
  double min_slack = kInf;
  for (std::size_t i = 0; i < training.size(); ++i) {
    const int k = training[i];
    auto rng = seeded_stream(seed, i);
    const History start = trigger_prefix(*xi, event, static_cast<std::size_t>(k), rng);
    const int horizon = k + ahead;
    const UtilityFunction u = make_utility(utility, horizon, a_n);
    const double best = optimal_value(*xi, u, start);
    const double target = best - gap;
    Theorem1Report rep;
    try {
      rep = theorem1_bound_check(cls, lang, trigger, u, start, target, weighting);
    } catch (const toylang::EncodingError& e) {
      throw ConfigError(std::string("post policy: ") + e.what());
    }
    deltas.push_back(rep.delta_bits);
    all_hold = all_hold && rep.holds;
    min_slack = std::min(min_slack, rep.slack);
    t.rows.push_back({std::to_string(k), start.str(), num(rep.target_value), num(rep.optimal_value),
                      num(rep.achieved_value), num(rep.measured_kl), std::to_string(rep.delta_bits),
                      num(rep.bound_nats), num(rep.slack), rep.post_policy});
    check(r, "kl_within_bound_k" + std::to_string(k), rep.holds,
          num(rep.measured_kl) + " <= " + num(rep.bound_nats));
    check(r, "value_above_target_k" + std::to_string(k), rep.achieved_value > rep.target_value,
          num(rep.achieved_value) + " > " + num(rep.target_value));
  }
  const bool invariant = std::all_of(deltas.begin(), deltas.end(), [&](std::size_t d) { return d == deltas[0]; });
  check(r, "bound_independent_of_prefix", invariant, "delta bits identical for every training length");
  r.records = {{"delta_bits", static_cast<double>(deltas[0]), "bits"},
               {"bound_nats", static_cast<double>(deltas[0]) * std::log(2.0), "nats"},
               {"min_slack", min_slack, "nats"},
               {"all_hold", all_hold ? 1.0 : 0.0, "boolean"}};
  r.tables.push_back(std::move(t));
  return r;
}

bool has_row(const std::map<History, Distribution>& rows, const History& h) { return rows.count(h) > 0; }

RunResult tvd_pathology(Config& c) {
  const int a_n = c.integer("alphabet", 3, 2, 3);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  const int horizon = c.integer("horizon", 1, 1, 3);
  const UtilityFunction u = load_utility(c, horizon, a_n);
  const History start = load_history(c, "start", a_n);
  if (static_cast<int>(start.completed_steps()) >= horizon)
    throw ConfigError(c.where("start") + "start history leaves no action before the horizon");
  const auto budgets = load_budgets(c);
  for (double b : budgets)
    if (b > 1.0) throw ConfigError(c.where("budgets") + "TVD budgets lie in [0,1]");
  TvdSolverOptions topts;
  topts.resolution = c.integer("resolution", 100, 1, 100000);
  c.finish();

  auto xi = std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(cls));
  RunResult r;
  const double base_value = policy_value(*xi, *xi, u, start);
  const double best = optimal_value(*xi, u, start);
  r.records = {{"base_value", base_value, "utility"}, {"optimal_value", best, "utility"}};
  Table sol{"solutions",
            {"budget", "solver", "context", "action", "base_prob", "policy_prob", "v_optimal"},
            {}};
  Table summary{"summary",
                {"budget", "tvd_value", "tvd_constraint", "tvd_mass_on_base_impossible", "kl_value",
                 "kl_constraint_nats", "kl_mass_on_base_impossible"},
                {}};
  std::size_t increases = 0, violations = 0;
  bool kl_safe = true;
  for (double b : budgets) {
    const ConstrainedSolution tv = tvd_constrained_optimize(*xi, *xi, u, start, b, topts);
    const ConstrainedSolution kl = kl_constrained_optimize(*xi, *xi, u, start, b);
    check(r, "tvd_feasible_" + num(b), tv.certified && tv.achieved_constraint <= b + 1e-9,
          num(tv.achieved_constraint) + " <= " + num(b));
    double tvd_impossible = 0.0, kl_impossible = 0.0;
    const auto* tv_rows = dynamic_cast<const PolicyMap*>(tv.policy.get());
    const auto* kl_rows = dynamic_cast<const PolicyMap*>(kl.policy.get());
    for (const auto& [h, row] : tv_rows->rows()) {
      const Distribution base = xi->predict(h);
      const Distribution klrow = kl_rows && has_row(kl_rows->rows(), h) ? kl_rows->rows().at(h) : base;
      for (Symbol a = 0; a < a_n; ++a) {
        const bool v_opt = is_v_optimal(*xi, u, h, a);
        sol.rows.push_back({num(b), "tvd", h.str(), std::to_string(a), num(base[a]), num(row[a]),
                            v_opt ? "1" : "0"});
        sol.rows.push_back({num(b), "kl", h.str(), std::to_string(a), num(base[a]), num(klrow[a]),
                            v_opt ? "1" : "0"});
        if (base[a] == 0.0 && h == start) {
          tvd_impossible += row[a];
          kl_impossible += klrow[a];
        }
        if (base[a] == 0.0 && klrow[a] > 0.0) kl_safe = false;
        if (row[a] > base[a] + 1e-12) {
          ++increases;
          if (!v_opt) ++violations;
        }
      }
    }
    summary.rows.push_back({num(b), num(tv.achieved_value), num(tv.achieved_constraint), num(tvd_impossible),
                            num(kl.achieved_value), num(kl.achieved_constraint), num(kl_impossible)});
  }
  r.records.push_back({"tvd_increased_actions", static_cast<double>(increases), "count"});
  r.records.push_back({"tvd_increases_not_v_optimal", static_cast<double>(violations), "count"});
  check(r, "tvd_increases_only_v_optimal_actions", violations == 0,
        std::to_string(violations) + " of " + std::to_string(increases) + " increases are not V-optimal");
  check(r, "kl_keeps_base_impossible_actions_impossible", kl_safe,
        "KL solutions put no mass where the base policy has none");
  r.tables.push_back(std::move(summary));
  r.tables.push_back(std::move(sol));
  return r;
}

RunResult pessimist_retention(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 4);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  const std::size_t mu = load_index(c, "mu", cls.size());
  const double delta = c.number("delta", 0.1, 1e-12, 1.0 - 1e-12);
  double alpha;
  if (c.has("alpha") && c.has("alpha_factor"))
    throw ConfigError(c.where("alpha") + "give alpha or alpha_factor, not both");
  if (c.has("alpha"))
    alpha = c.number("alpha", 0.0, 1e-300, 1.0);
  else
    alpha = c.number("alpha_factor", 0.05, 1e-300, 1.0) * cls.prior()[mu];
  const bool enforce = c.get<bool>("enforce_precondition", true);
  const int histories = c.integer("histories", 1000, 1, 10000000);
  const int steps = c.integer("length_steps", 50, 0, 100000);
  const std::uint64_t seed = c.seed();
  c.finish();

  const RetentionReport rep =
      retention_experiment(cls, mu, alpha, delta, static_cast<std::size_t>(histories),
                           2 * static_cast<std::size_t>(steps), seed, enforce);
  RunResult r;
  const double half_width = (rep.interval_high - rep.interval_low) / 2.0;
  const double threshold = 1.0 - delta - half_width;
  r.records = {{"alpha", alpha, "probability"},
               {"delta", delta, "probability"},
               {"prior_mu", cls.prior()[mu], "probability"},
               {"retention_frequency", rep.frequency, "probability"},
               {"interval_low", rep.interval_low, "probability"},
               {"interval_high", rep.interval_high, "probability"},
               {"threshold", threshold, "probability"}};
  check(r, "retention_at_least_one_minus_delta", rep.frequency >= threshold,
        num(rep.frequency) + " >= " + num(threshold));
  Table t{"first_exit", {"history", "first_exit_position"}, {}};
  std::map<long, int> hist;
  for (std::size_t i = 0; i < rep.first_exit.size(); ++i) {
    t.rows.push_back({std::to_string(i), std::to_string(rep.first_exit[i])});
    ++hist[rep.first_exit[i]];
  }
  r.tables.push_back(std::move(t));
  Series s{"histories", {}};
  for (auto [pos, n] : hist) s.points.emplace_back(static_cast<double>(pos), n);
  r.plots.push_back({"retention_histogram",
                     line_chart("First exit of mu from the top set (-1: retained)", "symbol position",
                                "histories", {s}, true)});
  return r;
}

/// Random full-support policy on every action context below `start`.
std::shared_ptr<const PolicyMap> random_policy(int a_n, const History& start, int horizon, std::mt19937_64& rng) {
  std::map<History, Distribution> rows;
  std::vector<History> frontier{start};
  while (!frontier.empty()) {
    const History h = frontier.back();
    frontier.pop_back();
    Distribution d(static_cast<std::size_t>(a_n));
    double z = 0.0;
    for (double& x : d) z += x = -std::log(1.0 - uniform01(rng));
    for (double& x : d) x /= z;
    rows.emplace(h, d);
    if (static_cast<int>(h.completed_steps()) + 1 < horizon)
      for (Symbol a = 0; a < a_n; ++a)
        for (Symbol o = 0; o < a_n; ++o) frontier.push_back(h.append(a).append(o));
  }
  return std::make_shared<PolicyMap>(a_n, std::move(rows), "random policy");
}

RunResult pessimist_containment(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 3);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  const std::size_t mu = load_index(c, "mu", cls.size());
  const double alpha = c.number("alpha", 0.1, 1e-300, 1.0);
  const int horizon = c.integer("horizon", 3, 1, 4);
  const History start = load_history(c, "start", a_n);
  if (static_cast<int>(start.completed_steps()) > horizon)
    throw ConfigError(c.where("start") + "start history is past the horizon");
  const int n_policies = c.integer("policies", 50, 1, 100000);
  const std::uint64_t seed = c.seed();
  c.finish();

  RunResult r;
  const PessimisticImitator nu(cls, alpha);
  Table t{"policies", {"policy", "kl_policy_mu_nats", "kl_policy_imitator_nats", "equal", "branch_singleton"}, {}};
  bool pointwise = true, order = true, equality_explained = true;
  std::size_t contexts = 0, with_mu = 0, equalities = 0;
  for (int i = 0; i < n_policies; ++i) {
    auto rng = seeded_stream(seed, static_cast<std::uint64_t>(i));
    const auto pi = random_policy(a_n, start, horizon, rng);
    const ContainmentReport rep = containment_check(*pi, cls, alpha, mu, start, horizon);
    if (i == 0) {
      contexts = rep.contexts_checked;
      with_mu = rep.contexts_with_mu;
      pointwise = rep.pointwise_holds;
    }
    order = order && rep.kl_order_holds;
    const bool equal = std::abs(rep.kl_pi_imitator - rep.kl_pi_mu) <= 1e-12 * std::max(1.0, rep.kl_pi_mu) ||
                       (std::isinf(rep.kl_pi_mu) && std::isinf(rep.kl_pi_imitator));
    // Equality needs the imitator to coincide with mu along a maximizing
    // branch; check that mu is alone in the top set at those contexts.
    bool singleton = true;
    if (equal) {
      ++equalities;
      const auto branch = lifetime_kl(*pi, nu, start, horizon).maximizing_observations;
      std::vector<History> frontier{start};
      while (!frontier.empty()) {
        const History h = frontier.back();
        frontier.pop_back();
        const auto top = nu.top_set_at(h);
        if (!top || top->members != std::vector<std::size_t>{mu}) singleton = false;
        const std::size_t d = h.completed_steps() - start.completed_steps();
        if (d < branch.size())
          for (Symbol a = 0; a < a_n; ++a) frontier.push_back(h.append(a).append(branch[d]));
      }
      equality_explained = equality_explained && singleton;
    }
    t.rows.push_back({std::to_string(i), num(rep.kl_pi_mu), num(rep.kl_pi_imitator), equal ? "1" : "0",
                      equal ? (singleton ? "1" : "0") : ""});
  }
  r.records = {{"contexts_checked", static_cast<double>(contexts), "count"},
               {"contexts_with_mu_in_top_set", static_cast<double>(with_mu), "count"},
               {"policies", static_cast<double>(n_policies), "count"},
               {"kl_equalities", static_cast<double>(equalities), "count"}};
  check(r, "imitator_below_mu_pointwise", pointwise, "every context with mu in the top set");
  check(r, "kl_to_imitator_at_least_kl_to_mu", order, std::to_string(n_policies) + " random policies");
  check(r, "equality_only_with_singleton_top_set", equality_explained,
        std::to_string(equalities) + " equal cases");
  r.tables.push_back(std::move(t));
  return r;
}

RunResult budget_sweep(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 3);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  const int horizon = c.integer("horizon", 3, 1, 4);
  const UtilityFunction u = load_utility(c, horizon, a_n);
  const History start = load_history(c, "start", a_n);
  if (static_cast<int>(start.completed_steps()) >= horizon)
    throw ConfigError(c.where("start") + "start history leaves no action before the horizon");
  auto budgets = load_budgets(c);
  c.finish();
  std::sort(budgets.begin(), budgets.end());

  auto make_xi = [&] { return std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(cls)); };
  const auto xi = make_xi();
  const double base_value = policy_value(*xi, *xi, u, start);
  const double best = optimal_value(*xi, u, start);
  // Independent budgets run concurrently; each owns its caches.
  std::vector<std::future<ConstrainedSolution>> jobs;
  for (double b : budgets)
    jobs.push_back(std::async(std::launch::async, [&, b] {
      const auto env = make_xi();
      return kl_constrained_optimize(*env, *env, u, start, b);
    }));
  RunResult r;
  r.records = {{"base_value", base_value, "utility"}, {"optimal_value", best, "utility"}};
  Table t{"sweep", {"budget_nats", "value", "max_kl_nats", "expected_kl_nats", "multiplier", "certified"}, {}};
  Series s{"KL-constrained value", {}};
  double previous = -kInf;
  bool monotone = true, feasible = true, bounded = true;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    const ConstrainedSolution sol = jobs[i].get();
    t.rows.push_back({num(budgets[i]), num(sol.achieved_value), num(sol.achieved_constraint),
                      num(sol.expected_kl), num(sol.multiplier), sol.certified ? "1" : "0"});
    s.points.emplace_back(budgets[i], sol.achieved_value);
    feasible = feasible && sol.certified && sol.achieved_constraint <= budgets[i] + 1e-9;
    bounded = bounded && sol.achieved_value <= best + 1e-12;
    monotone = monotone && sol.achieved_value >= previous - 1e-9;
    previous = std::max(previous, sol.achieved_value);
  }
  check(r, "every_solution_certified_feasible", feasible, "max-over-observations KL within budget");
  check(r, "value_at_most_optimal", bounded, "optimal " + num(best));
  check(r, "value_nondecreasing_in_budget", monotone, std::to_string(budgets.size()) + " budgets");
  r.tables.push_back(std::move(t));
  const Series base{"base", {{budgets.front(), base_value}, {budgets.back(), base_value}}};
  const Series opt{"optimal", {{budgets.front(), best}, {budgets.back(), best}}};
  r.plots.push_back({"value_vs_budget", line_chart("Value against KL budget", "budget (nats)", "value",
                                                   {s, base, opt})});
  return r;
}

RunResult budget_spend_profile(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 4);
  const toylang::Language lang(a_n);
  const ModelClassPosterior cls = load_class(c, lang);
  const toylang::EventCode trigger = load_event(c.node("trigger"), lang);
  if (trigger.kind != toylang::EventCode::Kind::at_timestep)
    throw ConfigError(c.where("trigger") + "the spend profile needs an at-timestep trigger");
  const int horizon = c.integer("horizon", 8, 1, 10000);
  const int switch_step = static_cast<int>(trigger.number.value);
  if (switch_step > horizon) throw ConfigError(c.where("trigger") + "trigger falls after the horizon");
  const YAML::Node post_node = c.node("post");
  const ModelSpec post = yaml::model_spec(post_node, lang);
  const int rollouts = c.integer("rollouts", 20, 1, 100000);
  const double threshold = c.number("threshold", 0.9, 0.0, 1.0);
  const std::uint64_t seed = c.seed();
  c.finish();

  const AugmentedClass aug = [&] {
    try {
      return augment_with_switch_variants(cls, lang, trigger, *post.model);
    } catch (const toylang::EncodingError& e) {
      throw ConfigError(yaml::where(post_node) + e.what());
    }
  }();
  const auto xi = std::make_shared<CachedPredictor>(std::make_shared<MixturePredictor>(aug.state));
  const auto event = std::make_shared<const Event>(lang.instantiate(trigger));
  const PolicyPtr sw = make_switch_policy(xi, event, aug.post_policy);

  RunResult r;
  Table t{"profile", {"rollout", "timestep", "step_kl_nats", "cumulative_nats"}, {}};
  std::vector<Series> series;
  double worst = 1.0;
  std::size_t counted = 0;
  for (int i = 0; i < rollouts; ++i) {
    const SpendProfile p = kllab::budget_spend_profile(*sw, *xi, *xi, {}, horizon,
                                                       seed + static_cast<std::uint64_t>(i));
    Series s{i == 0 ? "rollouts" : "", {}};
    double upfront = 0.0;
    for (const auto& st : p.steps) {
      t.rows.push_back({std::to_string(i), std::to_string(st.timestep), num(st.kl), num(st.cumulative)});
      s.points.emplace_back(st.timestep, st.cumulative);
      if (st.timestep <= switch_step) upfront = st.cumulative;
    }
    if (p.total() > 0.0) {
      worst = std::min(worst, upfront / p.total());
      ++counted;
    }
    if (i < 6) series.push_back(std::move(s));
  }
  const double bound = static_cast<double>(aug.wrapper_overhead_bits) * std::log(2.0);
  r.records = {{"switch_step", static_cast<double>(switch_step), "timestep"},
               {"delta_bits", static_cast<double>(aug.wrapper_overhead_bits), "bits"},
               {"bound_nats", bound, "nats"},
               {"min_upfront_fraction", worst, "ratio"},
               {"rollouts_with_cost", static_cast<double>(counted), "count"}};
  check(r, "cost_concentrated_at_switch", worst >= threshold,
        "min fraction at or before step " + std::to_string(switch_step) + ": " + num(worst));
  r.tables.push_back(std::move(t));
  r.plots.push_back({"spend_profile", line_chart("Cumulative per-step KL along realized branches", "timestep",
                                                 "cumulative KL (nats)", series)});
  return r;
}

RunResult kraft_audit(Config& c) {
  const YAML::Node node = c.node("alphabets");
  const auto alphabets = yaml::as<std::vector<int>>(node);
  for (int a : alphabets)
    if (a < 2 || a > 8) throw ConfigError(yaml::where(node) + "alphabet sizes must lie in [2, 8]");
  const int depth = c.integer("parse_depth", 14, 1, 22);
  c.finish();

  RunResult r;
  Table t{"kraft", {"alphabet", "depth", "kraft_sum", "parsed_sum", "max_program_length"}, {}};
  for (int a : alphabets) {
    const toylang::Language lang(a);
    const std::size_t max_len = lang.max_program_length();
    const double full = lang.kraft_sum(static_cast<int>(max_len));
    // Every string of length `depth` either starts with a program or is a
    // proper prefix of one; summing 2^-depth over the former recounts the
    // partial Kraft sum through the parser.
    double parsed = 0.0;
    std::string s(static_cast<std::size_t>(depth), '0');
    for (std::uint64_t v = 0; v < (1ULL << depth); ++v) {
      for (int b = 0; b < depth; ++b) s[static_cast<std::size_t>(b)] = (v >> (depth - 1 - b)) & 1 ? '1' : '0';
      if (lang.parse_length(s)) parsed += std::ldexp(1.0, -depth);
    }
    const double partial = lang.kraft_sum(depth);
    double previous = 0.0;
    bool monotone = true;
    for (int d = 0; d <= static_cast<int>(max_len); ++d) {
      const double k = lang.kraft_sum(d);
      monotone = monotone && k >= previous && k <= 1.0 + 1e-15;
      previous = k;
    }
    t.rows.push_back({std::to_string(a), std::to_string(depth), num(partial), num(parsed), std::to_string(max_len)});
    t.rows.push_back({std::to_string(a), std::to_string(max_len), num(full), "", std::to_string(max_len)});
    const std::string tag = "_x" + std::to_string(a);
    r.records.push_back({"kraft_sum" + tag, full, "probability"});
    r.records.push_back({"max_program_length" + tag, static_cast<double>(max_len), "bits"});
    check(r, "kraft_equality" + tag, std::abs(full - 1.0) <= 1e-12, num(full));
    check(r, "parser_agrees_with_kraft_sum" + tag, std::abs(parsed - partial) <= 1e-12,
          num(parsed) + " vs " + num(partial) + " at depth " + std::to_string(depth));
    check(r, "kraft_sum_monotone" + tag, monotone, "depth 0 .. " + std::to_string(max_len));
  }
  r.tables.push_back(std::move(t));
  return r;
}

RunResult simplest_event_scan(Config& c) {
  const int a_n = c.integer("alphabet", 2, 2, 8);
  const int scan_exp = c.integer("scan_exponent", 20, 1, 30);
  const int max_exp = c.integer("t_max_exponent", 21, 1, 62);
  const int detail = c.integer("detail_limit", 512, 1, 1 << 20);
  if (max_exp < scan_exp) throw ConfigError(c.where("t_max_exponent") + "t_max must cover the scan");
  c.finish();

  const toylang::Language lang(a_n);
  const std::uint64_t t_max = 1ULL << max_exp;
  RunResult r;
  Table classes{"by_bit_length",
                {"bit_length", "t_first", "t_last", "min_simplest_bits", "max_simplest_bits",
                 "next_power_event_bits", "violations"},
                {}};
  Table detail_t{"detail", {"t", "simplest_bits", "own_event_bits", "next_power_event_bits"}, {}};
  Series simplest{"simplest unprecedented", {}}, own{"E_t itself", {}};
  std::size_t violations = 0;
  for (int k = 0; k <= scan_exp; ++k) {
    const std::uint64_t first = 1ULL << k;
    const std::uint64_t last = k == scan_exp ? first : (first << 1) - 1;
    std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0, bad = 0;
    for (std::uint64_t t = first; t <= last; ++t) {
      const std::size_t v = toylang::simplest_unprecedented_complexity(lang, t, t_max);
      const std::uint64_t next_pow = std::bit_ceil(t);
      const std::size_t bound = lang.timestep_event_length(next_pow);
      lo = std::min(lo, v), hi = std::max(hi, v);
      if (v > bound) ++bad;
      if (t <= static_cast<std::uint64_t>(detail)) {
        const std::size_t self = lang.timestep_event_length(t);
        detail_t.rows.push_back({std::to_string(t), std::to_string(v), std::to_string(self), std::to_string(bound)});
        simplest.points.emplace_back(static_cast<double>(t), static_cast<double>(v));
        own.points.emplace_back(static_cast<double>(t), static_cast<double>(self));
      }
    }
    violations += bad;
    classes.rows.push_back({std::to_string(k + 1), std::to_string(first), std::to_string(last), std::to_string(lo),
                            std::to_string(hi), std::to_string(lang.timestep_event_length(std::bit_ceil(last))),
                            std::to_string(bad)});
  }
  r.records = {{"scanned_timesteps", std::ldexp(1.0, scan_exp), "count"},
               {"violations", static_cast<double>(violations), "count"},
               {"simplest_at_1", static_cast<double>(toylang::simplest_unprecedented_complexity(lang, 1, t_max)),
                "bits"}};
  check(r, "simplest_at_most_next_power_of_two", violations == 0,
        std::to_string(violations) + " timesteps above the next-power-of-two event length");
  r.tables.push_back(std::move(classes));
  r.tables.push_back(std::move(detail_t));
  r.plots.push_back({"simplest_event", line_chart("Shortest unprecedented timestep event", "t", "bits",
                                                  {simplest, own})});
  return r;
}

using Runner = RunResult (*)(Config&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m = {
      {"no-triangle", no_triangle},
      {"switch-bound", switch_bound},
      {"tvd-pathology", tvd_pathology},
      {"pessimist-retention", pessimist_retention},
      {"pessimist-containment", pessimist_containment},
      {"budget-sweep", budget_sweep},
      {"budget-spend-profile", budget_spend_profile},
      {"kraft-audit", kraft_audit},
      {"simplest-event-scan", simplest_event_scan},
  };
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string toolchain_stamp() {
  std::ostringstream os;
  os << "kllab " << kVersion << "; ";
#if defined(__clang__)
  os << "clang " << __clang_major__ << "." << __clang_minor__ << "." << __clang_patchlevel__;
#elif defined(__GNUC__)
  os << "gcc " << __GNUC__ << "." << __GNUC_MINOR__ << "." << __GNUC_PATCHLEVEL__;
#else
  os << "unknown compiler";
#endif
  os << "; C++" << __cplusplus / 100 % 100;
  return os.str();
}

std::string Table::csv() const {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + field(columns[i]);
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + field(row[i]);
    out += "\n";
  }
  return out;
}

bool RunResult::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const Record* RunResult::record(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

const Table* RunResult::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::string RunResult::summary_json() const {
  using nlohmann::ordered_json;
  auto value = [](double x) -> ordered_json {
    if (std::isfinite(x)) return x;
    return format_number(x);
  };
  ordered_json j;
  j["scenario"] = scenario;
  j["experiment"] = experiment;
  j["description"] = description;
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  j["toolchain"] = toolchain_stamp();
  j["passed"] = passed();
  j["records"] = ordered_json::array();
  for (const auto& r : records) j["records"].push_back({{"name", r.name}, {"value", value(r.value)}, {"unit", r.unit}});
  j["assertions"] = ordered_json::array();
  for (const auto& a : assertions)
    j["assertions"].push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  j["tables"] = ordered_json::array();
  for (const auto& t : tables) j["tables"].push_back(t.name + ".csv");
  j["plots"] = ordered_json::array();
  for (const auto& p : plots) j["plots"].push_back(p.name + ".svg");
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

struct Scenario::Impl {
  YAML::Node root;
};

Scenario Scenario::parse(const std::string& text, const std::string& origin) {
  Scenario s;
  s.impl_ = std::make_shared<Impl>();
  s.origin_ = origin;
  try {
    s.impl_->root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    const YAML::Node& root = s.impl_->root;
    if (!root.IsMap()) throw ConfigError("scenario must be a mapping");
    s.name_ = yaml::required<std::string>(root, "name");
    if (s.name_.empty() || s.name_.find_first_of("/\\") != std::string::npos || s.name_[0] == '.')
      throw ConfigError(yaml::where(root["name"]) + "name must be a plain directory name");
    const auto experiment = yaml::required<std::string>(root, "experiment");
    if (!runners().count(experiment))
      throw ConfigError(yaml::where(root["experiment"]) + "unknown experiment '" + experiment + "'");
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return s;
}

Scenario Scenario::load(const std::string& name_or_path) {
  for (const auto& b : builtins())
    if (b.name == name_or_path) return parse(b.yaml, "built-in " + b.name);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("no built-in scenario or readable file named '" + name_or_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), name_or_path);
}

void Scenario::set(const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("empty override key");
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("override " + dotted_key + ": " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(dotted_key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  // Rebuild the path copy-on-write so untouched nodes keep their line marks.
  std::function<YAML::Node(YAML::Node, std::size_t)> assign = [&](YAML::Node node, std::size_t i) -> YAML::Node {
    if (i == parts.size()) return parsed;
    if (node && !node.IsMap() && !node.IsNull())
      throw ConfigError("override " + dotted_key + ": '" + parts[i - 1] + "' is not a mapping");
    YAML::Node out = node && node.IsMap() ? YAML::Clone(node) : YAML::Node(YAML::NodeType::Map);
    out[parts[i]] = assign(node && node.IsMap() ? node[parts[i]] : YAML::Node(), i + 1);
    return out;
  };
  YAML::Node root = impl_->root;
  root[parts[0]] = assign(root[parts[0]], 1);
  if (parts[0] == "name") {
    Scenario check = parse(YAML::Dump(root), origin_);
    name_ = check.name_;
  }
}

void Scenario::set_seed(std::uint64_t seed) { set("seed", std::to_string(seed)); }

void Scenario::set_budget(double budget) {
  if (!impl_->root["budgets"]) throw ConfigError(origin_ + ": scenario has no budgets to override");
  if (!(budget >= 0.0)) throw ConfigError("budget must be nonnegative");
  set("budgets", "[" + format_number(budget) + "]");
}

std::string Scenario::yaml() const { return YAML::Dump(impl_->root) + "\n"; }

RunResult Scenario::run() const {
  const YAML::Node& root = impl_->root;
  const auto experiment = yaml::required<std::string>(root, "experiment");
  RunResult r;
  try {
    const bool plots = yaml::optional<bool>(root, "plots", true);
    const auto description = yaml::optional<std::string>(root, "description", "");
    Config c(root);
    r = runners().at(experiment)(c);
    if (!plots) r.plots.clear();
    r.description = description;
    if (root["seed"]) r.seed = yaml::as<std::uint64_t>(root["seed"]);
  } catch (const ConfigError& e) {
    throw ConfigError(origin_ + ": " + e.what());
  }
  r.scenario = name_;
  r.experiment = experiment;
  return r;
}

std::filesystem::path write_result(const RunResult& r, const std::filesystem::path& out_dir, bool plots) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path final_dir = out_dir / r.scenario;
  const fs::path staging = out_dir / ("." + r.scenario + ".partial");
  fs::remove_all(staging);
  fs::create_directories(staging);
  auto write = [&](const std::string& file, const std::string& content) {
    std::ofstream f(staging / file, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (staging / file).string());
  };
  write("summary.json", r.summary_json());
  for (const auto& t : r.tables) write(t.name + ".csv", t.csv());
  if (plots)
    for (const auto& p : r.plots) write(p.name + ".svg", p.svg);
  fs::remove_all(final_dir);
  fs::rename(staging, final_dir);
  return final_dir;
}

}  // namespace kllab::scenarios

#include "kllab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "model_yaml.hpp"

namespace kllab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// exp(v - max) normalised; empty optional when every entry is -inf.
std::optional<std::vector<double>> softmax(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (top == kNegInf) return std::nullopt;
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += out[i] = std::exp(v[i] - top);
  for (double& x : out) x /= total;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelClassPosterior

ModelClassPosterior::ModelClassPosterior(std::vector<SemiDistributionPtr> models,
                                         std::vector<double> prior)
    : models_(std::move(models)), prior_(std::move(prior)) {
  if (models_.empty()) throw std::invalid_argument("model class is empty");
  if (models_.size() != prior_.size())
    throw std::invalid_argument("one prior weight per model required");
  alphabet_ = models_.front()->alphabet_size();
  for (const auto& m : models_) {
    if (!m) throw std::invalid_argument("null model");
    if (m->alphabet_size() != alphabet_) throw std::invalid_argument("models disagree on alphabet");
  }
  double total = 0.0;
  for (double w : prior_) {
    if (!(w > 0.0)) throw std::invalid_argument("prior weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("prior weights must sum to 1");
  log_prior_.reserve(prior_.size());
  for (double w : prior_) log_prior_.push_back(std::log(w));
  log_action_.assign(models_.size(), 0.0);
  log_observation_.assign(models_.size(), 0.0);
}

ModelClassPosterior ModelClassPosterior::from_lengths(std::vector<SemiDistributionPtr> models,
                                                      const std::vector<std::size_t>& length_bits) {
  if (models.size() != length_bits.size())
    throw std::invalid_argument("one length per model required");
  // Shift by the shortest length so long programs do not underflow.
  const std::size_t shortest = *std::min_element(length_bits.begin(), length_bits.end());
  std::vector<double> w;
  for (std::size_t l : length_bits) w.push_back(std::ldexp(1.0, -static_cast<int>(l - shortest)));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return ModelClassPosterior(std::move(models), std::move(w));
}

ModelClassPosterior ModelClassPosterior::update(Symbol x) const {
  if (x < 0 || x >= alphabet_) throw std::out_of_range("symbol outside alphabet");
  const Stream s = history_.next_stream();
  ModelClassPosterior next = *this;
  auto& acc = s == Stream::action ? next.log_action_ : next.log_observation_;
  for (std::size_t i = 0; i < models_.size(); ++i)
    acc[i] += safe_log(models_[i]->predict(history_)[x]);

  std::vector<double> stream_log(models_.size());
  for (std::size_t i = 0; i < models_.size(); ++i) stream_log[i] = log_prior_[i] + acc[i];
  if (!softmax(stream_log))
    throw DegeneratePosteriorError("every model assigns zero probability to " +
                                   std::string(to_string(s)) + " symbol " + std::to_string(x) +
                                   " after history '" + history_.str() + "'");
  next.history_ = history_.append(x);
  return next;
}

ModelClassPosterior ModelClassPosterior::update(Symbol x, Stream s) const {
  if (s != history_.next_stream())
    throw std::invalid_argument("symbol stream does not match the history position");
  return update(x);
}

ModelClassPosterior ModelClassPosterior::condition(const History& h) const {
  ModelClassPosterior out = *this;
  out.history_ = History();
  std::fill(out.log_action_.begin(), out.log_action_.end(), 0.0);
  std::fill(out.log_observation_.begin(), out.log_observation_.end(), 0.0);
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const auto cond = models_[i]->conditionals_along(h);
    for (std::size_t j = 0; j < cond.size(); ++j)
      (stream_at(j) == Stream::action ? out.log_action_ : out.log_observation_)[i] +=
          safe_log(cond[j]);
  }
  for (Stream s : {Stream::action, Stream::observation}) {
    const auto& acc = out.log_likelihood(s);
    std::vector<double> v(models_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = log_prior_[i] + acc[i];
    if (!softmax(v))
      throw DegeneratePosteriorError(std::string("history '") + h.str() +
                                     "' has zero probability on the " + to_string(s) +
                                     " stream under every model");
  }
  out.history_ = h;
  return out;
}

std::vector<double> ModelClassPosterior::normalized(const std::vector<double>& log_weights) const {
  auto w = softmax(log_weights);
  if (!w) throw DegeneratePosteriorError("posterior is zero for every model");
  return *w;
}

std::vector<double> ModelClassPosterior::posterior(Stream s) const {
  const auto& acc = log_likelihood(s);
  std::vector<double> v(models_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = log_prior_[i] + acc[i];
  return normalized(v);
}

std::vector<double> ModelClassPosterior::joint_posterior() const {
  std::vector<double> v(models_.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = log_prior_[i] + log_action_[i] + log_observation_[i];
  return normalized(v);
}

Distribution ModelClassPosterior::predict(PosteriorMode mode) const {
  const auto w = mode == PosteriorMode::joint ? joint_posterior()
                                              : posterior(history_.next_stream());
  Distribution out(static_cast<std::size_t>(alphabet_), 0.0);
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (w[i] == 0.0) continue;
    const Distribution d = models_[i]->predict(history_);
    for (int x = 0; x < alphabet_; ++x) out[x] += w[i] * d[x];
  }
  return out;
}

// ---------------------------------------------------------------------------
// MixturePredictor

MixturePredictor::MixturePredictor(ModelClassPosterior prior_state, PosteriorMode mode)
    : state_(std::move(prior_state)), mode_(mode) {
  if (!state_.history().empty())
    throw std::invalid_argument("mixture predictor needs an unconditioned class");
}

Distribution MixturePredictor::predict(const History& context) const {
  const std::size_t n = state_.size();
  std::vector<double> log_w(n), log_other(n);
  const Stream next = context.next_stream();
  for (std::size_t i = 0; i < n; ++i) {
    const auto cond = state_.model(i).conditionals_along(context);
    double acc = std::log(state_.prior()[i]), other = acc;
    for (std::size_t j = 0; j < cond.size(); ++j)
      (mode_ == PosteriorMode::joint || stream_at(j) == next ? acc : other) += safe_log(cond[j]);
    log_w[i] = acc;
    log_other[i] = other;
  }
  Distribution out(static_cast<std::size_t>(alphabet_size()), 0.0);
  const auto w = softmax(log_w);
  // In split mode the context is also ruled out when the other stream is.
  if (!w || (mode_ == PosteriorMode::split && !softmax(log_other))) return out;
  for (std::size_t i = 0; i < n; ++i) {
    if ((*w)[i] == 0.0) continue;
    const Distribution d = state_.model(i).predict(context);
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += (*w)[i] * d[x];
  }
  return out;
}

std::vector<double> MixturePredictor::conditionals_along(const History& h) const {
  const std::size_t n = state_.size();
  std::vector<std::vector<double>> cond(n);
  for (std::size_t i = 0; i < n; ++i) cond[i] = state_.model(i).conditionals_along(h);

  std::vector<double> log_a(n), log_o(n);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = log_o[i] = std::log(state_.prior()[i]);
  std::vector<double> out(h.size(), 0.0);
  std::vector<double> log_w(n);
  for (std::size_t j = 0; j < h.size(); ++j) {
    const Stream s = stream_at(j);
    for (std::size_t i = 0; i < n; ++i) {
      if (mode_ == PosteriorMode::joint)
        log_w[i] = log_a[i] + log_o[i] - std::log(state_.prior()[i]);
      else
        log_w[i] = s == Stream::action ? log_a[i] : log_o[i];
    }
    const auto w = softmax(log_w);
    if (!w) break;  // the remaining contexts are ruled out
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i) p += (*w)[i] * cond[i][j];
    out[j] = p;
    for (std::size_t i = 0; i < n; ++i)
      (s == Stream::action ? log_a : log_o)[i] += safe_log(cond[i][j]);
  }
  return out;
}

std::string MixturePredictor::describe() const {
  std::ostringstream os;
  os << "mixture of " << state_.size() << " models ("
     << (mode_ == PosteriorMode::split ? "split" : "joint") << " posterior)";
  return os.str();
}

// ---------------------------------------------------------------------------
// Switch-variant augmentation

AugmentedClass augment_with_switch_variants(const ModelClassPosterior& cls,
                                            const toylang::Language& lang,
                                            const toylang::EventCode& trigger,
                                            const SemiDistribution& post_policy,
                                            VariantWeighting weighting) {
  if (lang.alphabet_size() != cls.alphabet_size())
    throw std::invalid_argument("language and class disagree on the alphabet");
  const toylang::BasicPredictorCode post_code = lang.encode_predictor(post_policy);
  auto event = std::make_shared<const Event>(lang.instantiate(trigger));
  const std::size_t delta = lang.wrapper_overhead(trigger, post_code);
  PolicyPtr post = lang.instantiate(post_code);

  const double two_minus_delta = std::ldexp(1.0, -static_cast<int>(delta));
  const double ratio = weighting == VariantWeighting::plain
                           ? two_minus_delta
                           : two_minus_delta / (1.0 - two_minus_delta);

  const std::size_t n = cls.size();
  std::vector<SemiDistributionPtr> models = cls.models();
  std::vector<double> prior;
  prior.reserve(2 * n);
  for (double w : cls.prior()) prior.push_back(w / (1.0 + ratio));
  for (double w : cls.prior()) prior.push_back(w * ratio / (1.0 + ratio));
  // Absorb the rounding residue so the prior passes the sum-to-one check.
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
  for (double& w : prior) w /= total;

  std::vector<SwitchVariant> variants;
  for (std::size_t i = 0; i < n; ++i) {
    models.push_back(std::make_shared<SwitchPredictor>(cls.models()[i], event, post));
    variants.push_back(SwitchVariant{i, n + i, trigger, post_code, delta});
  }
  ModelClassPosterior state(std::move(models), std::move(prior));
  if (!cls.history().empty()) state = state.condition(cls.history());
  return AugmentedClass{std::move(state), std::move(variants), delta, ratio, std::move(post)};
}

// ---------------------------------------------------------------------------
// Model class files

ModelClassPosterior build_model_class(const std::vector<ModelSpec>& specs,
                                      const toylang::Language& lang) {
  if (specs.empty()) throw ConfigError("model class is empty");
  std::vector<SemiDistributionPtr> models;
  const bool all_priors =
      std::all_of(specs.begin(), specs.end(), [](const ModelSpec& s) { return s.prior.has_value(); });
  const bool any_prior =
      std::any_of(specs.begin(), specs.end(), [](const ModelSpec& s) { return s.prior.has_value(); });
  if (any_prior && !all_priors)
    throw ConfigError("either every model or no model may set a prior");
  for (const auto& s : specs) models.push_back(s.model);
  if (all_priors) {
    std::vector<double> w;
    for (const auto& s : specs) {
      if (!(*s.prior > 0.0)) throw ConfigError("prior weights must be positive");
      w.push_back(*s.prior);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return ModelClassPosterior(std::move(models), std::move(w));
  }
  std::vector<std::size_t> lengths;
  for (const auto& s : specs) {
    if (s.encoding) {
      lengths.push_back(s.encoding->size());
      continue;
    }
    try {
      lengths.push_back(lang.codeword_length(toylang::PredictorCode{lang.encode_predictor(*s.model), {}}));
    } catch (const toylang::EncodingError& e) {
      throw ConfigError(std::string("model needs an explicit prior: ") + e.what());
    }
  }
  return ModelClassPosterior::from_lengths(std::move(models), lengths);
}

namespace {

void emit_rows(YAML::Emitter& out, const char* key, const std::vector<Distribution>& rows) {
  out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
  for (const auto& r : rows) out << YAML::Flow << r;
  out << YAML::EndSeq;
}

}  // namespace

std::string model_class_to_yaml(const ModelClassPosterior& cls, const toylang::Language& lang) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap << YAML::Key << "alphabet" << YAML::Value << cls.alphabet_size();
  out << YAML::Key << "models" << YAML::Value << YAML::BeginSeq;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const SemiDistribution& m = cls.model(i);
    out << YAML::BeginMap;
    if (dynamic_cast<const UniformPredictor*>(&m)) {
      out << YAML::Key << "kind" << YAML::Value << "uniform";
    } else if (const auto* s = dynamic_cast<const StationaryPredictor*>(&m)) {
      out << YAML::Key << "kind" << YAML::Value << "stationary";
      out << YAML::Key << "action" << YAML::Value << YAML::Flow << s->row(Stream::action);
      out << YAML::Key << "observation" << YAML::Value << YAML::Flow << s->row(Stream::observation);
    } else if (const auto* t = dynamic_cast<const TabularPredictor*>(&m)) {
      out << YAML::Key << "kind" << YAML::Value << "table";
      out << YAML::Key << "order" << YAML::Value << t->order();
      emit_rows(out, "action", t->rows(Stream::action));
      emit_rows(out, "observation", t->rows(Stream::observation));
    } else if (const auto* f = dynamic_cast<const FiniteStatePredictor*>(&m)) {
      out << YAML::Key << "kind" << YAML::Value << "automaton";
      out << YAML::Key << "states" << YAML::Value << f->num_states();
      out << YAML::Key << "transitions" << YAML::Value << YAML::Flow << f->transitions();
      emit_rows(out, "action", f->rows(Stream::action));
      emit_rows(out, "observation", f->rows(Stream::observation));
    } else {
      throw ConfigError("model kind cannot be written to a class file: " + m.describe());
    }
    try {
      const auto code = lang.encode_predictor(m);
      out << YAML::Key << "encoding" << YAML::Value
          << lang.encode(toylang::PredictorCode{code, {}});
    } catch (const toylang::EncodingError&) {
      // Rows outside the DIST grid: no encoding, the prior carries the weight.
    }
    out << YAML::Key << "prior" << YAML::Value << cls.prior()[i];
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ModelClassPosterior model_class_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("model class file: ") + e.what());
  }
  const int alphabet = yaml::required<int>(root, "alphabet");
  const toylang::Language lang(alphabet);
  return build_model_class(yaml::model_specs(yaml::required_node(root, "models"), lang), lang);
}

// ---------------------------------------------------------------------------
// YAML helpers shared with the scenario runner

namespace yaml {

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return "";
  return "line " + std::to_string(mark.line + 1) + ": ";
}

YAML::Node required_node(const YAML::Node& parent, const std::string& key) {
  if (!parent.IsMap()) throw ConfigError(where(parent) + "expected a mapping");
  YAML::Node n = parent[key];
  if (!n) throw ConfigError(where(parent) + "missing key '" + key + "'");
  return n;
}

Distribution row(const YAML::Node& node, int alphabet) {
  if (!node.IsSequence()) throw ConfigError(where(node) + "expected a list of probabilities");
  Distribution d;
  for (const auto& x : node) d.push_back(as<double>(x));
  try {
    check_semi_distribution(d, alphabet);
  } catch (const std::domain_error& e) {
    throw ConfigError(where(node) + e.what());
  }
  return d;
}

std::vector<Distribution> rows(const YAML::Node& node, int alphabet) {
  if (!node.IsSequence()) throw ConfigError(where(node) + "expected a list of rows");
  std::vector<Distribution> out;
  for (const auto& r : node) out.push_back(row(r, alphabet));
  return out;
}

ModelSpec model_spec(const YAML::Node& node, const toylang::Language& lang) {
  const int a = lang.alphabet_size();
  ModelSpec spec;
  if (!node.IsMap()) throw ConfigError(where(node) + "model entries must be mappings");
  if (node["prior"]) spec.prior = as<double>(node["prior"]);
  try {
    if (node["program"]) {
      const auto bits = as<std::string>(node["program"]);
      spec.model = lang.instantiate_program(lang.decode(bits));
      spec.encoding = bits;
      return spec;
    }
    const auto kind = required<std::string>(node, "kind");
    if (kind == "uniform") {
      spec.model = std::make_shared<UniformPredictor>(a);
    } else if (kind == "stationary") {
      spec.model = std::make_shared<StationaryPredictor>(row(required_node(node, "action"), a),
                                                         row(required_node(node, "observation"), a));
    } else if (kind == "table") {
      spec.model = std::make_shared<TabularPredictor>(
          a, required<int>(node, "order"), rows(required_node(node, "action"), a),
          rows(required_node(node, "observation"), a));
    } else if (kind == "automaton") {
      spec.model = std::make_shared<FiniteStatePredictor>(
          a, required<int>(node, "states"), required<std::vector<int>>(node, "transitions"),
          rows(required_node(node, "action"), a), rows(required_node(node, "observation"), a));
    } else {
      throw ConfigError(where(node) + "unknown model kind '" + kind + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where(node) + e.what());
  } catch (const toylang::DecodeError& e) {
    throw ConfigError(where(node) + e.what());
  }
  if (node["encoding"]) {
    spec.encoding = as<std::string>(node["encoding"]);
  } else {
    try {
      spec.encoding = lang.encode(toylang::PredictorCode{lang.encode_predictor(*spec.model), {}});
    } catch (const toylang::EncodingError&) {
    }
  }
  return spec;
}

std::vector<ModelSpec> model_specs(const YAML::Node& node, const toylang::Language& lang) {
  if (!node.IsSequence()) throw ConfigError(where(node) + "models must be a list");
  std::vector<ModelSpec> out;
  for (const auto& m : node) out.push_back(model_spec(m, lang));
  return out;
}

}  // namespace yaml

}  // namespace kllab

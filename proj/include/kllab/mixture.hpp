#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kllab/core.hpp"
#include "kllab/toylang.hpp"

namespace kllab {

class DegeneratePosteriorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PosteriorMode {
  split,  // w_a at action positions, w_o at observation positions
  joint   // one posterior on both streams: the classical Bayes mixture
};

/// Finite model class with a prior and per-stream log-likelihoods for the
/// conditioning history. Values are immutable; updates return a new state.
class ModelClassPosterior {
 public:
  ModelClassPosterior(std::vector<SemiDistributionPtr> models, std::vector<double> prior);

  /// Prior proportional to 2^-length.
  static ModelClassPosterior from_lengths(std::vector<SemiDistributionPtr> models,
                                          const std::vector<std::size_t>& length_bits);

  std::size_t size() const { return models_.size(); }
  int alphabet_size() const { return alphabet_; }
  const std::vector<SemiDistributionPtr>& models() const { return models_; }
  const SemiDistribution& model(std::size_t i) const { return *models_.at(i); }
  const std::vector<double>& prior() const { return prior_; }
  const History& history() const { return history_; }
  const std::vector<double>& log_likelihood(Stream s) const {
    return s == Stream::action ? log_action_ : log_observation_;
  }

  /// Appends `x` at the next position. The stream is implied by the history
  /// length; the overload with an explicit stream checks it.
  ModelClassPosterior update(Symbol x) const;
  ModelClassPosterior update(Symbol x, Stream s) const;
  /// Posterior on `h` computed from the prior in one pass.
  ModelClassPosterior condition(const History& h) const;

  /// w_a or w_o: prior times the likelihood of that stream only.
  std::vector<double> posterior(Stream s) const;
  /// Prior times both streams' likelihoods.
  std::vector<double> joint_posterior() const;

  /// Mixture prediction for the next symbol. In split mode the weights are the
  /// posterior of the stream being predicted.
  Distribution predict(PosteriorMode mode = PosteriorMode::split) const;

 private:
  std::vector<double> normalized(const std::vector<double>& log_weights) const;

  int alphabet_;
  std::vector<SemiDistributionPtr> models_;
  std::vector<double> prior_;
  std::vector<double> log_prior_;
  std::vector<double> log_action_, log_observation_;
  History history_;
};

/// Bayes mixture as a predictor over arbitrary contexts. Contexts that the
/// mixture itself rules out get zero mass instead of an error.
class MixturePredictor final : public SemiDistribution {
 public:
  explicit MixturePredictor(ModelClassPosterior prior_state,
                            PosteriorMode mode = PosteriorMode::split);

  int alphabet_size() const override { return state_.alphabet_size(); }
  Distribution predict(const History& context) const override;
  std::vector<double> conditionals_along(const History& h) const override;
  std::string describe() const override;

  const ModelClassPosterior& prior_state() const { return state_; }
  PosteriorMode mode() const { return mode_; }

 private:
  ModelClassPosterior state_;
  PosteriorMode mode_;
};

/// How switch variants are weighted against their base models.
enum class VariantWeighting {
  /// w(v') = w(v) 2^-D: the plain 2^-length prior ratio.
  plain,
  /// w(v') = w(v) 2^-D / (1 - 2^-D): v' also carries the weight of the
  /// behaviourally identical re-wrapped programs v'', v''', ... so that the
  /// variants hold exactly a 2^-D fraction of the augmented prior.
  chain
};

struct SwitchVariant {
  std::size_t base_index = 0;    // index of the base model in the augmented class
  std::size_t variant_index = 0; // index of the variant in the augmented class
  toylang::EventCode trigger;
  toylang::BasicPredictorCode post;
  std::size_t extra_length_bits = 0;
};

struct AugmentedClass {
  ModelClassPosterior state;  // originals first, then one variant per original
  std::vector<SwitchVariant> variants;
  std::size_t wrapper_overhead_bits = 0;
  double prior_ratio = 0.0;  // w(v') / w(v), identical for every variant
  PolicyPtr post_policy;
};

/// Adds a switch variant for every model. The trigger and post policy must be
/// expressible in `lang`; otherwise toylang::EncodingError is thrown.
AugmentedClass augment_with_switch_variants(const ModelClassPosterior& cls,
                                            const toylang::Language& lang,
                                            const toylang::EventCode& trigger,
                                            const SemiDistribution& post_policy,
                                            VariantWeighting weighting = VariantWeighting::chain);

// ---------------------------------------------------------------------------
// Model class files
//
//   alphabet: 2
//   models:
//     - kind: stationary           # or uniform, table, automaton, program
//       action: [0.5, 0.5]
//       observation: [1, 0]
//       prior: 0.5                 # optional; otherwise 2^-length
//     - program: "01..."           # toylang bits

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  SemiDistributionPtr model;
  std::optional<std::string> encoding;  // toylang bits when encodable
  std::optional<double> prior;
};

ModelClassPosterior build_model_class(const std::vector<ModelSpec>& specs,
                                      const toylang::Language& lang);

std::string model_class_to_yaml(const ModelClassPosterior& cls, const toylang::Language& lang);
ModelClassPosterior model_class_from_yaml(const std::string& text);

}  // namespace kllab

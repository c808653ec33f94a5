#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kllab {

using Symbol = int;

/// Masses over the alphabet for the next symbol. May sum to less than one;
/// the deficiency 1 - sum is the "no next symbol" outcome.
using Distribution = std::vector<double>;

inline constexpr double kMassTolerance = 1e-12;

class Alphabet {
 public:
  explicit Alphabet(int size);
  int size() const { return size_; }
  bool contains(Symbol x) const { return x >= 0 && x < size_; }
  bool operator==(const Alphabet&) const = default;

 private:
  int size_;
};

/// Which process produced the symbol at a position. Positions are 0-based:
/// even positions hold actions a_t, odd positions hold observations o_t.
enum class Stream { action, observation };

constexpr Stream stream_at(std::size_t position) {
  return position % 2 == 0 ? Stream::action : Stream::observation;
}

const char* to_string(Stream s);

/// Interleaved a_1 o_1 a_2 o_2 ... history. Immutable; `append` returns a new
/// value.
class History {
 public:
  History() = default;
  explicit History(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}
  History(std::initializer_list<Symbol> symbols) : symbols_(symbols) {}

  /// Parses "0102" style strings (one digit per symbol).
  static History parse(std::string_view digits);

  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }
  Symbol operator[](std::size_t i) const { return symbols_[i]; }
  std::span<const Symbol> symbols() const { return symbols_; }
  const std::vector<Symbol>& vector() const { return symbols_; }

  /// Stream of the next symbol to be appended.
  Stream next_stream() const { return stream_at(symbols_.size()); }
  /// Number of completed (action, observation) pairs.
  std::size_t completed_steps() const { return symbols_.size() / 2; }

  History append(Symbol x) const;
  History concat(std::span<const Symbol> tail) const;
  History prefix(std::size_t n) const;
  History suffix(std::size_t from) const;

  bool valid_for(const Alphabet& alphabet) const;
  std::string str() const;

  bool operator==(const History&) const = default;
  auto operator<=>(const History&) const = default;

 private:
  std::vector<Symbol> symbols_;
};

/// A conditional next-symbol predictor with per-context mass at most one.
/// Policies are the same object evaluated only at action positions.
class SemiDistribution {
 public:
  virtual ~SemiDistribution() = default;

  virtual int alphabet_size() const = 0;
  virtual Distribution predict(const History& context) const = 0;

  /// p(x_i | x_<i) for every position i of `h`. Implementations with
  /// sequential state override this to avoid quadratic replays.
  virtual std::vector<double> conditionals_along(const History& h) const;

  virtual std::string describe() const { return "semi-distribution"; }

  double prob(const History& context, Symbol x) const;
};

using SemiDistributionPtr = std::shared_ptr<const SemiDistribution>;
using Policy = SemiDistribution;
using PolicyPtr = SemiDistributionPtr;

double mass(const Distribution& d);
/// Throws std::domain_error when entries leave [0,1] or the mass exceeds one.
void check_semi_distribution(const Distribution& d, int alphabet_size);

/// prod_i d(x_i | x_<i); 1 for the empty history. Histories longer than 32
/// symbols are accumulated in the log domain.
double joint_probability(const SemiDistribution& d, const History& h);
double log_joint_probability(const SemiDistribution& d, const History& h);

// ---------------------------------------------------------------------------
// Concrete predictors

class UniformPredictor final : public SemiDistribution {
 public:
  explicit UniformPredictor(int alphabet_size);
  int alphabet_size() const override { return size_; }
  Distribution predict(const History&) const override;
  std::string describe() const override { return "uniform"; }

 private:
  int size_;
};

/// Context-free predictor with one row for actions and one for observations.
class StationaryPredictor final : public SemiDistribution {
 public:
  StationaryPredictor(Distribution action_row, Distribution observation_row);
  int alphabet_size() const override { return static_cast<int>(action_.size()); }
  const Distribution& row(Stream s) const { return s == Stream::action ? action_ : observation_; }
  Distribution predict(const History& context) const override;
  std::string describe() const override;

 private:
  Distribution action_, observation_;
};

/// Order-k table per stream, indexed by the last k symbols (missing symbols
/// before the start of the history read as 0). Row index is the base-|X|
/// number formed by the context, oldest symbol most significant.
class TabularPredictor final : public SemiDistribution {
 public:
  TabularPredictor(int alphabet_size, int order, std::vector<Distribution> action_rows,
                   std::vector<Distribution> observation_rows);
  int alphabet_size() const override { return size_; }
  int order() const { return order_; }
  const std::vector<Distribution>& rows(Stream s) const {
    return s == Stream::action ? action_ : observation_;
  }
  std::size_t row_index(std::span<const Symbol> context) const;
  Distribution predict(const History& context) const override;
  std::vector<double> conditionals_along(const History& h) const override;
  std::string describe() const override;

 private:
  int size_;
  int order_;
  std::vector<Distribution> action_, observation_;
};

/// Deterministic automaton over symbols, starting in state 0, emitting one row
/// per (state, stream).
class FiniteStatePredictor final : public SemiDistribution {
 public:
  FiniteStatePredictor(int alphabet_size, int num_states, std::vector<int> transitions,
                       std::vector<Distribution> action_rows,
                       std::vector<Distribution> observation_rows);
  int alphabet_size() const override { return size_; }
  int num_states() const { return states_; }
  int next_state(int state, Symbol x) const { return transitions_[state * size_ + x]; }
  const std::vector<int>& transitions() const { return transitions_; }
  const std::vector<Distribution>& rows(Stream s) const {
    return s == Stream::action ? action_ : observation_;
  }
  int run(std::span<const Symbol> symbols) const;
  Distribution predict(const History& context) const override;
  std::vector<double> conditionals_along(const History& h) const override;
  std::string describe() const override;

 private:
  int size_;
  int states_;
  std::vector<int> transitions_;
  std::vector<Distribution> action_, observation_;
};

/// Adapter over a callable, mostly for tests and scenario glue.
class FunctionPredictor final : public SemiDistribution {
 public:
  using Fn = std::function<Distribution(const History&)>;
  FunctionPredictor(int alphabet_size, Fn fn, std::string name = "function");
  int alphabet_size() const override { return size_; }
  Distribution predict(const History& context) const override;
  std::string describe() const override { return name_; }

 private:
  int size_;
  Fn fn_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Utility functions

/// Bounded utility over complete histories of length 2m.
class UtilityFunction {
 public:
  using Fn = std::function<double(const History&)>;

  UtilityFunction(int horizon, Fn fn, std::string name = "utility");

  /// (sum_t reward[o_t]) / m, rewards in [0,1].
  static UtilityFunction observation_reward_sum(int horizon, std::vector<double> reward);
  /// (sum_t reward[a_t]) / m, rewards in [0,1].
  static UtilityFunction action_reward_sum(int horizon, std::vector<double> reward);

  int horizon() const { return horizon_; }
  const std::string& name() const { return name_; }
  /// Throws std::invalid_argument for histories not of length 2m and
  /// std::domain_error for outputs outside [0,1].
  double operator()(const History& h) const;

 private:
  int horizon_;
  Fn fn_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Events

/// A decidable set of histories. Events are only ever queried on prefixes
/// that end at an action boundary (even length).
class Event {
 public:
  using Predicate = std::function<bool(std::span<const Symbol>)>;

  Event(Predicate predicate, int description_length_bits, std::string name);

  static Event never();
  static Event always();

  bool contains(std::span<const Symbol> prefix) const { return predicate_(prefix); }
  int description_length_bits() const { return bits_; }
  const std::string& name() const { return name_; }

  /// E happens at timestep t (1-based) iff the prefix of length 2t-2 is in E.
  /// Throws std::out_of_range unless 1 <= t and 2t-2 <= |h|.
  bool happens_at(const History& h, int t) const;
  bool has_happened_by(const History& h, int t) const;
  /// True iff E has not happened at any k <= t-1.
  bool unprecedented_at(const History& h, int t) const;

  /// Length of the shortest even prefix of `symbols` lying in E.
  std::optional<std::size_t> first_happening(std::span<const Symbol> symbols) const;

 private:
  Predicate predicate_;
  int bits_;
  std::string name_;
};

using EventPtr = std::shared_ptr<const Event>;

/// Follows `base` until the trigger has happened; from then on, action
/// positions are answered by `post` evaluated on the history suffix starting at
/// the first happening. Observation positions always follow `base`.
class SwitchPredictor final : public SemiDistribution {
 public:
  SwitchPredictor(SemiDistributionPtr base, EventPtr trigger, SemiDistributionPtr post);

  int alphabet_size() const override { return base_->alphabet_size(); }
  Distribution predict(const History& context) const override;
  std::vector<double> conditionals_along(const History& h) const override;
  std::string describe() const override;

  const SemiDistributionPtr& base() const { return base_; }
  const EventPtr& trigger() const { return trigger_; }
  const SemiDistributionPtr& post() const { return post_; }

 private:
  SemiDistributionPtr base_;
  EventPtr trigger_;
  SemiDistributionPtr post_;
};

}  // namespace kllab

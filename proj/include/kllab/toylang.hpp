#pragma once

// A finite prefix-free binary language whose programs decode to predictors,
// event templates, switch wrappers and integers. Codeword lengths stand in
// for description complexity: they are upper bounds, never the true
// Kolmogorov complexity.
//
//   PROG    := 0 PRED | 10 EVENT | 110 INT | 111            (catch-all: uniform)
//   PRED    := 0 BASIC | 1 BASIC EVENT BASIC                (switch wrapper)
//   BASIC   := 00 TABLE | 01 AUTOMATON | 1                  (uniform)
//   TABLE   := TU4(order) DIST^(2 |X|^order)
//   AUTOMATON := GAMMA6(states-1) TB(states)^(states |X|) DIST^(2 states)
//   DIST    := 0 TB(|X|) | 10 | 11 COUNT3^(|X|+1)           (point | uniform | counts+halt)
//   EVENT   := 000 | 001 | 01 INT | 100 INT | 101 TB | 110 TB | 111 TB
//   INT     := 0 GAMMA5(bitlen) bits | 1 GAMMA6(exponent)
//
// Every field is a complete finite prefix code, so the language is complete and
// its Kraft sum at full depth is exactly one.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kllab/core.hpp"

namespace kllab::toylang {

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxTableOrder = 3;
inline constexpr int kMaxAutomatonStates = 64;
inline constexpr int kCountBits = 3;
inline constexpr int kLiteralClassBits = 5;  // literal integers below 2^31
inline constexpr int kExponentBits = 6;      // powers 2^0 .. 2^63

struct IntegerCode {
  std::uint64_t value = 0;
  bool power_form = false;
  bool operator==(const IntegerCode&) const = default;
};

struct DistCode {
  enum class Kind { point, uniform, counts };
  Kind kind = Kind::uniform;
  Symbol symbol = 0;
  std::vector<int> counts;  // |X| symbol counts followed by the halt count
  bool operator==(const DistCode&) const = default;
};

struct TableCode {
  int order = 0;
  std::vector<DistCode> action_rows, observation_rows;
  bool operator==(const TableCode&) const = default;
};

struct AutomatonCode {
  int num_states = 1;
  std::vector<int> transitions;
  std::vector<DistCode> action_rows, observation_rows;
  bool operator==(const AutomatonCode&) const = default;
};

struct UniformCode {
  bool operator==(const UniformCode&) const = default;
};

using BasicPredictorCode = std::variant<TableCode, AutomatonCode, UniformCode>;

struct EventCode {
  enum class Kind {
    never,
    always,
    at_timestep,
    length_at_least,
    observation_seen,
    action_seen,
    last_observation_is
  };
  Kind kind = Kind::never;
  IntegerCode number;  // at_timestep, length_at_least
  Symbol symbol = 0;   // the *_seen / last_observation_is kinds
  bool operator==(const EventCode&) const = default;

  /// E_T with T in its shortest integer form.
  static EventCode at_timestep(std::uint64_t t);
};

struct SwitchTail {
  EventCode trigger;
  BasicPredictorCode post;
  bool operator==(const SwitchTail&) const = default;
};

struct PredictorCode {
  BasicPredictorCode base;
  std::optional<SwitchTail> wrapper;
  bool operator==(const PredictorCode&) const = default;
};

struct CatchAll {
  bool operator==(const CatchAll&) const = default;
};

using Program = std::variant<PredictorCode, EventCode, IntegerCode, CatchAll>;

enum class ObjectKind { predictor, event, integer, wrapper };
ObjectKind kind_of(const Program& p);
const char* to_string(ObjectKind k);

/// Language instance for a fixed alphabet. Bit strings are '0'/'1' text.
class Language {
 public:
  explicit Language(int alphabet_size);

  int alphabet_size() const { return size_; }

  std::string encode(const Program& p) const;
  /// Decodes a string that is exactly one program; throws DecodeError otherwise.
  Program decode(std::string_view bits) const;
  /// Length of the program that is a prefix of `bits`, or nullopt when `bits`
  /// is itself a proper prefix of longer programs.
  std::optional<std::size_t> parse_length(std::string_view bits) const;

  std::size_t codeword_length(const Program& p) const { return encode(p).size(); }
  /// Shortest top-level integer program for `value`.
  IntegerCode canonical_integer(std::uint64_t value) const;
  std::size_t integer_length(std::uint64_t value) const;
  /// Top-level program length of the canonical E_T event.
  std::size_t timestep_event_length(std::uint64_t t) const;

  /// Bits added by wrapping a predictor: trigger description plus post
  /// description. Equals codeword_length(wrapper) - codeword_length(base).
  std::size_t wrapper_overhead(const EventCode& trigger, const BasicPredictorCode& post) const;

  /// W[l] = sum over programs of length l of 2^-l, computed structurally.
  const std::vector<double>& length_weights() const { return weights_; }
  std::size_t max_program_length() const { return weights_.size() - 1; }
  double kraft_sum(int depth) const;

  SemiDistributionPtr instantiate(const PredictorCode& code) const;
  SemiDistributionPtr instantiate(const BasicPredictorCode& code) const;
  Event instantiate(const EventCode& code) const;
  Distribution instantiate(const DistCode& code) const;
  /// Predictor for a PRED or catch-all program; throws DecodeError otherwise.
  SemiDistributionPtr instantiate_program(const Program& p) const;

  /// Shortest DIST reproducing `d` exactly (within 1e-12), if any.
  std::optional<DistCode> encode_distribution(const Distribution& d) const;
  /// Encodes uniform, stationary, tabular and automaton predictors; throws
  /// EncodingError for anything else or for unrepresentable rows.
  BasicPredictorCode encode_predictor(const SemiDistribution& model) const;

  std::string tag_table() const;

 private:
  int size_;
  std::vector<double> weights_;
};

/// min over T in [t, t_max] of the length of the canonical E_T program.
/// Throws std::out_of_range unless 1 <= t <= t_max.
std::size_t simplest_unprecedented_complexity(const Language& lang, std::uint64_t t,
                                              std::uint64_t t_max);

}  // namespace kllab::toylang

#include "kllab/core.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kllab {

Alphabet::Alphabet(int size) : size_(size) {
  if (size < 2) throw std::invalid_argument("alphabet needs at least two symbols");
}

const char* to_string(Stream s) { return s == Stream::action ? "action" : "observation"; }

// ---------------------------------------------------------------------------
// History

History History::parse(std::string_view digits) {
  std::vector<Symbol> out;
  out.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("history digits must be 0-9");
    out.push_back(c - '0');
  }
  return History(std::move(out));
}

History History::append(Symbol x) const {
  std::vector<Symbol> out;
  out.reserve(symbols_.size() + 1);
  out = symbols_;
  out.push_back(x);
  return History(std::move(out));
}

History History::concat(std::span<const Symbol> tail) const {
  std::vector<Symbol> out = symbols_;
  out.insert(out.end(), tail.begin(), tail.end());
  return History(std::move(out));
}

History History::prefix(std::size_t n) const {
  if (n > symbols_.size()) throw std::out_of_range("prefix longer than history");
  return History(std::vector<Symbol>(symbols_.begin(), symbols_.begin() + n));
}

History History::suffix(std::size_t from) const {
  if (from > symbols_.size()) throw std::out_of_range("suffix start beyond history");
  return History(std::vector<Symbol>(symbols_.begin() + from, symbols_.end()));
}

bool History::valid_for(const Alphabet& alphabet) const {
  for (Symbol x : symbols_)
    if (!alphabet.contains(x)) return false;
  return true;
}

std::string History::str() const {
  std::string out;
  for (Symbol x : symbols_) {
    if (x < 10)
      out.push_back(static_cast<char>('0' + x));
    else
      out += "(" + std::to_string(x) + ")";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SemiDistribution

std::vector<double> SemiDistribution::conditionals_along(const History& h) const {
  std::vector<double> out;
  out.reserve(h.size());
  std::vector<Symbol> prefix;
  prefix.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    out.push_back(predict(History(prefix))[h[i]]);
    prefix.push_back(h[i]);
  }
  return out;
}

double SemiDistribution::prob(const History& context, Symbol x) const {
  if (x < 0 || x >= alphabet_size()) throw std::out_of_range("symbol outside alphabet");
  return predict(context)[x];
}

double mass(const Distribution& d) { return std::accumulate(d.begin(), d.end(), 0.0); }

void check_semi_distribution(const Distribution& d, int alphabet_size) {
  if (static_cast<int>(d.size()) != alphabet_size)
    throw std::domain_error("distribution size does not match alphabet");
  for (double p : d)
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability outside [0,1]");
  if (mass(d) > 1.0 + kMassTolerance) throw std::domain_error("mass exceeds one");
}

double log_joint_probability(const SemiDistribution& d, const History& h) {
  double acc = 0.0;
  for (double p : d.conditionals_along(h)) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(p);
  }
  return acc;
}

double joint_probability(const SemiDistribution& d, const History& h) {
  if (h.size() > 32) return std::exp(log_joint_probability(d, h));
  double acc = 1.0;
  for (double p : d.conditionals_along(h)) acc *= p;
  return acc;
}

// ---------------------------------------------------------------------------
// Concrete predictors

UniformPredictor::UniformPredictor(int alphabet_size) : size_(Alphabet(alphabet_size).size()) {}

Distribution UniformPredictor::predict(const History&) const {
  return Distribution(size_, 1.0 / size_);
}

StationaryPredictor::StationaryPredictor(Distribution action_row, Distribution observation_row)
    : action_(std::move(action_row)), observation_(std::move(observation_row)) {
  const int n = Alphabet(static_cast<int>(action_.size())).size();
  check_semi_distribution(action_, n);
  check_semi_distribution(observation_, n);
}

Distribution StationaryPredictor::predict(const History& context) const {
  return context.next_stream() == Stream::action ? action_ : observation_;
}

namespace {

std::string row_str(const Distribution& d) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
  os << ")";
  return os.str();
}

}  // namespace

std::string StationaryPredictor::describe() const {
  return "stationary a" + row_str(action_) + " o" + row_str(observation_);
}

TabularPredictor::TabularPredictor(int alphabet_size, int order,
                                   std::vector<Distribution> action_rows,
                                   std::vector<Distribution> observation_rows)
    : size_(Alphabet(alphabet_size).size()),
      order_(order),
      action_(std::move(action_rows)),
      observation_(std::move(observation_rows)) {
  if (order < 0) throw std::invalid_argument("negative table order");
  std::size_t rows = 1;
  for (int i = 0; i < order; ++i) rows *= static_cast<std::size_t>(size_);
  if (action_.size() != rows || observation_.size() != rows)
    throw std::invalid_argument("table needs |X|^order rows per stream");
  for (const auto& r : action_) check_semi_distribution(r, size_);
  for (const auto& r : observation_) check_semi_distribution(r, size_);
}

std::size_t TabularPredictor::row_index(std::span<const Symbol> context) const {
  std::size_t idx = 0;
  const auto n = static_cast<std::ptrdiff_t>(context.size());
  for (int k = order_; k >= 1; --k) {
    const std::ptrdiff_t pos = n - k;
    const Symbol x = pos >= 0 ? context[pos] : 0;
    idx = idx * size_ + static_cast<std::size_t>(x);
  }
  return idx;
}

Distribution TabularPredictor::predict(const History& context) const {
  return rows(context.next_stream())[row_index(context.symbols())];
}

std::vector<double> TabularPredictor::conditionals_along(const History& h) const {
  std::vector<double> out(h.size());
  const auto all = h.symbols();
  for (std::size_t i = 0; i < h.size(); ++i)
    out[i] = rows(stream_at(i))[row_index(all.first(i))][h[i]];
  return out;
}

std::string TabularPredictor::describe() const {
  std::ostringstream os;
  os << "tabular order " << order_ << " a[";
  for (const auto& r : action_) os << row_str(r);
  os << "] o[";
  for (const auto& r : observation_) os << row_str(r);
  os << "]";
  return os.str();
}

FiniteStatePredictor::FiniteStatePredictor(int alphabet_size, int num_states,
                                           std::vector<int> transitions,
                                           std::vector<Distribution> action_rows,
                                           std::vector<Distribution> observation_rows)
    : size_(Alphabet(alphabet_size).size()),
      states_(num_states),
      transitions_(std::move(transitions)),
      action_(std::move(action_rows)),
      observation_(std::move(observation_rows)) {
  if (num_states < 1) throw std::invalid_argument("automaton needs a state");
  if (transitions_.size() != static_cast<std::size_t>(num_states * size_))
    throw std::invalid_argument("transition table needs states*|X| entries");
  for (int s : transitions_)
    if (s < 0 || s >= num_states) throw std::invalid_argument("transition to unknown state");
  if (action_.size() != static_cast<std::size_t>(num_states) ||
      observation_.size() != static_cast<std::size_t>(num_states))
    throw std::invalid_argument("automaton needs one row per state and stream");
  for (const auto& r : action_) check_semi_distribution(r, size_);
  for (const auto& r : observation_) check_semi_distribution(r, size_);
}

int FiniteStatePredictor::run(std::span<const Symbol> symbols) const {
  int s = 0;
  for (Symbol x : symbols) s = next_state(s, x);
  return s;
}

Distribution FiniteStatePredictor::predict(const History& context) const {
  return rows(context.next_stream())[run(context.symbols())];
}

std::vector<double> FiniteStatePredictor::conditionals_along(const History& h) const {
  std::vector<double> out(h.size());
  int s = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    out[i] = rows(stream_at(i))[s][h[i]];
    s = next_state(s, h[i]);
  }
  return out;
}

std::string FiniteStatePredictor::describe() const {
  std::ostringstream os;
  os << "automaton " << states_ << " states";
  return os.str();
}

FunctionPredictor::FunctionPredictor(int alphabet_size, Fn fn, std::string name)
    : size_(Alphabet(alphabet_size).size()), fn_(std::move(fn)), name_(std::move(name)) {}

Distribution FunctionPredictor::predict(const History& context) const {
  Distribution d = fn_(context);
  check_semi_distribution(d, size_);
  return d;
}

// ---------------------------------------------------------------------------
// Utility functions

UtilityFunction::UtilityFunction(int horizon, Fn fn, std::string name)
    : horizon_(horizon), fn_(std::move(fn)), name_(std::move(name)) {
  if (horizon < 1) throw std::invalid_argument("utility horizon must be positive");
}

namespace {

UtilityFunction reward_sum(int horizon, std::vector<double> reward, std::size_t offset,
                           std::string name) {
  for (double r : reward)
    if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("rewards must lie in [0,1]");
  return UtilityFunction(
      horizon,
      [horizon, reward = std::move(reward), offset](const History& h) {
        double total = 0.0;
        for (std::size_t i = offset; i < h.size(); i += 2) total += reward.at(h[i]);
        return total / horizon;
      },
      std::move(name));
}

}  // namespace

UtilityFunction UtilityFunction::observation_reward_sum(int horizon, std::vector<double> reward) {
  return reward_sum(horizon, std::move(reward), 1, "observation reward sum");
}

UtilityFunction UtilityFunction::action_reward_sum(int horizon, std::vector<double> reward) {
  return reward_sum(horizon, std::move(reward), 0, "action reward sum");
}

double UtilityFunction::operator()(const History& h) const {
  if (h.size() != static_cast<std::size_t>(2 * horizon_))
    throw std::invalid_argument("utility evaluated on a history of the wrong length");
  const double u = fn_(h);
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("utility outside [0,1]");
  return u;
}

// ---------------------------------------------------------------------------
// Events

Event::Event(Predicate predicate, int description_length_bits, std::string name)
    : predicate_(std::move(predicate)), bits_(description_length_bits), name_(std::move(name)) {
  if (bits_ < 0) throw std::invalid_argument("negative description length");
}

Event Event::never() {
  return Event([](std::span<const Symbol>) { return false; }, 0, "never");
}

Event Event::always() {
  return Event([](std::span<const Symbol>) { return true; }, 0, "always");
}

bool Event::happens_at(const History& h, int t) const {
  if (t < 1 || static_cast<std::size_t>(2 * t - 2) > h.size())
    throw std::out_of_range("timestep outside the available history");
  return predicate_(h.symbols().first(static_cast<std::size_t>(2 * t - 2)));
}

bool Event::has_happened_by(const History& h, int t) const {
  if (t < 0 || static_cast<std::size_t>(std::max(0, 2 * t - 2)) > h.size())
    throw std::out_of_range("timestep outside the available history");
  for (int k = 1; k <= t; ++k)
    if (happens_at(h, k)) return true;
  return false;
}

bool Event::unprecedented_at(const History& h, int t) const {
  if (t < 1 || static_cast<std::size_t>(2 * t - 2) > h.size())
    throw std::out_of_range("timestep outside the available history");
  return !has_happened_by(h, t - 1);
}

std::optional<std::size_t> Event::first_happening(std::span<const Symbol> symbols) const {
  for (std::size_t n = 0; n <= symbols.size(); n += 2)
    if (predicate_(symbols.first(n))) return n;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SwitchPredictor

SwitchPredictor::SwitchPredictor(SemiDistributionPtr base, EventPtr trigger,
                                 SemiDistributionPtr post)
    : base_(std::move(base)), trigger_(std::move(trigger)), post_(std::move(post)) {
  if (!base_ || !trigger_ || !post_) throw std::invalid_argument("switch needs all parts");
  if (base_->alphabet_size() != post_->alphabet_size())
    throw std::invalid_argument("switch parts disagree on the alphabet");
}

Distribution SwitchPredictor::predict(const History& context) const {
  if (context.next_stream() == Stream::action) {
    if (auto at = trigger_->first_happening(context.symbols()))
      return post_->predict(context.suffix(*at));
  }
  return base_->predict(context);
}

std::vector<double> SwitchPredictor::conditionals_along(const History& h) const {
  std::vector<double> out = base_->conditionals_along(h);
  if (auto at = trigger_->first_happening(h.symbols())) {
    const History tail = h.suffix(*at);
    const std::vector<double> post = post_->conditionals_along(tail);
    // *at is even, so tail positions keep their stream parity.
    for (std::size_t i = 0; i < tail.size(); i += 2) out[*at + i] = post[i];
  }
  return out;
}

std::string SwitchPredictor::describe() const {
  return "switch(" + base_->describe() + " | " + trigger_->name() + " -> " + post_->describe() +
         ")";
}

}  // namespace kllab

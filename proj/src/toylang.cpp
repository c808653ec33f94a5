#include "kllab/toylang.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace kllab::toylang {

namespace {

struct NeedMore {};

int bit_length(std::uint64_t v) { return v == 0 ? 0 : 64 - std::countl_zero(v); }

int ceil_log2(std::uint64_t n) { return n <= 1 ? 0 : bit_length(n - 1); }

class Writer {
 public:
  void bit(int b) { out_.push_back(b ? '1' : '0'); }
  void bits(std::uint64_t value, int n) {
    for (int i = n - 1; i >= 0; --i) bit(static_cast<int>((value >> i) & 1u));
  }
  void tag(std::string_view t) { out_.append(t); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  int bit() {
    if (pos_ >= in_.size()) throw NeedMore{};
    const char c = in_[pos_++];
    if (c != '0' && c != '1') throw DecodeError("bit strings may only contain 0 and 1");
    return c == '1';
  }
  std::uint64_t bits(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | static_cast<std::uint64_t>(bit());
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

// Truncated unary over n values: v ones then a zero, except v = n-1.
void write_tu(Writer& w, int v, int n) {
  for (int i = 0; i < v; ++i) w.bit(1);
  if (v < n - 1) w.bit(0);
}

int read_tu(Reader& r, int n) {
  int v = 0;
  while (v < n - 1 && r.bit() == 1) ++v;
  return v;
}

int tu_length(int v, int n) { return v < n - 1 ? v + 1 : n - 1; }

// Truncated binary over n values.
void write_tb(Writer& w, std::uint64_t v, std::uint64_t n) {
  const int u = ceil_log2(n);
  const std::uint64_t k = (std::uint64_t{1} << u) - n;
  if (v < k)
    w.bits(v, u - 1);
  else
    w.bits(v + k, u);
}

std::uint64_t read_tb(Reader& r, std::uint64_t n) {
  const int u = ceil_log2(n);
  if (u == 0) return 0;
  const std::uint64_t k = (std::uint64_t{1} << u) - n;
  std::uint64_t x = r.bits(u - 1);
  if (x < k) return x;
  x = (x << 1) | static_cast<std::uint64_t>(r.bit());
  return x - k;
}

// Bounded Elias gamma: bit length in truncated unary, then the bits below the
// leading one. Covers [0, 2^b).
void write_gamma(Writer& w, std::uint64_t v, int b) {
  const int c = bit_length(v);
  write_tu(w, c, b + 1);
  if (c >= 2) w.bits(v, c - 1);
}

std::uint64_t read_gamma(Reader& r, int b) {
  const int c = read_tu(r, b + 1);
  if (c == 0) return 0;
  if (c == 1) return 1;
  return (std::uint64_t{1} << (c - 1)) | r.bits(c - 1);
}

int gamma_length(std::uint64_t v, int b) {
  const int c = bit_length(v);
  return tu_length(c, b + 1) + std::max(c - 1, 0);
}

std::size_t literal_length(std::uint64_t v) {
  const int n = bit_length(v);
  return 1 + static_cast<std::size_t>(gamma_length(static_cast<std::uint64_t>(n),
                                                   kLiteralClassBits) +
                                      std::max(n - 1, 0));
}

std::size_t power_length(int exponent) {
  return 1 + static_cast<std::size_t>(gamma_length(static_cast<std::uint64_t>(exponent),
                                                   kExponentBits));
}

constexpr std::uint64_t kLiteralLimit = std::uint64_t{1} << ((1 << kLiteralClassBits) - 1);

IntegerCode shortest_integer(std::uint64_t value) {
  const bool literal_ok = value < kLiteralLimit;
  const bool power_ok = std::popcount(value) == 1;
  if (!literal_ok && !power_ok) throw EncodingError("integer not representable");
  if (!power_ok) return IntegerCode{value, false};
  if (!literal_ok) return IntegerCode{value, true};
  return power_length(std::countr_zero(value)) < literal_length(value) ? IntegerCode{value, true}
                                                                         : IntegerCode{value, false};
}

std::size_t int_pow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// ---------------------------------------------------------------------------
// Length-weight polynomials: W[l] = sum of 2^-l over codewords of length l.

using Weights = std::vector<double>;

Weights convolve(const Weights& a, const Weights& b) {
  Weights out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Weights power(const Weights& a, std::size_t n) {
  Weights result{1.0};
  Weights base = a;
  while (n > 0) {
    if (n & 1u) result = convolve(result, base);
    n >>= 1u;
    if (n > 0) base = convolve(base, base);
  }
  return result;
}

// Prepends a fixed tag of `bits` bits.
Weights tagged(const Weights& a, int bits) {
  Weights out(a.size() + static_cast<std::size_t>(bits), 0.0);
  const double scale = std::ldexp(1.0, -bits);
  for (std::size_t i = 0; i < a.size(); ++i) out[i + static_cast<std::size_t>(bits)] = a[i] * scale;
  return out;
}

void accumulate(Weights& into, const Weights& a) {
  if (into.size() < a.size()) into.resize(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) into[i] += a[i];
}

Weights single(std::size_t length, double weight) {
  Weights w(length + 1, 0.0);
  w[length] = weight;
  return w;
}

Weights tb_weights(std::uint64_t n) {
  const int u = ceil_log2(n);
  if (u == 0) return {1.0};
  const std::uint64_t k = (std::uint64_t{1} << u) - n;
  Weights w(static_cast<std::size_t>(u) + 1, 0.0);
  w[u - 1] += static_cast<double>(k) * std::ldexp(1.0, -(u - 1));
  w[u] += static_cast<double>(n - k) * std::ldexp(1.0, -u);
  return w;
}

Weights gamma_weights(int b) {
  Weights w;
  for (int c = 0; c <= b; ++c) {
    // 2^(c-1) codewords share each class; their total weight is 2^-tu.
    const int tu = tu_length(c, b + 1);
    accumulate(w, single(static_cast<std::size_t>(tu + std::max(c - 1, 0)), std::ldexp(1.0, -tu)));
  }
  return w;
}

Weights integer_weights() {
  Weights literal;
  const int classes = (1 << kLiteralClassBits) - 1;
  for (int n = 0; n <= classes; ++n) {
    // One gamma codeword for n, then n-1 free value bits.
    const int g = gamma_length(static_cast<std::uint64_t>(n), kLiteralClassBits);
    accumulate(literal, single(static_cast<std::size_t>(g + std::max(n - 1, 0)), std::ldexp(1.0, -g)));
  }
  Weights out = tagged(literal, 1);
  accumulate(out, tagged(gamma_weights(kExponentBits), 1));
  return out;
}

Weights dist_weights(int alphabet) {
  Weights out = tagged(tb_weights(static_cast<std::uint64_t>(alphabet)), 1);
  accumulate(out, single(2, 0.25));
  accumulate(out, single(static_cast<std::size_t>(2 + kCountBits * (alphabet + 1)), 0.25));
  return out;
}

Weights table_weights(int alphabet, const Weights& dist) {
  Weights out;
  for (int order = 0; order <= kMaxTableOrder; ++order) {
    const Weights rows = power(dist, 2 * int_pow(static_cast<std::size_t>(alphabet), order));
    accumulate(out, tagged(rows, tu_length(order, kMaxTableOrder + 1)));
  }
  return out;
}

Weights automaton_weights(int alphabet, const Weights& dist) {
  Weights out;
  Weights rows{1.0};
  const Weights dist2 = convolve(dist, dist);
  for (int n = 1; n <= kMaxAutomatonStates; ++n) {
    rows = convolve(rows, dist2);
    const Weights trans = power(tb_weights(static_cast<std::uint64_t>(n)),
                                static_cast<std::size_t>(n * alphabet));
    const int g = gamma_length(static_cast<std::uint64_t>(n - 1), 6);
    Weights body = convolve(trans, rows);
    accumulate(out, tagged(body, g));
  }
  return out;
}

Weights event_weights(int alphabet, const Weights& integer) {
  Weights out = single(3, 0.125);
  accumulate(out, single(3, 0.125));
  accumulate(out, tagged(integer, 2));
  accumulate(out, tagged(integer, 3));
  const Weights sym = tb_weights(static_cast<std::uint64_t>(alphabet));
  for (int i = 0; i < 3; ++i) accumulate(out, tagged(sym, 3));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

EventCode EventCode::at_timestep(std::uint64_t t) {
  EventCode e;
  e.kind = Kind::at_timestep;
  e.number = shortest_integer(t);
  return e;
}

ObjectKind kind_of(const Program& p) {
  if (const auto* pred = std::get_if<PredictorCode>(&p))
    return pred->wrapper ? ObjectKind::wrapper : ObjectKind::predictor;
  if (std::holds_alternative<EventCode>(p)) return ObjectKind::event;
  if (std::holds_alternative<IntegerCode>(p)) return ObjectKind::integer;
  return ObjectKind::predictor;
}

const char* to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::predictor: return "predictor";
    case ObjectKind::event: return "event";
    case ObjectKind::integer: return "integer";
    case ObjectKind::wrapper: return "wrapper";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Codec

namespace {

class Codec {
 public:
  explicit Codec(int alphabet) : a_(alphabet) {}

  void write_integer(Writer& w, const IntegerCode& c) const {
    if (c.power_form) {
      if (std::popcount(c.value) != 1) throw EncodingError("power form needs a power of two");
      w.bit(1);
      write_gamma(w, static_cast<std::uint64_t>(std::countr_zero(c.value)), kExponentBits);
      return;
    }
    if (c.value >= kLiteralLimit) throw EncodingError("integer too large for the literal form");
    w.bit(0);
    const int n = bit_length(c.value);
    write_gamma(w, static_cast<std::uint64_t>(n), kLiteralClassBits);
    if (n >= 2) w.bits(c.value, n - 1);
  }

  IntegerCode read_integer(Reader& r) const {
    if (r.bit() == 1) {
      const auto k = read_gamma(r, kExponentBits);
      return IntegerCode{std::uint64_t{1} << k, true};
    }
    const auto n = static_cast<int>(read_gamma(r, kLiteralClassBits));
    if (n == 0) return IntegerCode{0, false};
    if (n == 1) return IntegerCode{1, false};
    return IntegerCode{(std::uint64_t{1} << (n - 1)) | r.bits(n - 1), false};
  }

  void write_symbol(Writer& w, Symbol s) const {
    if (s < 0 || s >= a_) throw EncodingError("symbol outside alphabet");
    write_tb(w, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(a_));
  }

  Symbol read_symbol(Reader& r) const {
    return static_cast<Symbol>(read_tb(r, static_cast<std::uint64_t>(a_)));
  }

  void write_dist(Writer& w, const DistCode& d) const {
    switch (d.kind) {
      case DistCode::Kind::point:
        w.bit(0);
        write_symbol(w, d.symbol);
        return;
      case DistCode::Kind::uniform:
        w.tag("10");
        return;
      case DistCode::Kind::counts:
        if (d.counts.size() != static_cast<std::size_t>(a_ + 1))
          throw EncodingError("counts need |X|+1 entries");
        w.tag("11");
        for (int c : d.counts) {
          if (c < 0 || c >= (1 << kCountBits)) throw EncodingError("count out of range");
          w.bits(static_cast<std::uint64_t>(c), kCountBits);
        }
        return;
    }
  }

  DistCode read_dist(Reader& r) const {
    DistCode d;
    if (r.bit() == 0) {
      d.kind = DistCode::Kind::point;
      d.symbol = read_symbol(r);
      return d;
    }
    if (r.bit() == 0) {
      d.kind = DistCode::Kind::uniform;
      return d;
    }
    d.kind = DistCode::Kind::counts;
    for (int i = 0; i <= a_; ++i) d.counts.push_back(static_cast<int>(r.bits(kCountBits)));
    return d;
  }

  void write_rows(Writer& w, const std::vector<DistCode>& rows, std::size_t expected) const {
    if (rows.size() != expected) throw EncodingError("wrong number of rows");
    for (const auto& d : rows) write_dist(w, d);
  }

  std::vector<DistCode> read_rows(Reader& r, std::size_t n) const {
    std::vector<DistCode> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(read_dist(r));
    return rows;
  }

  void write_basic(Writer& w, const BasicPredictorCode& b) const {
    if (const auto* t = std::get_if<TableCode>(&b)) {
      if (t->order < 0 || t->order > kMaxTableOrder) throw EncodingError("table order too large");
      w.tag("00");
      write_tu(w, t->order, kMaxTableOrder + 1);
      const std::size_t n = int_pow(static_cast<std::size_t>(a_), t->order);
      write_rows(w, t->action_rows, n);
      write_rows(w, t->observation_rows, n);
    } else if (const auto* f = std::get_if<AutomatonCode>(&b)) {
      if (f->num_states < 1 || f->num_states > kMaxAutomatonStates)
        throw EncodingError("too many automaton states");
      const auto n = static_cast<std::size_t>(f->num_states);
      w.tag("01");
      write_gamma(w, n - 1, 6);
      if (f->transitions.size() != n * static_cast<std::size_t>(a_))
        throw EncodingError("wrong transition table size");
      for (int s : f->transitions) {
        if (s < 0 || static_cast<std::size_t>(s) >= n) throw EncodingError("bad transition");
        write_tb(w, static_cast<std::uint64_t>(s), n);
      }
      write_rows(w, f->action_rows, n);
      write_rows(w, f->observation_rows, n);
    } else {
      w.bit(1);
    }
  }

  BasicPredictorCode read_basic(Reader& r) const {
    if (r.bit() == 1) return UniformCode{};
    if (r.bit() == 0) {
      TableCode t;
      t.order = read_tu(r, kMaxTableOrder + 1);
      const std::size_t n = int_pow(static_cast<std::size_t>(a_), t.order);
      t.action_rows = read_rows(r, n);
      t.observation_rows = read_rows(r, n);
      return t;
    }
    AutomatonCode f;
    f.num_states = static_cast<int>(read_gamma(r, 6)) + 1;
    const auto n = static_cast<std::size_t>(f.num_states);
    for (std::size_t i = 0; i < n * static_cast<std::size_t>(a_); ++i)
      f.transitions.push_back(static_cast<int>(read_tb(r, n)));
    f.action_rows = read_rows(r, n);
    f.observation_rows = read_rows(r, n);
    return f;
  }

  void write_event(Writer& w, const EventCode& e) const {
    using K = EventCode::Kind;
    switch (e.kind) {
      case K::never: w.tag("000"); return;
      case K::always: w.tag("001"); return;
      case K::at_timestep: w.tag("01"); write_integer(w, e.number); return;
      case K::length_at_least: w.tag("100"); write_integer(w, e.number); return;
      case K::observation_seen: w.tag("101"); write_symbol(w, e.symbol); return;
      case K::action_seen: w.tag("110"); write_symbol(w, e.symbol); return;
      case K::last_observation_is: w.tag("111"); write_symbol(w, e.symbol); return;
    }
  }

  EventCode read_event(Reader& r) const {
    using K = EventCode::Kind;
    EventCode e;
    if (r.bit() == 0) {
      if (r.bit() == 1) {
        e.kind = K::at_timestep;
        e.number = read_integer(r);
      } else {
        e.kind = r.bit() == 0 ? K::never : K::always;
      }
      return e;
    }
    const int b1 = r.bit();
    const int b2 = r.bit();
    if (b1 == 0 && b2 == 0) {
      e.kind = K::length_at_least;
      e.number = read_integer(r);
      return e;
    }
    e.kind = b1 == 0 ? K::observation_seen : (b2 == 0 ? K::action_seen : K::last_observation_is);
    e.symbol = read_symbol(r);
    return e;
  }

  void write_predictor(Writer& w, const PredictorCode& p) const {
    if (!p.wrapper) {
      w.bit(0);
      write_basic(w, p.base);
      return;
    }
    w.bit(1);
    write_basic(w, p.base);
    write_event(w, p.wrapper->trigger);
    write_basic(w, p.wrapper->post);
  }

  PredictorCode read_predictor(Reader& r) const {
    PredictorCode p;
    const bool wrapped = r.bit() == 1;
    p.base = read_basic(r);
    if (wrapped) {
      SwitchTail tail;
      tail.trigger = read_event(r);
      tail.post = read_basic(r);
      p.wrapper = std::move(tail);
    }
    return p;
  }

  void write_program(Writer& w, const Program& p) const {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, PredictorCode>) {
            w.bit(0);
            write_predictor(w, v);
          } else if constexpr (std::is_same_v<T, EventCode>) {
            w.tag("10");
            write_event(w, v);
          } else if constexpr (std::is_same_v<T, IntegerCode>) {
            w.tag("110");
            write_integer(w, v);
          } else {
            w.tag("111");
          }
        },
        p);
  }

  Program read_program(Reader& r) const {
    if (r.bit() == 0) return read_predictor(r);
    if (r.bit() == 0) return read_event(r);
    if (r.bit() == 0) return read_integer(r);
    return CatchAll{};
  }

 private:
  int a_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Language

Language::Language(int alphabet_size) : size_(Alphabet(alphabet_size).size()) {
  const Weights dist = dist_weights(size_);
  Weights basic = tagged(table_weights(size_, dist), 2);
  accumulate(basic, tagged(automaton_weights(size_, dist), 2));
  accumulate(basic, single(1, 0.5));
  const Weights integer = integer_weights();
  const Weights event = event_weights(size_, integer);
  Weights pred = tagged(basic, 1);
  accumulate(pred, tagged(convolve(convolve(basic, event), basic), 1));

  weights_ = tagged(pred, 1);
  accumulate(weights_, tagged(event, 2));
  accumulate(weights_, tagged(integer, 3));
  accumulate(weights_, single(3, 0.125));
  while (weights_.size() > 1 && weights_.back() == 0.0) weights_.pop_back();
}

std::string Language::encode(const Program& p) const {
  Writer w;
  Codec(size_).write_program(w, p);
  return w.take();
}

Program Language::decode(std::string_view bits) const {
  Reader r(bits);
  try {
    Program p = Codec(size_).read_program(r);
    if (r.pos() != bits.size()) throw DecodeError("trailing bits after a complete program");
    return p;
  } catch (const NeedMore&) {
    throw DecodeError("bit string ends inside a program");
  }
}

std::optional<std::size_t> Language::parse_length(std::string_view bits) const {
  Reader r(bits);
  try {
    (void)Codec(size_).read_program(r);
    return r.pos();
  } catch (const NeedMore&) {
    return std::nullopt;
  }
}

IntegerCode Language::canonical_integer(std::uint64_t value) const {
  return shortest_integer(value);
}

std::size_t Language::integer_length(std::uint64_t value) const {
  return codeword_length(canonical_integer(value));
}

std::size_t Language::timestep_event_length(std::uint64_t t) const {
  return codeword_length(EventCode::at_timestep(t));
}

std::size_t Language::wrapper_overhead(const EventCode& trigger,
                                       const BasicPredictorCode& post) const {
  Writer w;
  Codec c(size_);
  c.write_event(w, trigger);
  c.write_basic(w, post);
  return w.take().size();
}

double Language::kraft_sum(int depth) const {
  if (depth <= 0) return 0.0;
  double s = 0.0;
  const std::size_t last = std::min(static_cast<std::size_t>(depth), weights_.size() - 1);
  for (std::size_t l = 0; l <= last; ++l) s += weights_[l];
  return s;
}

Distribution Language::instantiate(const DistCode& code) const {
  Distribution d(static_cast<std::size_t>(size_), 0.0);
  switch (code.kind) {
    case DistCode::Kind::point:
      d.at(static_cast<std::size_t>(code.symbol)) = 1.0;
      break;
    case DistCode::Kind::uniform:
      std::fill(d.begin(), d.end(), 1.0 / size_);
      break;
    case DistCode::Kind::counts: {
      int total = 0;
      for (int c : code.counts) total += c;
      if (total > 0)
        for (int x = 0; x < size_; ++x) d[x] = static_cast<double>(code.counts[x]) / total;
      break;
    }
  }
  return d;
}

namespace {

std::vector<Distribution> rows_of(const Language& lang, const std::vector<DistCode>& rows) {
  std::vector<Distribution> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(lang.instantiate(r));
  return out;
}

}  // namespace

SemiDistributionPtr Language::instantiate(const BasicPredictorCode& code) const {
  if (const auto* t = std::get_if<TableCode>(&code))
    return std::make_shared<TabularPredictor>(size_, t->order, rows_of(*this, t->action_rows),
                                              rows_of(*this, t->observation_rows));
  if (const auto* f = std::get_if<AutomatonCode>(&code))
    return std::make_shared<FiniteStatePredictor>(size_, f->num_states, f->transitions,
                                                  rows_of(*this, f->action_rows),
                                                  rows_of(*this, f->observation_rows));
  return std::make_shared<UniformPredictor>(size_);
}

SemiDistributionPtr Language::instantiate(const PredictorCode& code) const {
  auto base = instantiate(code.base);
  if (!code.wrapper) return base;
  auto trigger = std::make_shared<const Event>(instantiate(code.wrapper->trigger));
  return std::make_shared<SwitchPredictor>(std::move(base), std::move(trigger),
                                           instantiate(code.wrapper->post));
}

SemiDistributionPtr Language::instantiate_program(const Program& p) const {
  if (const auto* pred = std::get_if<PredictorCode>(&p)) return instantiate(*pred);
  if (std::holds_alternative<CatchAll>(p)) return std::make_shared<UniformPredictor>(size_);
  throw DecodeError("program does not describe a predictor");
}

Event Language::instantiate(const EventCode& code) const {
  using K = EventCode::Kind;
  const int bits = static_cast<int>(codeword_length(code));
  const std::uint64_t n = code.number.value;
  const Symbol s = code.symbol;
  if (s < 0 || s >= size_) throw EncodingError("event symbol outside alphabet");
  switch (code.kind) {
    case K::never:
      return Event([](std::span<const Symbol>) { return false; }, bits, "never");
    case K::always:
      return Event([](std::span<const Symbol>) { return true; }, bits, "always");
    case K::at_timestep:
      return Event(
          [n](std::span<const Symbol> h) { return n >= 1 && h.size() == 2 * n - 2; }, bits,
          "at-timestep(" + std::to_string(n) + ")");
    case K::length_at_least:
      return Event([n](std::span<const Symbol> h) { return h.size() >= n; }, bits,
                   "length-at-least(" + std::to_string(n) + ")");
    case K::observation_seen:
      return Event(
          [s](std::span<const Symbol> h) {
            for (std::size_t i = 1; i < h.size(); i += 2)
              if (h[i] == s) return true;
            return false;
          },
          bits, "observation-seen(" + std::to_string(s) + ")");
    case K::action_seen:
      return Event(
          [s](std::span<const Symbol> h) {
            for (std::size_t i = 0; i < h.size(); i += 2)
              if (h[i] == s) return true;
            return false;
          },
          bits, "action-seen(" + std::to_string(s) + ")");
    case K::last_observation_is:
      return Event(
          [s](std::span<const Symbol> h) { return h.size() >= 2 && h[h.size() - 1] == s; },
          bits, "last-observation-is(" + std::to_string(s) + ")");
  }
  throw EncodingError("unknown event kind");
}

std::optional<DistCode> Language::encode_distribution(const Distribution& d) const {
  if (static_cast<int>(d.size()) != size_) return std::nullopt;
  constexpr double tol = 1e-12;
  // Point masses and the uniform row are never longer than the count form.
  for (int s = 0; s < size_; ++s) {
    bool point = true;
    for (int x = 0; x < size_; ++x)
      point = point && std::abs(d[x] - (x == s ? 1.0 : 0.0)) <= tol;
    if (point) return DistCode{DistCode::Kind::point, s, {}};
  }
  bool uniform = true;
  for (double p : d) uniform = uniform && std::abs(p - 1.0 / size_) <= tol;
  if (uniform) return DistCode{DistCode::Kind::uniform, 0, {}};

  const double halt = 1.0 - mass(d);
  if (halt < -tol) return std::nullopt;
  const int cmax = (1 << kCountBits) - 1;
  if (halt >= 1.0 - tol)
    return DistCode{DistCode::Kind::counts, 0, std::vector<int>(static_cast<std::size_t>(size_ + 1), 0)};
  for (int total = 1; total <= cmax * (size_ + 1); ++total) {
    std::vector<int> counts;
    bool ok = true;
    int used = 0;
    for (int x = 0; x <= size_ && ok; ++x) {
      const double p = x < size_ ? d[x] : halt;
      const int c = static_cast<int>(std::lround(p * total));
      ok = c >= 0 && c <= cmax && std::abs(static_cast<double>(c) / total - p) <= tol;
      counts.push_back(c);
      used += c;
    }
    if (ok && used == total) return DistCode{DistCode::Kind::counts, 0, std::move(counts)};
  }
  return std::nullopt;
}

namespace {

std::vector<DistCode> encode_rows(const Language& lang, const std::vector<Distribution>& rows) {
  std::vector<DistCode> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    auto code = lang.encode_distribution(r);
    if (!code) throw EncodingError("row is not representable by a DIST code");
    out.push_back(std::move(*code));
  }
  return out;
}

}  // namespace

BasicPredictorCode Language::encode_predictor(const SemiDistribution& model) const {
  if (model.alphabet_size() != size_) throw EncodingError("alphabet mismatch");
  if (dynamic_cast<const UniformPredictor*>(&model)) return UniformCode{};
  if (const auto* s = dynamic_cast<const StationaryPredictor*>(&model)) {
    TableCode t;
    t.order = 0;
    t.action_rows = encode_rows(*this, {s->row(Stream::action)});
    t.observation_rows = encode_rows(*this, {s->row(Stream::observation)});
    return t;
  }
  if (const auto* tab = dynamic_cast<const TabularPredictor*>(&model)) {
    if (tab->order() > kMaxTableOrder) throw EncodingError("table order too large");
    TableCode t;
    t.order = tab->order();
    t.action_rows = encode_rows(*this, tab->rows(Stream::action));
    t.observation_rows = encode_rows(*this, tab->rows(Stream::observation));
    return t;
  }
  if (const auto* fsm = dynamic_cast<const FiniteStatePredictor*>(&model)) {
    if (fsm->num_states() > kMaxAutomatonStates) throw EncodingError("too many states");
    AutomatonCode f;
    f.num_states = fsm->num_states();
    f.transitions = fsm->transitions();
    f.action_rows = encode_rows(*this, fsm->rows(Stream::action));
    f.observation_rows = encode_rows(*this, fsm->rows(Stream::observation));
    return f;
  }
  throw EncodingError("predictor kind has no encoding: " + model.describe());
}

std::string Language::tag_table() const {
  std::ostringstream os;
  os << "toy language, alphabet size " << size_ << "\n"
     << "max program length " << max_program_length() << " bits\n\n"
     << "PROG\n"
     << "  0    PRED                     predictor program\n"
     << "  10   EVENT                    event template\n"
     << "  110  INT                      integer\n"
     << "  111                           catch-all (uniform predictor)\n"
     << "PRED\n"
     << "  0    BASIC                    plain predictor\n"
     << "  1    BASIC EVENT BASIC        switch wrapper (base, trigger, post)\n"
     << "BASIC\n"
     << "  00   TABLE                    order-k table per stream\n"
     << "  01   AUTOMATON                finite-state predictor\n"
     << "  1                             uniform\n"
     << "TABLE      TU4(order) then 2*|X|^order DIST rows (actions first)\n"
     << "AUTOMATON  GAMMA6(states-1), states*|X| TB(states) transitions,\n"
     << "           then per-state action rows and per-state observation rows\n"
     << "DIST\n"
     << "  0    TB(|X|)                  point mass\n"
     << "  10                            uniform\n"
     << "  11   " << size_ + 1 << " x " << kCountBits
     << "-bit counts        normalized counts, last count is halt mass\n"
     << "EVENT\n"
     << "  000                           never\n"
     << "  001                           always\n"
     << "  01   INT                      at-timestep(T): |h| = 2T-2\n"
     << "  100  INT                      length-at-least(n)\n"
     << "  101  TB(|X|)                  observation-seen(s)\n"
     << "  110  TB(|X|)                  action-seen(s)\n"
     << "  111  TB(|X|)                  last-observation-is(s)\n"
     << "INT\n"
     << "  0    GAMMA5(bitlen) bits      literal, values below 2^31\n"
     << "  1    GAMMA6(k)                power of two 2^k, k <= 63\n"
     << "TU<n>     truncated unary over n values\n"
     << "TB(n)     truncated binary over n values\n"
     << "GAMMA<b>  bit length in TU(b+1), then the bits below the leading one\n";
  return os.str();
}

std::size_t simplest_unprecedented_complexity(const Language& lang, std::uint64_t t,
                                              std::uint64_t t_max) {
  if (t < 1 || t > t_max) throw std::out_of_range("empty timestep range");
  // Literal lengths depend only on the bit length; powers of two may be cheaper.
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (int n = bit_length(t); n <= bit_length(t_max); ++n) {
    const std::uint64_t lo = std::max(t, std::uint64_t{1} << (n - 1));
    if (lo <= t_max) best = std::min(best, lang.timestep_event_length(lo));
  }
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t p = std::uint64_t{1} << k;
    if (p >= t && p <= t_max) best = std::min(best, lang.timestep_event_length(p));
  }
  return best;
}

}  // namespace kllab::toylang

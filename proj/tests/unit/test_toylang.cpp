#include <doctest.h>

#include <bit>
#include <set>

#include "generators.hpp"
#include "kllab/toylang.hpp"
#include "oracles.hpp"

using namespace kllab;
using namespace kllab::toylang;

namespace {

std::string random_bits(std::mt19937_64& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(rng() & 1 ? '1' : '0');
  return s;
}

DistCode random_dist(std::mt19937_64& rng, int a) {
  switch (gen::integer(rng, 0, 2)) {
    case 0: return DistCode{DistCode::Kind::point, gen::integer(rng, 0, a - 1), {}};
    case 1: return DistCode{DistCode::Kind::uniform, 0, {}};
    default: {
      DistCode d{DistCode::Kind::counts, 0, {}};
      for (int i = 0; i <= a; ++i) d.counts.push_back(gen::integer(rng, 0, 7));
      return d;
    }
  }
}

BasicPredictorCode random_basic(std::mt19937_64& rng, int a) {
  switch (gen::integer(rng, 0, 2)) {
    case 0: {
      TableCode t;
      t.order = gen::integer(rng, 0, 2);
      const int rows = static_cast<int>(std::pow(a, t.order));
      for (int r = 0; r < rows; ++r) {
        t.action_rows.push_back(random_dist(rng, a));
        t.observation_rows.push_back(random_dist(rng, a));
      }
      return t;
    }
    case 1: {
      AutomatonCode f;
      f.num_states = gen::integer(rng, 1, 5);
      for (int i = 0; i < f.num_states * a; ++i) f.transitions.push_back(gen::integer(rng, 0, f.num_states - 1));
      for (int s = 0; s < f.num_states; ++s) {
        f.action_rows.push_back(random_dist(rng, a));
        f.observation_rows.push_back(random_dist(rng, a));
      }
      return f;
    }
    default:
      return UniformCode{};
  }
}

IntegerCode random_integer(std::mt19937_64& rng) {
  if (rng() & 1) return IntegerCode{std::uint64_t{1} << gen::integer(rng, 0, 63), true};
  return IntegerCode{rng() >> gen::integer(rng, 33, 63), false};
}

EventCode random_event(std::mt19937_64& rng, int a) {
  EventCode e;
  e.kind = static_cast<EventCode::Kind>(gen::integer(rng, 0, 6));
  if (e.kind == EventCode::Kind::at_timestep || e.kind == EventCode::Kind::length_at_least)
    e.number = random_integer(rng);
  else if (e.kind != EventCode::Kind::never && e.kind != EventCode::Kind::always)
    e.symbol = gen::integer(rng, 0, a - 1);
  return e;
}

Program random_program(std::mt19937_64& rng, int a) {
  switch (gen::integer(rng, 0, 3)) {
    case 0: {
      PredictorCode p{random_basic(rng, a), std::nullopt};
      if (rng() & 1) p.wrapper = SwitchTail{random_event(rng, a), random_basic(rng, a)};
      return p;
    }
    case 1: return random_event(rng, a);
    case 2: return random_integer(rng);
    default: return CatchAll{};
  }
}

}  // namespace

TEST_CASE("Kraft sum is zero at depth zero, monotone, and exactly one at full depth") {
  for (int a : {2, 3, 4}) {
    const Language lang(a);
    CHECK(lang.kraft_sum(0) == 0.0);
    double prev = 0.0;
    for (int d = 1; d <= static_cast<int>(lang.max_program_length()); d += 97) {
      const double k = lang.kraft_sum(d);
      CHECK(k >= prev);
      CHECK(k <= 1.0 + 1e-12);
      prev = k;
    }
    CHECK(std::abs(lang.kraft_sum(static_cast<int>(lang.max_program_length())) - 1.0) <= 1e-12);
  }
  CHECK(Language(2).max_program_length() == 4423);
  CHECK(Language(3).max_program_length() == 5959);
  CHECK(Language(4).max_program_length() == 7495);
}

TEST_CASE("structural length weights match exhaustive parsing") {
  for (int a : {2, 3}) {
    const Language lang(a);
    const std::size_t depth = 14;
    const auto count = oracle::enumerate_programs(lang, depth);
    double total = count.incomplete;
    for (std::size_t l = 0; l <= depth; ++l) {
      CHECK(count.weight_by_length[l] == doctest::Approx(lang.length_weights()[l]).epsilon(1e-15));
      total += count.weight_by_length[l];
    }
    // Completeness: every string is either decided or still open, never dead.
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lang.kraft_sum(static_cast<int>(depth)) == doctest::Approx(1.0 - count.incomplete).epsilon(1e-14));
  }
}

TEST_CASE("no program is a proper prefix of another") {
  const Language lang(2);
  std::vector<std::string> programs;
  std::string s;
  std::function<void()> dfs = [&] {
    if (lang.parse_length(s)) {
      programs.push_back(s);
      return;
    }
    if (s.size() == 13) return;
    for (char c : {'0', '1'}) {
      s.push_back(c);
      dfs();
      s.pop_back();
    }
  };
  dfs();
  REQUIRE(programs.size() > 10);
  std::set<std::string> set(programs.begin(), programs.end());
  for (const auto& p : programs)
    for (std::size_t n = 1; n < p.size(); ++n) CHECK(set.count(p.substr(0, n)) == 0);
}

TEST_CASE("encode/decode round trip on random programs") {
  std::mt19937_64 rng(7);
  for (int a : {2, 3, 4}) {
    const Language lang(a);
    for (int i = 0; i < 300; ++i) {
      const Program p = random_program(rng, a);
      const std::string bits = lang.encode(p);
      CHECK(lang.decode(bits) == p);
      CHECK(lang.parse_length(bits + "0110") == bits.size());
      CHECK(lang.codeword_length(p) == bits.size());
    }
  }
}

TEST_CASE("every random bit stream starts with exactly one program") {
  std::mt19937_64 rng(8);
  for (int a : {2, 3}) {
    const Language lang(a);
    for (int i = 0; i < 200; ++i) {
      const std::string stream = random_bits(rng, lang.max_program_length() + 8);
      const auto n = lang.parse_length(stream);
      REQUIRE(n.has_value());
      const std::string head = stream.substr(0, *n);
      CHECK(lang.encode(lang.decode(head)) == head);
      for (std::size_t k = 1; k < *n; k += std::max<std::size_t>(1, *n / 8))
        CHECK_FALSE(lang.parse_length(stream.substr(0, k)).has_value());
    }
  }
}

TEST_CASE("decode rejects strings that are not exactly one program") {
  const Language lang(2);
  CHECK_THROWS_AS(lang.decode("0"), DecodeError);
  CHECK_THROWS_AS(lang.decode("1110"), DecodeError);
  CHECK(std::holds_alternative<CatchAll>(lang.decode("111")));
  CHECK(kind_of(lang.decode("111")) == ObjectKind::predictor);
  CHECK(kind_of(lang.decode("10000")) == ObjectKind::event);
}

TEST_CASE("integer code lengths, including the power-of-two escape") {
  const Language lang(2);
  CHECK(lang.integer_length(8) == 8);
  CHECK(lang.integer_length(1024) == 12);
  CHECK(lang.integer_length(1000) == 21);
  CHECK(lang.integer_length(1024) < lang.integer_length(1000));
  CHECK(lang.canonical_integer(1024).power_form);
  CHECK_FALSE(lang.canonical_integer(1000).power_form);
  const std::size_t zero = lang.integer_length(0);
  for (std::uint64_t v = 1; v < 5000; ++v) CHECK(lang.integer_length(v) >= zero);
  for (int k = 1; k < 31; ++k) {
    const std::uint64_t p = std::uint64_t{1} << k;
    CHECK(lang.integer_length(p) <= lang.integer_length(p - 1) + 1);
  }
  // Values beyond the literal range still encode through powers of two.
  CHECK(lang.canonical_integer(std::uint64_t{1} << 62).power_form);
  CHECK_THROWS_AS(lang.canonical_integer((std::uint64_t{1} << 62) + 1), EncodingError);
}

TEST_CASE("timestep event length is the event tags plus the integer field") {
  const Language lang(2);
  for (std::uint64_t t : {1ull, 2ull, 8ull, 1000ull, 1024ull}) {
    const std::size_t field = lang.integer_length(t) - 3;  // strip the top-level INT tag
    CHECK(lang.timestep_event_length(t) == 2 + 2 + field);
    CHECK(lang.codeword_length(EventCode::at_timestep(t)) == lang.timestep_event_length(t));
  }
}

TEST_CASE("simplest unprecedented complexity") {
  const Language lang(2);
  std::size_t global = std::numeric_limits<std::size_t>::max();
  for (std::uint64_t t = 1; t <= 4096; ++t) global = std::min(global, lang.timestep_event_length(t));
  CHECK(simplest_unprecedented_complexity(lang, 1, 4096) == global);
  for (std::uint64_t t = 1; t <= 4096; ++t) {
    const std::uint64_t next = std::bit_ceil(t);
    const std::size_t c = simplest_unprecedented_complexity(lang, t, 8192);
    CHECK(c <= lang.timestep_event_length(next));
    std::size_t brute = std::numeric_limits<std::size_t>::max();
    if (t % 97 == 0) {
      for (std::uint64_t u = t; u <= 8192; ++u) brute = std::min(brute, lang.timestep_event_length(u));
      CHECK(c == brute);
    }
  }
  for (std::uint64_t tmax = 50; tmax < 5000; tmax += 313)
    CHECK(simplest_unprecedented_complexity(lang, 50, tmax + 313) <= simplest_unprecedented_complexity(lang, 50, tmax));
  CHECK_THROWS_AS(simplest_unprecedented_complexity(lang, 0, 5), std::out_of_range);
  CHECK_THROWS_AS(simplest_unprecedented_complexity(lang, 6, 5), std::out_of_range);
}

TEST_CASE("decoded events carry their own length and the documented semantics") {
  const Language lang(2);
  const Event e3 = lang.instantiate(EventCode::at_timestep(3));
  CHECK(e3.description_length_bits() == static_cast<int>(lang.timestep_event_length(3)));
  const History h = History::parse("010101");
  CHECK(e3.happens_at(h, 3));
  CHECK(e3.unprecedented_at(h, 3));
  CHECK_FALSE(e3.unprecedented_at(h, 4));

  EventCode seen;
  seen.kind = EventCode::Kind::observation_seen;
  seen.symbol = 1;
  const Event s = lang.instantiate(seen);
  CHECK_FALSE(s.contains(std::vector<Symbol>{1, 0}));
  CHECK(s.contains(std::vector<Symbol>{0, 1}));
  EventCode last;
  last.kind = EventCode::Kind::last_observation_is;
  last.symbol = 0;
  CHECK(lang.instantiate(last).contains(std::vector<Symbol>{1, 1, 1, 0}));
  CHECK_FALSE(lang.instantiate(last).contains(std::vector<Symbol>{}));
}

TEST_CASE("predictor encodings reproduce the model") {
  std::mt19937_64 rng(9);
  const Language lang(3);
  for (int i = 0; i < 40; ++i) {
    const auto model = gen::tabular_eighths(rng, 3, gen::integer(rng, 0, 2));
    const BasicPredictorCode code = lang.encode_predictor(*model);
    const auto back = lang.instantiate(PredictorCode{code, std::nullopt});
    oracle::for_each_sequence(3, 3, [&](const std::vector<Symbol>& s) {
      const auto want = model->predict(History(s));
      const auto got = back->predict(History(s));
      for (int x = 0; x < 3; ++x) CHECK(got[x] == doctest::Approx(want[x]).epsilon(1e-15));
    });
  }
  CHECK(std::holds_alternative<UniformCode>(lang.encode_predictor(UniformPredictor(3))));
  CHECK_THROWS_AS(lang.encode_predictor(FunctionPredictor(3, [](const History&) { return Distribution{1, 0, 0}; })),
                  EncodingError);
  CHECK_THROWS_AS(lang.encode_predictor(UniformPredictor(2)), EncodingError);
}

TEST_CASE("distribution codes pick the shortest exact form") {
  const Language lang(2);
  CHECK(lang.encode_distribution({0, 1})->kind == DistCode::Kind::point);
  CHECK(lang.encode_distribution({0.5, 0.5})->kind == DistCode::Kind::uniform);
  const auto third = lang.encode_distribution({1.0 / 3, 2.0 / 3});
  REQUIRE(third);
  CHECK(third->counts == std::vector<int>{1, 2, 0});
  const auto halting = lang.encode_distribution({0.25, 0.25});
  REQUIRE(halting);
  CHECK(lang.instantiate(*halting) == Distribution{0.25, 0.25});
  CHECK_FALSE(lang.encode_distribution({0.1, 0.9}).has_value());
  CHECK_FALSE(lang.encode_distribution({0.5, 0.25, 0.25}).has_value());
}

TEST_CASE("wrapper overhead is the length difference between wrapper and base") {
  std::mt19937_64 rng(10);
  const Language lang(2);
  for (int i = 0; i < 100; ++i) {
    const BasicPredictorCode base = random_basic(rng, 2), post = random_basic(rng, 2);
    const EventCode trig = random_event(rng, 2);
    const PredictorCode plain{base, std::nullopt}, wrapped{base, SwitchTail{trig, post}};
    CHECK(lang.wrapper_overhead(trig, post) == lang.codeword_length(wrapped) - lang.codeword_length(plain));
    CHECK(kind_of(wrapped) == ObjectKind::wrapper);
  }
}

TEST_CASE("tag table mentions every top-level tag") {
  const std::string t = Language(2).tag_table();
  for (const char* s : {"PROG", "PRED", "EVENT", "INT", "catch-all", "max program length 4423"})
    CHECK(t.find(s) != std::string::npos);
}

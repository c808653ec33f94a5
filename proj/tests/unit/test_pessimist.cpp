#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "kllab/pessimist.hpp"
#include "oracles.hpp"

using namespace kllab;

namespace {

std::shared_ptr<StationaryPredictor> bern(double one) {
  return std::make_shared<StationaryPredictor>(Distribution{1 - one, one}, Distribution{1 - one, one});
}

}  // namespace

TEST_CASE("top set membership") {
  const auto s = top_set({0.3, 0.6, 0.1}, 0.2);
  CHECK(s.members == std::vector<std::size_t>{1, 0});
  CHECK(s.contains(0));
  CHECK_FALSE(s.contains(2));
  CHECK(s.sorted_posteriors.front() == std::pair<std::size_t, double>{1, 0.6});
  CHECK(top_set({0.3, 0.6, 0.1}, 1.0).members == std::vector<std::size_t>{1});
  CHECK(top_set({0.3, 0.6, 0.1}, 1e-9).members.size() == 3);
  // Equal weights sort by index.
  CHECK(top_set({0.5, 0.5}, 0.5).members == std::vector<std::size_t>{0, 1});
  CHECK(top_set({0.5, 0.5}, 0.6).members == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(top_set({0.5, 0.5}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(top_set({0.5, 0.5}, 1.5), std::invalid_argument);
}

TEST_CASE("top sets shrink as alpha grows") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = gen::simplex(rng, gen::integer(rng, 1, 6));
    std::size_t prev = w.size() + 1;
    for (double alpha : {1e-6, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0}) {
      const auto s = top_set(w, alpha);
      CHECK(s.members.size() <= prev);
      CHECK(!s.members.empty());
      prev = s.members.size();
    }
  }
}

TEST_CASE("pessimistic prediction is the per-symbol minimum over the top set") {
  const ModelClassPosterior cls({bern(0.2), bern(0.4)}, {0.5, 0.5});
  const auto p = pessimistic_predict(cls, 0.1);
  CHECK(p.minimum[0] == doctest::Approx(0.6));
  CHECK(p.minimum[1] == doctest::Approx(0.2));
  CHECK(p.help_mass == doctest::Approx(0.2));
  const auto alone = pessimistic_predict(cls, 1.0);
  CHECK(alone.help_mass == doctest::Approx(0.0));
  CHECK(alone.minimum == Distribution{0.8, 0.2});

  const ModelClassPosterior zeros({bern(0.0), bern(1.0)}, {0.5, 0.5});
  CHECK(pessimistic_predict(zeros, 0.1).minimum == Distribution{0, 0});
  CHECK(pessimistic_predict(zeros, 0.1).help_mass == doctest::Approx(1.0));
}

TEST_CASE("imitator mass, monotonicity in alpha, and help mass") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const int a = gen::integer(rng, 2, 3);
    const auto cls = gen::model_class(rng, a, gen::integer(rng, 1, 5), 0.1);
    const PessimisticImitator loose(cls, 0.05), tight(cls, 0.5);
    for (std::size_t len = 0; len <= 3; ++len)
      oracle::for_each_sequence(a, len, [&](const std::vector<Symbol>& s) {
        const History h(s);
        const auto lo = loose.predict(h);
        const auto hi = tight.predict(h);
        CHECK(mass(lo) <= 1.0 + 1e-12);
        for (int x = 0; x < a; ++x) CHECK(lo[x] <= hi[x] + 1e-15);
        const auto top = loose.top_set_at(h);
        if (!top) {
          CHECK(mass(lo) == 0.0);
          return;
        }
        // Help is needed exactly when the members disagree.
        bool agree = true;
        const auto first = cls.model(top->members.front()).predict(h);
        for (std::size_t m : top->members) agree = agree && cls.model(m).predict(h) == first;
        const double help = mass(first) - mass(lo);
        if (agree) CHECK(help == doctest::Approx(0.0));
        else CHECK(help > 0.0);
      });
  }
  CHECK_THROWS_AS(PessimisticImitator(ModelClassPosterior({bern(0.5)}, {1.0}).update(0), 0.5),
                  std::invalid_argument);
}

TEST_CASE("containment: the imitator stays below every member") {
  std::mt19937_64 rng(63);
  int kept = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto cls = gen::model_class(rng, 2, 4);
    const auto pi = gen::tabular(rng, 2, 1);
    const auto r = containment_check(*pi, cls, 0.05, 0, {}, 3);
    CHECK(r.pointwise_holds);
    CHECK(r.violations.empty());
    CHECK(r.contexts_with_mu + r.mu_left_top_set.size() <= r.contexts_checked);
    // The KL order needs mu in the top set everywhere.
    if (r.mu_left_top_set.empty()) {
      ++kept;
      CHECK(r.kl_order_holds);
      CHECK(r.kl_pi_imitator >= r.kl_pi_mu - 1e-12);
    }
  }
  CHECK(kept > 0);
  // Near-identical models keep mu in the top set on every context.
  const ModelClassPosterior close({bern(0.45), bern(0.5), bern(0.55)}, {0.4, 0.3, 0.3});
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = containment_check(*gen::tabular(rng, 2, 1), close, 0.05, 0, {}, 3);
    CHECK(r.mu_left_top_set.empty());
    CHECK(r.kl_order_holds);
  }
  // The imitator only matches mu when mu is the whole top set.
  const auto mu = bern(0.25);
  const auto single = containment_check(*mu, ModelClassPosterior({mu}, {1.0}), 0.5, 0, {}, 3);
  CHECK(single.kl_pi_mu == 0.0);
  CHECK(single.kl_pi_imitator == doctest::Approx(0.0).epsilon(1e-15));
  const auto pair = containment_check(*mu, ModelClassPosterior({mu, bern(0.5)}, {0.5, 0.5}), 0.1, 0, {}, 3);
  CHECK(pair.kl_pi_mu == 0.0);
  CHECK(pair.kl_pi_imitator > 0.0);
  CHECK_THROWS_AS(containment_check(*mu, ModelClassPosterior({mu}, {1.0}), 0.5, 1, {}, 3), std::out_of_range);
}

TEST_CASE("retention experiment") {
  const ModelClassPosterior alone({bern(0.3)}, {1.0});
  const auto r = retention_experiment(alone, 0, 0.5, 0.9, 20, 10, 1);
  CHECK(r.retained == 20);
  CHECK(r.frequency == 1.0);
  for (long e : r.first_exit) CHECK(e == -1);

  std::mt19937_64 rng(64);
  const auto cls = gen::model_class(rng, 2, 5);
  const double delta = 0.1;
  const double alpha = 0.5 * delta * cls.prior()[2];
  const auto big = retention_experiment(cls, 2, alpha, delta, 300, 30, 7);
  CHECK(big.histories == 300);
  CHECK(big.interval_low <= big.frequency);
  CHECK(big.frequency <= big.interval_high);
  CHECK(big.interval_high >= 1.0 - delta);
  const auto again = retention_experiment(cls, 2, alpha, delta, 300, 30, 7);
  CHECK(again.first_exit == big.first_exit);

  CHECK_THROWS_AS(retention_experiment(cls, 2, 2 * delta * cls.prior()[2], delta, 10, 5, 1), ConfigError);
  CHECK_NOTHROW(retention_experiment(cls, 2, 2 * delta * cls.prior()[2], delta, 10, 5, 1, false));
  CHECK_THROWS_AS(retention_experiment(cls, 9, alpha, delta, 10, 5, 1), ConfigError);
  CHECK_THROWS_AS(retention_experiment(cls, 2, alpha, 1.0, 10, 5, 1), ConfigError);
  CHECK_THROWS_AS(retention_experiment(cls, 2, alpha, delta, 0, 5, 1), ConfigError);
}

TEST_CASE("exact binomial interval") {
  auto [lo, hi] = exact_binomial_interval(0, 10, 0.95);
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(1.0 - std::pow(0.025, 0.1)).epsilon(1e-9));
  std::tie(lo, hi) = exact_binomial_interval(10, 10, 0.95);
  CHECK(lo == doctest::Approx(std::pow(0.025, 0.1)).epsilon(1e-9));
  CHECK(hi == 1.0);
  std::tie(lo, hi) = exact_binomial_interval(5, 10, 0.95);
  CHECK(lo == doctest::Approx(0.187086).epsilon(1e-5));
  CHECK(hi == doctest::Approx(0.812914).epsilon(1e-5));
  CHECK_THROWS_AS(exact_binomial_interval(3, 2, 0.95), std::invalid_argument);
}

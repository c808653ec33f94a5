#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "kllab/divergence.hpp"
#include "kllab/mixer.hpp"
#include "kllab/random.hpp"

using namespace kllab;

namespace {

// Root of mixed_kl(a, b, .) = target without the normalization checks, so
// the proposed coordinates can be perturbed one at a time.
double root(const Distribution& a, const Distribution& b, double target) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mixed_kl(a, b, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MixQuery random_query(std::mt19937_64& rng) {
  const int n = gen::integer(rng, 2, 5);
  MixQuery q{gen::simplex(rng, n, 0.2), gen::simplex(rng, n), 0.0};
  q.target_kl = gen::uniform(rng, 0.05, 0.95) * stepwise_kl(q.proposed, q.base);
  return q;
}

}  // namespace

TEST_CASE("mixing weight examples") {
  const Distribution a{0.9, 0.1}, b{0.5, 0.5};
  const double full = stepwise_kl(a, b);
  CHECK(mixed_kl(a, b, 1.0) == doctest::Approx(full).epsilon(1e-14));
  CHECK(mixed_kl(a, b, 0.0) == 0.0);
  CHECK(solve_alpha({a, b, 0.0}).alpha == 0.0);
  CHECK(solve_alpha({a, b, full}).alpha == 1.0);
  CHECK(solve_alpha({a, b, 2 * full}).alpha == 1.0);
  const auto half = solve_alpha({a, b, 0.5 * full});
  CHECK(std::abs(half.achieved_kl - 0.5 * full) <= 1e-9);
  CHECK(std::abs(mixed_kl(a, b, half.alpha) - 0.5 * full) <= 1e-9);
  // Convexity puts the half-KL weight above one half.
  CHECK(half.alpha > 0.5);
  CHECK(half.alpha < 1.0);
}

TEST_CASE("solutions hit the target on random queries") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const auto q = random_query(rng);
    const auto s = solve_alpha(q);
    CHECK(std::abs(s.achieved_kl - q.target_kl) <= 1e-9);
    CHECK(s.alpha >= 0.0);
    CHECK(s.alpha <= 1.0);
  }
}

TEST_CASE("mixed KL is nondecreasing and convex in the weight") {
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_query(rng);
    double prev = 0.0;
    for (int i = 1; i <= 50; ++i) {
      const double x = i / 50.0;
      const double g = mixed_kl(q.proposed, q.base, x);
      CHECK(g >= prev - 1e-15);
      prev = g;
      if (i < 50) {
        const double mid = mixed_kl(q.proposed, q.base, x);
        const double around =
            0.5 * (mixed_kl(q.proposed, q.base, x - 0.02) + mixed_kl(q.proposed, q.base, x + 0.02));
        CHECK(mid <= around + 1e-14);
      }
    }
  }
}

TEST_CASE("implicit gradients match finite differences") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_query(rng);
    const auto s = solve_alpha(q);
    const auto g = alpha_gradients(q, s.alpha);
    const double h = 1e-6;
    const double dt = (root(q.proposed, q.base, q.target_kl + h) - root(q.proposed, q.base, q.target_kl - h)) / (2 * h);
    CHECK(std::abs(g.d_target - dt) <= 1e-4 * std::max(1.0, std::abs(dt)));
    for (std::size_t x = 0; x < q.proposed.size(); ++x) {
      auto up = q.proposed, down = q.proposed;
      up[x] += h;
      down[x] -= h;
      if (down[x] < 0.0) continue;
      const double d = (root(up, q.base, q.target_kl) - root(down, q.base, q.target_kl)) / (2 * h);
      CHECK(std::abs(g.d_proposed[x] - d) <= 1e-4 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST_CASE("gradients are undefined at the boundary and for equal distributions") {
  const MixQuery q{{0.9, 0.1}, {0.5, 0.5}, 0.1};
  CHECK_THROWS_AS(alpha_gradients(q, 0.0), GradientUndefinedError);
  CHECK_THROWS_AS(alpha_gradients(q, 1.0), GradientUndefinedError);
  CHECK_THROWS_AS(alpha_gradients({{0.5, 0.5}, {0.5, 0.5}, 0.0}, 0.5), GradientUndefinedError);
  CHECK_THROWS_AS(solve_alpha({{0.9, 0.1}, {1.0, 0.0}, 0.1}), std::domain_error);
  CHECK_THROWS_AS(solve_alpha({{0.9, 0.2}, {0.5, 0.5}, 0.1}), std::domain_error);
  CHECK_THROWS_AS(solve_alpha({{1.0}, {0.5, 0.5}, 0.1}), std::domain_error);
  CHECK_THROWS_AS(solve_alpha({{0.9, 0.1}, {0.5, 0.5}, -0.1}), std::domain_error);
}

TEST_CASE("budget ledger") {
  const KLBudgetLedger start(1.0);
  CHECK(start.remaining() == 1.0);
  const auto spent = start.step(1.0, 0.5);
  CHECK(spent.spent() == doctest::Approx(std::log(2.0)));
  CHECK(spent.remaining() == doctest::Approx(1.0 - std::log(2.0)));
  CHECK(start.spent() == 0.0);
  const auto refunded = spent.step(0.25, 0.5);
  CHECK(refunded.spent() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(start.step_target(0.0) == doctest::Approx(0.5));
  CHECK(start.step_target(50.0) == doctest::Approx(1.0));
  const auto over = start.step(1.0, 0.1);
  CHECK(over.remaining() < 0.0);
  CHECK(over.step_target(3.0) == 0.0);
  CHECK_THROWS_AS(start.step(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(start.step(0.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(start.step(1.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(KLBudgetLedger(-1.0), std::domain_error);
}

TEST_CASE("expected ledger drift equals the stepwise KL") {
  const Distribution a{0.7, 0.2, 0.1}, b{0.2, 0.3, 0.5};
  const auto s = solve_alpha({a, b, 0.1});
  Distribution mixed(3);
  for (int x = 0; x < 3; ++x) mixed[x] = s.alpha * a[x] + (1 - s.alpha) * b[x];
  auto rng = seeded_stream(5, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Symbol x = *sample(mixed, rng);
    const double c = KLBudgetLedger(1.0).step(mixed[x], b[x]).spent();
    sum += c;
    sq += c * c;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - stepwise_kl(mixed, b)) <= 4 * se);
  CHECK(stepwise_kl(mixed, b) == doctest::Approx(0.1).epsilon(1e-8));
}

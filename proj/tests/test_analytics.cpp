/**
 * Analytics tests: the reproduction transform and its Malthusian root
 * against closed forms, offspring-distribution identities, assumption
 * diagnostics, regime classification, and the centering/tail predictions.
 */

#include <doctest.h>

#include <cmath>
#include <vector>

#include "pavd/analytics.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"

using namespace pavd;

namespace {

RateModel constant_rates(double b, double d) {
  return RateModel(RateSequence::constant(b), RateSequence::constant(d));
}

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("mu_hat matches the geometric closed form for constant rates") {
  // b = 2, d = 1: each factor is 2/(3+lambda), so mu_hat = f/(1-f).
  const RateModel m = constant_rates(2.0, 1.0);
  for (double lambda : {0.0, 0.5, 1.0, 4.0}) {
    const double f = 2.0 / (3.0 + lambda);
    const MuHatResult r = mu_hat(m, lambda);
    REQUIRE(r.status == SeriesStatus::Finite);
    CHECK(r.value == doctest::Approx(f / (1.0 - f)).epsilon(1e-12));
  }
}

TEST_CASE("mu_hat is decreasing in lambda and diverges below the abscissa") {
  const RateModel pud = make_builtin("pa_unit_death");
  const double a = mu_hat(pud, 0.5).value;
  const double b = mu_hat(pud, 1.0).value;
  const double c = mu_hat(pud, 2.0).value;
  CHECK(a > b);
  CHECK(b > c);

  // pa_pure terms decay like k^-lambda: divergent at and below 1.
  const RateModel pa = make_builtin("pa_pure");
  CHECK(mu_hat(pa, 0.5).status == SeriesStatus::Divergent);
  CHECK(mu_hat(pa, 1.0).status == SeriesStatus::Divergent);
  REQUIRE(mu_hat(pa, 1.5).status == SeriesStatus::Finite);
  // At the root the transform is exactly one.
  CHECK(mu_hat(pa, 2.0).value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("underline_lambda locates the convergence abscissa") {
  CHECK(underline_lambda(make_builtin("pa_pure")).value ==
        doctest::Approx(1.0).epsilon(1e-6));
  // d = 1 shifts every denominator up by one, moving the abscissa to zero.
  CHECK(underline_lambda(make_builtin("pa_unit_death")).value == 0.0);
  CHECK(underline_lambda(make_builtin("ua_pure")).value == 0.0);
  CHECK(underline_lambda(make_builtin("ua_unit_death")).value == 0.0);
  CHECK(underline_lambda(make_builtin("pa_geom_death")).value ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(underline_lambda(make_builtin("pa_pure")).conclusive);
}

TEST_CASE("malthusian roots match the frozen oracles") {
  const MalthusianResult pa = malthusian(make_builtin("pa_pure"));
  REQUIRE(pa.status == MalthusianStatus::Found);
  CHECK(std::abs(pa.lambda_star - 2.0) <= 1e-8);
  CHECK(std::abs(pa.residual) <= 1e-9);

  const MalthusianResult pud = malthusian(make_builtin("pa_unit_death"));
  REQUIRE(pud.status == MalthusianStatus::Found);
  CHECK(std::abs(pud.lambda_star - 1.0) <= 1e-8);

  const MalthusianResult ua = malthusian(make_builtin("ua_pure"));
  REQUIRE(ua.status == MalthusianStatus::Found);
  CHECK(std::abs(ua.lambda_star - 1.0) <= 1e-8);

  // b = 2, d = 1: mu_hat(1) = 1 exactly.
  const MalthusianResult c21 = malthusian(constant_rates(2.0, 1.0));
  REQUIRE(c21.status == MalthusianStatus::Found);
  CHECK(std::abs(c21.lambda_star - 1.0) <= 1e-8);

  // ua_unit_death: mu_hat(0) = 1 only in the limit; subcritical for
  // every positive rate.
  CHECK(malthusian(make_builtin("ua_unit_death")).status ==
        MalthusianStatus::NoRoot);

  CHECK(malthusian(make_builtin("rich_are_old")).status ==
        MalthusianStatus::Found);
}

TEST_CASE("offspring survival functions have exact closed forms") {
  // ua_unit_death: each factor is exactly 1/2.
  const RateModel uud = make_builtin("ua_unit_death");
  for (std::int64_t k = 0; k <= 50; ++k) {
    CHECK(offspring_sf(uud, k) == std::ldexp(1.0, -static_cast<int>(k)));
  }

  // pa_unit_death: the product telescopes to 1/(k+1).
  const RateModel pud = make_builtin("pa_unit_death");
  for (std::int64_t k : {1, 2, 5, 10, 40}) {
    CHECK(offspring_sf(pud, k) ==
          doctest::Approx(1.0 / (double(k) + 1.0)).epsilon(1e-13));
  }

  // pa_pure never dies: sf == 1 at every k.
  CHECK(offspring_sf(make_builtin("pa_pure"), 1000) == 1.0);

  // log version agrees with the log of the product and survives underflow.
  CHECK(offspring_log_sf(uud, 20) ==
        doctest::Approx(std::log(offspring_sf(uud, 20))).epsilon(1e-13));
  CHECK(offspring_log_sf(uud, 5000) ==
        doctest::Approx(-5000.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("the analytic log-sf bound dominates the exact log-sf") {
  for (const std::string& f : builtin_families()) {
    const RateModel m = make_builtin(f);
    for (std::int64_t k : {1, 2, 5, 20, 100, 1000}) {
      CHECK(offspring_log_sf(m, k) <= offspring_log_sf_bound(m, k) + 1e-12);
    }
  }
}

TEST_CASE("prob_infinite_offspring matches the bounded-death product") {
  // ua_geom_death: prod_i 1/(1 + 2^-(i+1)), frozen from an independent
  // high-precision evaluation.
  CHECK(prob_infinite_offspring(make_builtin("ua_geom_death")) ==
        doctest::Approx(0.4194224417951077).epsilon(1e-11));
  CHECK(prob_infinite_offspring(make_builtin("pa_unit_death")) == 0.0);
  CHECK(prob_infinite_offspring(make_builtin("ua_unit_death")) == 0.0);
  CHECK(prob_infinite_offspring(make_builtin("pa_pure")) == 1.0);
}

TEST_CASE("expected_offspring distinguishes finite means from divergence") {
  // ua_unit_death: E[D] = sum 2^-k = 1.
  const ExpectedOffspring uud = expected_offspring(make_builtin("ua_unit_death"));
  CHECK_FALSE(uud.infinite_flag);
  CHECK(uud.value == doctest::Approx(1.0).epsilon(1e-12));

  // b = 2, d = 1: E[D] = sum (2/3)^k = 2.
  const ExpectedOffspring c21 = expected_offspring(constant_rates(2.0, 1.0));
  CHECK_FALSE(c21.infinite_flag);
  CHECK(c21.value == doctest::Approx(2.0).epsilon(1e-12));

  // pa_unit_death: sf(k) = 1/(k+1) sums like the harmonic series.
  CHECK(expected_offspring(make_builtin("pa_unit_death")).infinite_flag);
  CHECK(expected_offspring(make_builtin("pa_pure")).infinite_flag);
  // Positive mass at infinity forces an infinite mean too.
  CHECK(expected_offspring(make_builtin("ua_geom_death")).infinite_flag);
}

TEST_CASE("check_assumptions grades the standing assumptions") {
  const AssumptionReport pud = check_assumptions(make_builtin("pa_unit_death"));
  CHECK(pud.finite_lifetimes.verdict == Verdict::Satisfied);
  CHECK(pud.no_explosion.verdict == Verdict::Satisfied);
  CHECK(pud.clock_variance.verdict == Verdict::Satisfied);
  CHECK(pud.transform_finite.verdict == Verdict::Satisfied);
  CHECK(pud.malthusian_root.verdict == Verdict::Satisfied);
  CHECK(pud.death_limit == 1.0);

  // Bounded death pressure: lifetimes are not almost-surely finite.
  CHECK(check_assumptions(make_builtin("ua_geom_death"))
            .finite_lifetimes.verdict == Verdict::Violated);
  CHECK(check_assumptions(make_builtin("pa_pure")).finite_lifetimes.verdict ==
        Verdict::Violated);

  // Uniform attachment: phi2 diverges, the degree clock does not concentrate.
  CHECK(check_assumptions(make_builtin("ua_pure")).clock_variance.verdict ==
        Verdict::Violated);
  CHECK(check_assumptions(make_builtin("pa_pure")).clock_variance.verdict ==
        Verdict::Satisfied);
}

TEST_CASE("classify_regime reproduces the frozen regime table") {
  auto regime_of = [](const char* f) {
    return classify_regime(make_builtin(f)).regime;
  };
  CHECK(regime_of("pa_pure") == Regime::InfiniteLifetime);
  CHECK(regime_of("ua_pure") == Regime::InfiniteLifetime);
  CHECK(regime_of("ua_geom_death") == Regime::InfiniteLifetime);
  CHECK(regime_of("pa_geom_death") == Regime::InfiniteLifetime);
  CHECK(regime_of("pa_unit_death") == Regime::FiniteRichAreOld);
  CHECK(regime_of("ua_unit_death") == Regime::FiniteRichAreOld);
  CHECK(regime_of("rich_are_old") == Regime::FiniteRichAreOld);
  CHECK(regime_of("rich_die_young_1") == Regime::FiniteRichDieYoung);
  CHECK(regime_of("rich_die_young_2") == Regime::FiniteRichDieYoung);

  // A bare callable declares no tail: the infimum is unresolved and the
  // classification must stay honest about it.
  const RateModel custom(
      RateSequence::custom([](std::int64_t i) { return double(i) + 1.0; }),
      RateSequence::custom([](std::int64_t) { return 1.0; }));
  CHECK(classify_regime(custom).regime == Regime::Inconclusive);
}

TEST_CASE("custom callables agree with the structured equivalents") {
  const RateModel structured = make_builtin("pa_unit_death");
  const RateModel custom(
      RateSequence::custom([](std::int64_t i) { return double(i) + 1.0; }),
      RateSequence::custom([](std::int64_t) { return 1.0; }));

  // Exact products are identical; series go through different evaluators.
  for (std::int64_t k : {1, 3, 10, 100}) {
    CHECK(offspring_sf(custom, k) ==
          doctest::Approx(offspring_sf(structured, k)).epsilon(1e-13));
  }
  CHECK(mu_hat(custom, 1.5).value ==
        doctest::Approx(mu_hat(structured, 1.5).value).epsilon(1e-6));

  const MalthusianResult mc = malthusian(custom);
  REQUIRE(mc.status == MalthusianStatus::Found);
  CHECK(std::abs(mc.lambda_star - 1.0) <= 1e-6);
}

TEST_CASE("predicted centerings for the exactly solvable model") {
  const RateModel pud = make_builtin("pa_unit_death");
  const MalthusianResult mr = malthusian(pud);
  REQUIRE(mr.status == MalthusianStatus::Found);
  for (double n : {1e3, 1e6}) {
    const Centerings c = predicted_centerings(pud, n, mr);
    // K_alpha == 0: both centres reduce to ln(n)/2.
    CHECK(c.label_centre == doctest::Approx(0.5 * std::log(n)).epsilon(1e-7));
    CHECK(c.degree_centre == doctest::Approx(0.5 * std::log(n)).epsilon(1e-7));
    CHECK(std::abs(c.k_alpha_at_r) <= 1e-9);
  }

  MalthusianResult bad;
  bad.status = MalthusianStatus::NoRoot;
  CHECK_THROWS_AS(predicted_centerings(pud, 1e4, bad), WrongRegimeError);
  CHECK_THROWS_AS(predicted_centerings(pud, 0.5, mr), OutOfRangeError);
}

TEST_CASE("lifetime_logsf_prediction is exactly -t for unit-death PA") {
  const RateModel pud = make_builtin("pa_unit_death");
  for (double t : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(lifetime_logsf_prediction(pud, t) ==
          doctest::Approx(-t).epsilon(1e-10));
  }
}

}  // TEST_SUITE

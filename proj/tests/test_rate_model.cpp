/**
 * Rate-model tests: builtin rate values, derived prefix sums against hand
 * computations, the phi1 inverse, the compensator K_alpha, the fixed-point
 * solver, infimum/limit queries, validation, and cache replay.
 */

#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"

using namespace pavd;

TEST_SUITE("rate_model") {

TEST_CASE("builtin families expose the documented rates") {
  const RateModel pa = make_builtin("pa_pure");
  CHECK(pa.birth(0) == 1.0);
  CHECK(pa.birth(7) == 8.0);
  CHECK(pa.death(0) == 0.0);
  CHECK(pa.death(100) == 0.0);

  const RateModel ua = make_builtin("ua_unit_death");
  CHECK(ua.birth(0) == 1.0);
  CHECK(ua.birth(50) == 1.0);
  CHECK(ua.death(3) == 1.0);
  CHECK(ua.total_rate(9) == 2.0);

  const RateModel rao = make_builtin("rich_are_old");
  CHECK(rao.death(0) == 1.0);
  CHECK(rao.death(1) == 2.0);
  CHECK(rao.death(2) == 1.5);
  CHECK(rao.death(40) == 1.5);
  CHECK(rao.birth(3) == 4.0);

  const RateModel rdy2 = make_builtin("rich_die_young_2");
  CHECK(rdy2.birth(0) == 0.25);
  CHECK(rdy2.birth(1) == 2.0);
  CHECK(rdy2.birth(5) == 6.0);

  const RateModel geo = make_builtin("ua_geom_death");
  CHECK(geo.death(0) == 0.5);
  CHECK(geo.death(2) == 0.125);

  CHECK(builtin_families().size() == 9);
  CHECK(is_builtin_family("pa_geom_death"));
  CHECK_FALSE(is_builtin_family("pa_bogus"));
  CHECK_THROWS_AS(make_builtin("pa_bogus"), UnknownModelError);
}

TEST_CASE("family aliases resolve to the canonical names") {
  CHECK(make_builtin("rao").name() == "rich_are_old");
  CHECK(make_builtin("rdy1").name() == "rich_die_young_1");
  CHECK(make_builtin("rdy2").name() == "rich_die_young_2");
}

TEST_CASE("phi1 prefix sums match hand computations") {
  // pa_pure: b + d = i + 1, so phi1(3) = 1 + 1/2 + 1/3 = 11/6.
  const RateModel pa = make_builtin("pa_pure");
  CHECK(pa.seq_at(DerivedSeq::Phi1, 3) ==
        doctest::Approx(11.0 / 6.0).epsilon(1e-15));

  // pa_unit_death: b + d = i + 2, so phi1(2) = 1/2 + 1/3 = 5/6.
  const RateModel pud = make_builtin("pa_unit_death");
  CHECK(pud.seq_at(DerivedSeq::Phi1, 2) ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  // ua_unit_death: b + d = 2 so phi1(k) = k/2 exactly.
  const RateModel uud = make_builtin("ua_unit_death");
  CHECK(uud.seq_at(DerivedSeq::Phi1, 10) == 5.0);
  CHECK(uud.seq_at(DerivedSeq::Phi1, 0) == 0.0);

  // rich_are_old totals are 2, 4, 9/2, 11/2, 13/2, ...
  const RateModel rao = make_builtin("rich_are_old");
  CHECK(rao.seq_at(DerivedSeq::Phi1, 4) ==
        doctest::Approx(0.5 + 0.25 + 2.0 / 9.0 + 2.0 / 11.0).epsilon(1e-15));
}

TEST_CASE("rho and alpha prefix sums match hand computations") {
  // rich_are_old: rho1(4) = 1/2 + 1/2 + 1/3 + 3/11 and d* = 3/2, giving
  // alpha(4) = rho1(4) - 1.5 phi1(4) = -1/8.
  const RateModel rao = make_builtin("rich_are_old");
  const double rho1_4 = 0.5 + 0.5 + 1.0 / 3.0 + 1.5 / 5.5;
  CHECK(rao.seq_at(DerivedSeq::Rho1, 4) == doctest::Approx(rho1_4).epsilon(1e-15));
  CHECK(rao.seq_at(DerivedSeq::Alpha, 4) ==
        doctest::Approx(-0.125).epsilon(1e-12));

  // ua_unit_death: each death share is 1/2, so rho2(6) = 6/4.
  const RateModel uud = make_builtin("ua_unit_death");
  CHECK(uud.seq_at(DerivedSeq::Rho2, 6) == doctest::Approx(1.5).epsilon(1e-15));

  // pa_unit_death: rho1 and phi1 share every term (d = 1), so alpha == 0.
  const RateModel pud = make_builtin("pa_unit_death");
  for (std::int64_t k : {1, 5, 40, 900}) {
    CHECK(std::abs(pud.seq_at(DerivedSeq::Alpha, k)) <= 1e-12);
  }
}

TEST_CASE("seq interpolates linearly between integer arguments") {
  const RateModel pa = make_builtin("pa_pure");
  const double at2 = pa.seq_at(DerivedSeq::Phi1, 2);
  const double at3 = pa.seq_at(DerivedSeq::Phi1, 3);
  CHECK(pa.seq(DerivedSeq::Phi1, 2.0) == at2);
  CHECK(pa.seq(DerivedSeq::Phi1, 2.5) ==
        doctest::Approx(0.5 * (at2 + at3)).epsilon(1e-15));
  CHECK(pa.seq(DerivedSeq::Phi1, 2.25) ==
        doctest::Approx(0.75 * at2 + 0.25 * at3).epsilon(1e-15));
  CHECK_THROWS_AS(pa.seq(DerivedSeq::Phi1, -0.5), OutOfRangeError);
  CHECK_THROWS_AS(pa.seq_at(DerivedSeq::Phi1, -1), OutOfRangeError);
}

TEST_CASE("phi1_inv inverts phi1 within tolerance") {
  const RateModel uud = make_builtin("ua_unit_death");
  // phi1(t) = t/2 exactly, so the inverse of y is 2y.
  CHECK(uud.phi1_inv(3.0) == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(uud.phi1_inv(0.0) == 0.0);

  const RateModel pud = make_builtin("pa_unit_death");
  for (double y : {0.3, 1.7, 5.0, 9.0}) {
    const double t = pud.phi1_inv(y);
    CHECK(std::abs(pud.seq(DerivedSeq::Phi1, t) - y) <= 1e-11 * (1.0 + y));
  }

  CHECK_THROWS_AS(pud.phi1_inv(-1.0), OutOfRangeError);
  // phi1 of this model grows like log k; a huge target exceeds the cache's
  // attainable range and must be refused rather than looping.
  CHECK_THROWS_AS(pud.phi1_inv(100.0), OutOfRangeError);
}

TEST_CASE("k_alpha vanishes when death pressure sits at its limit") {
  const RateModel pud = make_builtin("pa_unit_death");
  for (double t : {0.5, 2.0, 7.0}) {
    CHECK(std::abs(pud.k_alpha(t)) <= 1e-10);
  }

  // rich_are_old: at t = phi1(4) the preimage is 4, so K_alpha = alpha(4).
  const RateModel rao = make_builtin("rich_are_old");
  const double t4 = rao.seq_at(DerivedSeq::Phi1, 4);
  CHECK(rao.k_alpha(t4) == doctest::Approx(-0.125).epsilon(1e-8));
}

TEST_CASE("r_fixed_point converges and solves the defining equation") {
  const RateModel pud = make_builtin("pa_unit_death");
  // K_alpha == 0 here, so r = s = lambda/(lambda+d*) t = t/2 for lambda = 1.
  CHECK(pud.r_fixed_point(5.0, 1.0) == doctest::Approx(2.5).epsilon(1e-10));

  const RateModel rao = make_builtin("rich_are_old");
  const double lambda = 0.6;
  const double r6 = rao.r_fixed_point(8.0, lambda, 6);
  const double r12 = rao.r_fixed_point(8.0, lambda, 12);
  CHECK(std::abs(r6 - r12) <= 1e-6);
  // The converged iterate satisfies r + K_alpha(r)/(l+d*) = s.
  const double s = lambda / (lambda + 1.5) * 8.0;
  CHECK(r12 + rao.k_alpha(r12) / (lambda + 1.5) ==
        doctest::Approx(s).epsilon(1e-9));

  CHECK_THROWS_AS(pud.r_fixed_point(-1.0, 1.0), OutOfRangeError);
  CHECK_THROWS_AS(pud.r_fixed_point(1.0, 1.0, 0), OutOfRangeError);
}

TEST_CASE("total_rate_infimum across the builtin families") {
  auto inf_of = [](const char* f) { return make_builtin(f).total_rate_infimum(); };
  CHECK(inf_of("pa_pure").value == 1.0);
  CHECK(inf_of("pa_pure").conclusive);
  CHECK(inf_of("ua_pure").value == 1.0);
  CHECK(inf_of("pa_unit_death").value == 2.0);
  CHECK(inf_of("ua_unit_death").value == 2.0);
  CHECK(inf_of("rich_are_old").value == 2.0);
  CHECK(inf_of("rich_die_young_1").value == 1.25);
  CHECK(inf_of("rich_die_young_2").value == 1.25);
  // Geometric death decays to zero, so the infimum is the bare birth rate.
  CHECK(inf_of("ua_geom_death").value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inf_of("ua_geom_death").conclusive);
  CHECK(inf_of("pa_geom_death").value == doctest::Approx(1.5).epsilon(1e-12));

  // A custom callable declares no tail: the scan result is inconclusive.
  const RateModel c(RateSequence::custom([](std::int64_t) { return 1.0; }),
                    RateSequence::custom([](std::int64_t) { return 1.0; }));
  CHECK_FALSE(c.total_rate_infimum().conclusive);
}

TEST_CASE("death_limit resolves declared, structural, and numeric limits") {
  CHECK(make_builtin("pa_unit_death").death_limit() == 1.0);
  CHECK(make_builtin("rich_are_old").death_limit() == 1.5);
  CHECK(make_builtin("ua_geom_death").death_limit() == 0.0);
  CHECK(make_builtin("pa_pure").death_limit() == 0.0);

  // Custom death converging fast enough for the numeric probe.
  const RateModel fast(
      RateSequence::constant(1.0),
      RateSequence::custom([](std::int64_t i) { return 1.0 + std::exp2(-double(i)); }));
  auto lim = fast.death_limit();
  REQUIRE(lim.has_value());
  CHECK(*lim == doctest::Approx(1.0).epsilon(1e-6));

  // Custom death drifting too slowly to certify a limit.
  const RateModel slow(
      RateSequence::constant(1.0),
      RateSequence::custom([](std::int64_t i) { return 1.0 + 1.0 / (double(i) + 1.0); }));
  CHECK_FALSE(slow.death_limit().has_value());

  // An explicit declaration overrides the probe.
  const RateModel declared(
      RateSequence::constant(1.0),
      RateSequence::custom([](std::int64_t i) { return 1.0 + 1.0 / (double(i) + 1.0); }),
      1.0);
  CHECK(declared.death_limit() == 1.0);
}

TEST_CASE("construction validates tables and tails") {
  CHECK_THROWS_AS(RateModel(RateSequence::constant(0.0), RateSequence::constant(0.0)),
                  SchemaError);
  CHECK_THROWS_AS(
      RateModel(RateSequence::constant(1.0), RateSequence::constant(-0.5)),
      SchemaError);
  CHECK_THROWS_AS(RateModel(RateSequence::table_then_constant({1.0, 0.0}, 1.0),
                            RateSequence::constant(0.0)),
                  SchemaError);
  CHECK_THROWS_AS(RateModel(RateSequence::table_then_affine({}, 1.0, -0.1),
                            RateSequence::constant(0.0)),
                  SchemaError);
  CHECK_THROWS_AS(
      RateModel(RateSequence::constant(1.0), RateSequence::geometric(0.5, 1.0)),
      SchemaError);
  CHECK_THROWS_AS(
      RateModel(RateSequence::constant(1.0), RateSequence::geometric(-1.0, 0.5)),
      SchemaError);
  CHECK_THROWS_AS(RateModel(RateSequence::constant(1.0), RateSequence::constant(0.0),
                            -1.0),
                  SchemaError);
  CHECK_THROWS_AS(make_builtin("pa_pure").rates(-1), OutOfRangeError);
}

TEST_CASE("declared_limit reflects the tail structure") {
  CHECK(RateSequence::constant(2.0).declared_limit() == 2.0);
  CHECK(RateSequence::table_then_constant({5.0}, 0.25).declared_limit() == 0.25);
  CHECK(RateSequence::geometric(1.0, 0.5).declared_limit() == 0.0);
  CHECK_FALSE(RateSequence::table_then_affine({}, 1.0, 1.0).declared_limit());
  CHECK(RateSequence::table_then_affine({}, 3.0, 0.0).declared_limit() == 3.0);
  CHECK_FALSE(
      RateSequence::custom([](std::int64_t) { return 1.0; }).declared_limit());
}

TEST_CASE("caches replay bit-identically across copies and query orders") {
  const RateModel a = make_builtin("pa_geom_death");
  const RateModel b = a;  // fresh caches

  // Query a in ascending order, b descending; entries must agree exactly.
  std::vector<double> va;
  for (std::int64_t k = 1; k <= 500; ++k) va.push_back(a.seq_at(DerivedSeq::Rho1, k));
  std::vector<double> vb(500);
  for (std::int64_t k = 500; k >= 1; --k) {
    vb[static_cast<std::size_t>(k - 1)] = b.seq_at(DerivedSeq::Rho1, k);
  }
  CHECK(va == vb);

  // Alpha cache must be invalidated consistently on copies too.
  CHECK(a.seq_at(DerivedSeq::Alpha, 123) == b.seq_at(DerivedSeq::Alpha, 123));
}

TEST_CASE("joint tails capture the eventual affine/constant structure") {
  const RateModel pud = make_builtin("pa_unit_death");
  REQUIRE(pud.joint_tail().has_value());
  CHECK(pud.joint_tail()->b_slope == 1.0);
  CHECK(pud.joint_tail()->d_value == 1.0);
  CHECK(pud.joint_tail()->exact);

  // Truncated geometric death: structure holds beyond the cut, flagged inexact.
  const RateModel geo = make_builtin("ua_geom_death");
  REQUIRE(geo.joint_tail().has_value());
  CHECK(geo.joint_tail()->d_value == 0.0);
  CHECK_FALSE(geo.joint_tail()->exact);

  const RateModel custom(RateSequence::custom([](std::int64_t) { return 1.0; }),
                         RateSequence::constant(0.0));
  CHECK_FALSE(custom.joint_tail().has_value());
}

}  // TEST_SUITE

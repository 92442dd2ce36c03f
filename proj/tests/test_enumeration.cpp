/**
 * Exact-enumeration tests: the state-key encoding, probability conservation
 * layer by layer, hand-computed state probabilities, absorption of dead
 * states, and Monte Carlo agreement of the discrete engine with the exact
 * law on a small horizon.
 */

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>

#include "pavd/discrete_sim.hpp"
#include "pavd/enumeration.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

using namespace pavd;

namespace {

double layer_total(const std::map<std::string, double>& layer) {
  double s = 0.0;
  for (const auto& [k, p] : layer) s += p;
  return s;
}

/// Key of the current TreeState under the shared encoding.
std::string key_of(const TreeState& state, std::int64_t budget) {
  return state_key(
      budget,
      [&](std::int64_t label) -> std::int64_t {
        if (label > state.max_label()) return -1;
        const VertexRec& r = state.vertex(label);
        return r.born ? r.parent : -1;
      },
      [&](std::int64_t label) {
        return state.vertex(label).alive;
      });
}

}  // namespace

TEST_SUITE("enumeration") {

TEST_CASE("state keys encode parent, vitality, and unborn slots") {
  auto parent = [](std::int64_t label) -> std::int64_t {
    if (label == 1) return 0;
    if (label == 2) return 1;
    return -1;
  };
  CHECK(state_key(1, parent, [](std::int64_t) { return true; }) == "0+");
  CHECK(state_key(3, parent, [](std::int64_t l) { return l == 2; }) ==
        "0-|1+|.");
  CHECK(state_key(2, parent, [](std::int64_t) { return false; }) == "0-|1-");
}

TEST_CASE("every layer of the exact distribution sums to one") {
  for (const char* family : {"ua_unit_death", "pa_unit_death", "pa_geom_death"}) {
    const ExactDistribution d =
        exact_state_distribution(make_builtin(family), 4);
    REQUIRE(d.by_step.size() == 5);
    for (const auto& layer : d.by_step) {
      CHECK(layer_total(layer) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("pure birth never produces a dead token") {
  const ExactDistribution d = exact_state_distribution(make_builtin("pa_pure"), 5);
  for (const auto& layer : d.by_step) {
    for (const auto& [key, p] : layer) {
      CHECK(key.find('-') == std::string::npos);
    }
  }
  // One vertex per step, so layer n holds trees on n+1 labelled vertices;
  // their counts are 1, 1, 2, 6, 24, ... (recursive trees).
  CHECK(d.by_step[2].size() == 2);
  CHECK(d.by_step[3].size() == 6);
  CHECK(d.by_step[4].size() == 24);
}

TEST_CASE("hand-computed probabilities for two steps of ua_unit_death") {
  const ExactDistribution d =
      exact_state_distribution(make_builtin("ua_unit_death"), 2);
  const auto& layer = d.by_step[2];

  // Death at step one absorbs mass 1/2 forever.
  REQUIRE(layer.count("0-|.|."));
  CHECK(layer.at("0-|.|.") == doctest::Approx(0.5).epsilon(1e-15));

  // Survive (1/2), then the root is picked (1/2) and killed (1/2): the
  // alive set at n = 2 is exactly {2}.
  REQUIRE(layer.count("0-|1+|."));
  CHECK(layer.at("0-|1+|.") == doctest::Approx(0.125).epsilon(1e-15));

  // Survive, then the child dies: alive set {1}.
  REQUIRE(layer.count("0+|1-|."));
  CHECK(layer.at("0+|1-|.") == doctest::Approx(0.125).epsilon(1e-15));

  // Both alive after two births: two shapes (star and path), 1/8 each.
  REQUIRE(layer.count("0+|1+|1+"));
  CHECK(layer.at("0+|1+|1+") == doctest::Approx(0.125).epsilon(1e-15));
  REQUIRE(layer.count("0+|1+|2+"));
  CHECK(layer.at("0+|1+|2+") == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("dead states are absorbing across layers") {
  const ExactDistribution d =
      exact_state_distribution(make_builtin("ua_unit_death"), 5);
  // The step-1 extinction state persists with identical mass in every
  // later layer (keys widen with the label budget).
  CHECK(d.by_step[5].at("0-|.|.|.|.|.") == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("the step budget is guarded") {
  const RateModel m = make_builtin("ua_unit_death");
  CHECK_THROWS_AS(exact_state_distribution(m, 13), OutOfRangeError);
  CHECK_THROWS_AS(exact_state_distribution(m, -1), OutOfRangeError);
  const ExactDistribution d0 = exact_state_distribution(m, 0);
  REQUIRE(d0.by_step.size() == 1);
  CHECK(d0.by_step[0].at("0+") == 1.0);
}

TEST_CASE("the discrete engine reproduces the exact three-step law") {
  const RateModel m = make_builtin("ua_unit_death");
  const std::int64_t steps = 3;
  const ExactDistribution exact = exact_state_distribution(m, steps);
  const auto& target = exact.by_step[static_cast<std::size_t>(steps)];

  const int replicas = 40000;
  std::unordered_map<std::string, std::int64_t> counts;
  for (int i = 0; i < replicas; ++i) {
    Rng rng = derive_stream(881, static_cast<std::uint64_t>(i));
    TreeState state(&m);
    for (std::int64_t s = 0; s < steps && !state.died(); ++s) state.step(rng);
    counts[key_of(state, steps + 1)] += 1;
  }

  double tv = 0.0;
  double seen_mass = 0.0;
  for (const auto& [key, p] : target) {
    const auto it = counts.find(key);
    const double hat = it == counts.end() ? 0.0 : double(it->second) / replicas;
    tv += std::abs(hat - p);
    seen_mass += p;
    counts.erase(key);
  }
  CHECK(seen_mass == doctest::Approx(1.0).epsilon(1e-12));
  // Any key outside the exact support is an engine bug, not noise.
  CHECK(counts.empty());
  CHECK(tv / 2.0 < 0.02);
}

}  // TEST_SUITE

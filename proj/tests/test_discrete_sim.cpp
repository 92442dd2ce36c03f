/**
 * Discrete-step engine tests: scripted single steps, counting identities,
 * elder monotonicity, an exactly solvable survival probability, checkpoint
 * handling around death, and the checkpoint grid helper.
 */

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "pavd/discrete_sim.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

using namespace pavd;

namespace {

/// Replays a fixed list of uniforms; each step consumes exactly three
/// (class, member, kill draw).
struct ScriptedRng {
  std::vector<double> draws;
  std::size_t next = 0;
  double u01() {
    REQUIRE(next < draws.size());
    return draws[next++];
  }
};

}  // namespace

TEST_SUITE("discrete_sim") {

TEST_CASE("a scripted birth step wires labels, degrees, and the index") {
  const RateModel m = make_builtin("ua_unit_death");
  TreeState state(&m);
  CHECK(state.total_weight() == 2.0);  // root at degree 0: b + d = 2
  CHECK(state.oldest_alive() == 1);

  // kill test is u * (b+d) < d, i.e. u < 1/2 here; 0.9 is a birth.
  ScriptedRng rng{{0.3, 0.0, 0.9}, 0};
  const StepResult r = state.step(rng);
  CHECK(r.kind == EventKind::Birth);
  CHECK(r.vertex == 1);
  CHECK(r.child == 2);
  CHECK(state.n() == 1);
  CHECK(state.born_count() == 2);
  CHECK(state.alive_count() == 2);
  CHECK(state.vertex(2).parent == 1);
  CHECK(state.vertex(1).degree == 1);
  CHECK(state.vertex(2).degree == 0);
  CHECK(state.total_weight() == 4.0);  // both vertices have b + d = 2
  state.check_invariants();
}

TEST_CASE("a scripted death step erases the vertex and can kill the tree") {
  const RateModel m = make_builtin("ua_unit_death");
  TreeState state(&m);
  ScriptedRng rng{{0.3, 0.0, 0.2}, 0};  // 0.2 < 1/2: death
  const StepResult r = state.step(rng);
  CHECK(r.kind == EventKind::Death);
  CHECK(r.vertex == 1);
  CHECK(r.child == kNoVertex);
  CHECK(state.died());
  CHECK(state.alive_count() == 0);
  CHECK(state.n() == 1);

  Rng real(1);
  CHECK_THROWS_AS(state.step(real), SteppedAfterDeathError);
  CHECK_THROWS_AS(state.oldest_alive(), EmptyAliveSetError);
}

TEST_CASE("labels skip after deaths: child of event n is n + 1") {
  const RateModel m = make_builtin("ua_unit_death");
  TreeState state(&m);
  // Birth (child 2), death of the member drawn, then another birth: the
  // next child must be labelled 4 because event 3 follows events 1-3.
  ScriptedRng rng{{0.1, 0.0, 0.9,    // event 1: birth -> child 2
                   0.1, 0.0, 0.2,    // event 2: death of the selected vertex
                   0.1, 0.0, 0.9},   // event 3: birth -> child 4
                  0};
  CHECK(state.step(rng).child == 2);
  CHECK(state.step(rng).kind == EventKind::Death);
  const StepResult r3 = state.step(rng);
  CHECK(r3.kind == EventKind::Birth);
  CHECK(r3.child == 4);
  CHECK(state.max_label() == 4);
  state.check_invariants();
}

TEST_CASE("counting identities hold along a long trajectory") {
  const RateModel m = make_builtin("pa_geom_death");
  Rng rng = derive_stream(99, 0);
  TreeState state(&m);
  for (int burst = 0; burst < 10 && !state.died(); ++burst) {
    for (int i = 0; i < 500 && !state.died(); ++i) state.step(rng);
    state.check_invariants();
    CHECK(state.alive_count() == 2 * state.born_count() - state.n() - 1);
  }
}

TEST_CASE("the elder label never decreases") {
  const RateModel m = make_builtin("ua_geom_death");
  Rng rng = derive_stream(7, 3);
  TreeState state(&m);
  VertexLabel elder = state.oldest_alive();
  for (int i = 0; i < 4000 && !state.died(); ++i) {
    state.step(rng);
    if (state.died()) break;
    const VertexLabel now = state.oldest_alive();
    REQUIRE(now >= elder);
    elder = now;
  }
}

TEST_CASE("top_labels orders by degree then label and pads with kNoVertex") {
  const RateModel m = make_builtin("pa_pure");
  Rng rng = derive_stream(11, 0);
  TreeState state(&m);
  for (int i = 0; i < 200; ++i) state.step(rng);

  std::vector<VertexLabel> top;
  state.top_labels(3, top);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == state.max_degree_vertex());
  CHECK(state.vertex(top[0]).degree >= state.vertex(top[1]).degree);
  CHECK(state.vertex(top[1]).degree >= state.vertex(top[2]).degree);
  if (state.vertex(top[0]).degree == state.vertex(top[1]).degree) {
    CHECK(top[0] < top[1]);
  }

  // More slots than alive vertices: the tail is padded.
  TreeState fresh(&m);
  fresh.top_labels(4, top);
  REQUIRE(top.size() == 4);
  CHECK(top[0] == 1);
  CHECK(top[1] == kNoVertex);
  CHECK(top[3] == kNoVertex);
}

TEST_CASE("an exactly solvable survival probability") {
  // b = 1 and d = (100, 0, 0, ...): the tree survives exactly when the
  // very first event is a birth, which has probability 1/101; afterwards
  // the root can never die.
  const RateModel m(RateSequence::constant(1.0),
                    RateSequence::table_then_constant({100.0}, 0.0));
  const std::int64_t replicas = 8000;
  std::int64_t survived = 0;
  for (std::int64_t i = 0; i < replicas; ++i) {
    Rng rng = derive_stream(2024, static_cast<std::uint64_t>(i));
    TreeState state(&m);
    for (int s = 0; s < 50 && !state.died(); ++s) state.step(rng);
    if (!state.died()) ++survived;
  }
  const double p = 1.0 / 101.0;
  const double se = std::sqrt(p * (1.0 - p) / double(replicas));
  CHECK(std::abs(double(survived) / double(replicas) - p) <= 4.0 * se);
}

TEST_CASE("run_discrete records checkpoints and survives pure birth") {
  const RateModel m = make_builtin("pa_pure");
  Rng rng = derive_stream(5, 0);
  const Trajectory t = run_discrete(m, 500, {10, 100, 500}, 2, rng);
  CHECK(t.survived);
  CHECK(t.final_n == 500);
  CHECK(t.death_step == -1);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].n == 10);
  CHECK(t.rows[2].n == 500);
  for (const CheckpointRow& row : t.rows) {
    // Pure birth: every born vertex stays alive, so alive = n + 1.
    CHECK(row.alive == row.n + 1);
    CHECK(row.oldest == 1);
    REQUIRE(row.top.size() == 2);
    CHECK(row.top[0] != kNoVertex);
  }
  CHECK(t.hub_changes.size() == 2);
  for (const auto& changes : t.hub_changes) {
    for (std::int64_t s : changes) {
      CHECK(s >= 1);
      CHECK(s <= 500);
    }
  }
}

TEST_CASE("run_discrete freezes checkpoints after the tree dies") {
  // d so large the very first event is almost surely a death.
  const RateModel m(RateSequence::constant(1.0), RateSequence::constant(1e6));
  Rng rng = derive_stream(1, 0);
  const Trajectory t = run_discrete(m, 100, {1, 50, 100}, 1, rng);
  REQUIRE_FALSE(t.survived);
  REQUIRE(t.death_step == 1);
  CHECK(t.final_n == 1);
  REQUIRE(t.rows.size() == 3);
  for (const CheckpointRow& row : t.rows) {
    CHECK(row.alive == 0);
    CHECK(row.oldest == kNoVertex);
    CHECK(row.max_degree == -1);
    CHECK(row.top[0] == kNoVertex);
  }
  CHECK(t.rows[1].n == 50);
}

TEST_CASE("geometric_checkpoints spans [1, steps] strictly increasing") {
  const auto grid = geometric_checkpoints(20000, std::pow(20000.0, 1.0 / 31.0));
  REQUIRE_FALSE(grid.empty());
  CHECK(grid.front() >= 1);
  CHECK(grid.back() == 20000);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  CHECK(grid.size() == 32);

  // A huge ratio still contains the endpoint.
  const auto coarse = geometric_checkpoints(1000, 1e9);
  CHECK(coarse.back() == 1000);
}

TEST_CASE("replays are bit-identical for equal streams") {
  const RateModel m = make_builtin("pa_unit_death");
  Rng r1 = derive_stream(31, 4);
  Rng r2 = derive_stream(31, 4);
  const Trajectory a = run_discrete(m, 2000, geometric_checkpoints(2000, 2.0), 2, r1);
  const Trajectory b = run_discrete(m, 2000, geometric_checkpoints(2000, 2.0), 2, r2);
  CHECK(a.survived == b.survived);
  CHECK(a.final_n == b.final_n);
  CHECK(a.death_step == b.death_step);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].oldest == b.rows[i].oldest);
    CHECK(a.rows[i].top == b.rows[i].top);
    CHECK(a.rows[i].alive == b.rows[i].alive);
  }
  CHECK(a.hub_changes == b.hub_changes);
}

}  // TEST_SUITE

/**
 * Engine throughput: events per second for the discrete stepper, the
 * Gillespie stepper, the clock-oracle stepper, and the direct lifeline
 * sampler.  Dead populations are reset inside the loop; resets are rare
 * once a run escapes the small-n regime, so the figures read as sustained
 * event throughput.
 */

#include <benchmark/benchmark.h>

#include "pavd/ctbp_sim.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

namespace {

using namespace pavd;

void BM_DiscreteStep(benchmark::State& state) {
  const RateModel model = make_builtin("pa_unit_death");
  Rng rng(1);
  TreeState tree(&model);
  tree.reset();
  for (auto _ : state) {
    if (tree.died()) tree.reset();
    tree.step(rng);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DiscreteStep);

void BM_GillespieStep(benchmark::State& state) {
  const RateModel model = make_builtin("pa_unit_death");
  Rng rng(2);
  BPState pop(&model);
  for (auto _ : state) {
    if (pop.z_alive() == 0) pop.reset();
    benchmark::DoNotOptimize(pop.step(rng));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GillespieStep);

void BM_ClockOracleStep(benchmark::State& state) {
  const RateModel model = make_builtin("pa_unit_death");
  Rng rng(3);
  ClockOracle pop(&model, rng);
  for (auto _ : state) {
    if (pop.z_alive() == 0) pop = ClockOracle(&model, rng);
    benchmark::DoNotOptimize(pop.step(rng));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ClockOracleStep);

void BM_SampleLifeline(benchmark::State& state) {
  const RateModel model = make_builtin("pa_unit_death");
  Rng rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_lifeline(model, rng));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleLifeline);

}  // namespace

BENCHMARK_MAIN();

/**
 * Numerical-layer costs: one Laplace-transform series evaluation, one
 * Malthusian root solve, and the preimage/compensator lookups that sit in
 * the inner loop of the centering predictions.
 */

#include <benchmark/benchmark.h>

#include "pavd/analytics.hpp"
#include "pavd/rate_model.hpp"

namespace {

using namespace pavd;

void BM_MuHat(benchmark::State& state) {
  const RateModel model = make_builtin("pa_geom_death");
  double lambda = 1.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mu_hat(model, lambda));
    lambda = lambda == 1.5 ? 1.75 : 1.5;  // defeat any single-value caching
  }
}
BENCHMARK(BM_MuHat);

void BM_Malthusian(benchmark::State& state) {
  const RateModel model = make_builtin("pa_geom_death");
  for (auto _ : state) {
    benchmark::DoNotOptimize(malthusian(model));
  }
}
BENCHMARK(BM_Malthusian);

void BM_Phi1Inv(benchmark::State& state) {
  const RateModel model = make_builtin("pa_unit_death");
  double y = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.phi1_inv(y));
    y += 0.03125;
    if (y > 12.0) y = 0.5;
  }
}
BENCHMARK(BM_Phi1Inv);

void BM_KAlpha(benchmark::State& state) {
  const RateModel model = make_builtin("ua_geom_death");
  double t = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.k_alpha(t));
    t += 0.03125;
    if (t > 6.0) t = 0.25;
  }
}
BENCHMARK(BM_KAlpha);

}  // namespace

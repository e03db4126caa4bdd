#include <benchmark/benchmark.h>

#include "chaoscale/functional.hpp"
#include "chaoscale/measure.hpp"
#include "chaoscale/model.hpp"
#include "chaoscale/rng.hpp"
#include "chaoscale/simulate.hpp"

using namespace chaoscale;

namespace {

McKVModel ou() {
  return builtin_model("mean_field_ou", {{"a", 1.0}, {"c", 0.5}, {"sigma", 0.4}, {"T", 1.0}},
                       InitialLaw(DiscreteLaw::bernoulli(0.5)));
}

void BM_PhiloxNormal(benchmark::State& state) {
  const RngStream rng(42, 0, 0, 0);
  std::uint32_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal(i++, 0, 0));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxNormal);

void BM_EulerStep(benchmark::State& state) {
  const auto model = ou();
  const RngStream rng(42, 0, 0, 0);
  const auto s0 = initial_state(model, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(step(s0, model, 0.01, rng, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerStep)->RangeMultiplier(4)->Range(64, 4096);

void BM_ExactLinearStep(benchmark::State& state) {
  const auto model = ou();
  const RngStream rng(42, 0, 0, 0);
  const auto s0 = initial_state(model, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(step_exact_linear(s0, model, 1.0, rng, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExactLinearStep)->RangeMultiplier(4)->Range(64, 4096);

void BM_Enumeration(benchmark::State& state) {
  const auto law = DiscreteLaw::on_line({-1.0, 0.0, 2.0}, {0.3, 0.5, 0.2});
  const auto u = FunctionalWithDerivatives::moment_cylinder(ScalarFunction::power(4));
  for (auto _ : state) {
    double acc = 0;
    enumerate_empirical(law, static_cast<unsigned>(state.range(0)))
        .for_each([&](const Outcome& o) { acc += o.probability * u.eval(o.measure); });
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_Enumeration)->Arg(8)->Arg(32)->Arg(128);

}  // namespace
BENCHMARK_MAIN();

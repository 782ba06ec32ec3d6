#include <benchmark/benchmark.h>

#include <memory>

#include "cvna/clearing_engine.hpp"
#include "cvna/interbank_graph.hpp"
#include "cvna/shock_model.hpp"
#include "cvna/threshold_analytics.hpp"

using namespace cvna;

namespace {

const ShockDistribution kDist({-1.1, -0.75, 0.0}, {0.02, 0.09, 0.89});

void BM_GenerateGraph(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(generate_k_regular(2000, k, seed++));
}
BENCHMARK(BM_GenerateGraph)->Arg(10)->Arg(212)->Arg(1000)->Arg(3998)->Unit(benchmark::kMillisecond);

void BM_RunCascade(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const double leverage = static_cast<double>(state.range(1));
  auto g = std::make_shared<const RegularGraph>(generate_k_regular(2000, k, 3));
  const FinancialSystem sys = build_system(g, leverage);
  const ShockDistribution d = kDist.with_rho(0.1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_cascade(sys, sample_shocks(d, 2000, seed++)));
}
BENCHMARK(BM_RunCascade)->Args({10, 8})->Args({1000, 8})->Args({3998, 8})->Args({3998, 14})
    ->Unit(benchmark::kMicrosecond);

void BM_ThresholdCascade(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const RegularGraph g = generate_k_regular(2000, k, 3);
  const ShockDistribution d = kDist.with_rho(0.1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(threshold_cascade(g, sample_shocks(d, 2000, seed++), 8.0));
}
BENCHMARK(BM_ThresholdCascade)->Arg(10)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_FixedPoint(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto problem =
      make_mean_field_problem(k, 8.0, kDist.equities(), std::vector<double>{0.03, 0.09, 0.88});
  for (auto _ : state) benchmark::DoNotOptimize(solve_q_of_N(problem));
}
BENCHMARK(BM_FixedPoint)->Arg(10)->Arg(212)->Arg(3998);

void BM_ExpectedUncorrelated(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(expected_q_uncorrelated(2000, kDist, 212, 2.0));
}
BENCHMARK(BM_ExpectedUncorrelated)->Unit(benchmark::kMillisecond);

void BM_ExpectedCorrelated(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const ShockDistribution d = kDist.with_rho(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(expected_q_correlated(d, k, 8.0));
}
BENCHMARK(BM_ExpectedCorrelated)->Arg(212)->Arg(3998)->Unit(benchmark::kMillisecond);

void BM_LimitCorrelated(benchmark::State& state) {
  const ShockDistribution d = kDist.with_rho(0.1);
  for (auto _ : state) benchmark::DoNotOptimize(limit_correlated(d, 8.0));
}
BENCHMARK(BM_LimitCorrelated)->Unit(benchmark::kMicrosecond);

void BM_CorrelatedPmf(benchmark::State& state) {
  const ShockDistribution d = kDist.with_rho(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(correlated_pmf({40, 180, 1780}, d));
}
BENCHMARK(BM_CorrelatedPmf)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

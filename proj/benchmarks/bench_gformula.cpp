#include <random>

#include <benchmark/benchmark.h>

#include "gformula/estimator.hpp"
#include "gformula/geo.hpp"
#include "gformula/mle.hpp"
#include "gformula/simulation.hpp"

using namespace gformula;

namespace {

Dataset study_dataset(int m) {
  DgpConfig cfg = standard_dgp_config();
  cfg.m = m;
  return generate_dataset(cfg, 0);
}

void BM_FitModels(benchmark::State& state) {
  const Dataset d = study_dataset(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_treatment_model(d));
    benchmark::DoNotOptimize(fit_outcome_model(d, OutcomeDefinition::overall));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitModels)->Arg(125)->Arg(1000)->Arg(10000);

void BM_EstimatePolicies(benchmark::State& state) {
  const Dataset d = study_dataset(static_cast<int>(state.range(0)));
  EstimationOptions o;
  o.alphas = {0.4, 0.5, 0.6};
  o.contrasts = {{0.6, 0.4}, {0.6, 0.5}, {0.5, 0.4}};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_policies(d, o));
}
BENCHMARK(BM_EstimatePolicies)->Arg(125)->Arg(1000);

void BM_AnalyticTruth(benchmark::State& state) {
  const DgpConfig cfg = standard_dgp_config();
  for (auto _ : state) benchmark::DoNotOptimize(analytic_truth(cfg, 0.5));
}
BENCHMARK(BM_AnalyticTruth);

void BM_ClusterHouseholds(benchmark::State& state) {
  std::mt19937_64 engine(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<HouseholdPoint> pts;
  for (int i = 0; i < state.range(0); ++i)
    pts.push_back({"h" + std::to_string(i), u(engine), u(engine), {}});
  const auto linkage = state.range(1) ? Linkage::complete : Linkage::single;
  for (auto _ : state) benchmark::DoNotOptimize(cluster_households(pts, 5.0, linkage));
}
BENCHMARK(BM_ClusterHouseholds)->Args({500, 0})->Args({2000, 0})->Args({500, 1})->Args({2000, 1});

}  // namespace

BENCHMARK_MAIN();

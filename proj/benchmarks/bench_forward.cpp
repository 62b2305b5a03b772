#include <benchmark/benchmark.h>

#include "cavity_bayes/bayes.hpp"
#include "cavity_bayes/forward.hpp"
#include "cavity_bayes/hausdorff.hpp"
#include "cavity_bayes/priors.hpp"

namespace cb = cavity_bayes;

namespace {

const cb::geometry::OuterDomain kUnit = cb::geometry::OuterDomain::unit_disk();

cb::geometry::ConductorDomain bench_domain() {
  return cb::geometry::ConductorDomain(
      kUnit, cb::geometry::CavitySet::with_default_margins({{cb::make_point(0.15, 0.15), 0.2}}, kUnit));
}

void BM_SimulatePath(benchmark::State& state) {
  const auto d = bench_domain();
  cb::forward::SolverConfig cfg;
  cfg.step = 1.0 / static_cast<double>(state.range(0));
  std::uint64_t path = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cb::forward::simulate_path(cb::make_point(1.0, 0.0), 1.0, d,
                                                        cb::forward::BoundaryFlux::constant(1.0), cfg, path++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePath)->Arg(250)->Arg(1000)->Arg(4000);

void BM_Forward(benchmark::State& state) {
  const auto d = bench_domain();
  cb::ObservationGrid grid;
  cb::forward::SolverConfig cfg;
  cfg.step = 2e-3;
  cfg.paths = static_cast<std::size_t>(state.range(0));
  cfg.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cb::forward::forward(d, grid, cb::forward::BoundaryFlux::constant(1.0), cfg));
  }
}
BENCHMARK(BM_Forward)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
  const auto a = bench_domain();
  const auto b = cb::geometry::ConductorDomain(
      kUnit, cb::geometry::CavitySet::with_default_margins({{cb::make_point(0.2, 0.1), 0.25}}, kUnit));
  for (auto _ : state) benchmark::DoNotOptimize(cb::geometry::hausdorff_distance(a, b));
}
BENCHMARK(BM_Hausdorff)->Unit(benchmark::kMillisecond);

void BM_Posterior(benchmark::State& state) {
  cb::bayes::EvaluatedPrior prior{cb::priors::enumerate_finite(cb::priors::benchmark_family()), {}};
  for (std::size_t k = 0; k < prior.size(); ++k) {
    prior.forward_values.push_back(std::vector<double>(16, 0.01 * static_cast<double>(k)));
  }
  const cb::bayes::NoiseModel noise{0.05, 16};
  const std::vector<double> y(16, 0.07);
  for (auto _ : state) benchmark::DoNotOptimize(cb::bayes::posterior(prior, y, noise));
}
BENCHMARK(BM_Posterior);

}  // namespace

BENCHMARK_MAIN();

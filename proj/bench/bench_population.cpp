// DE population fitness evaluation: serial reference against the OpenMP
// kernel, on the two-body lunar raise with a one-day horizon.

#include "cislunar/epoch.hpp"
#include "cislunar/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace cislunar;

namespace {

TransferScenario raise() {
  TransferScenario s;
  s.id = "raise";
  s.departure = DepartureKind::FIXED_ORBIT;
  ClassicalElements c;
  c.a = 1.2 * bodies::moon.radius_km;
  s.fixed_departure = coe_to_mee(c);
  s.target = {2.0 * bodies::moon.radius_km, 0.0, 0.0, BodyId::MOON};
  s.perturbations = false;
  s.epoch_lo = s.epoch_hi = utc_to_tdb("2025-05-25T00:00:00Z");
  s.tof_lo_s = 0.5 * 86400.0;
  s.tof_hi_s = 1.0 * 86400.0;
  return s;
}

struct Setup {
  TransferScenario scenario = raise();
  SolverSettings settings;
  std::vector<std::vector<double>> population;
  ObjectiveFn f;

  explicit Setup(std::size_t n) {
    const SearchBox box = scenario_box(scenario);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    population.assign(n, std::vector<double>(box.size()));
    for (auto& v : population)
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = box.lo[k] + u(rng) * (box.hi[k] - box.lo[k]);
    f = [this](const std::vector<double>& v) {
      return evaluate_fitness(UnknownVector::from_vector(v), scenario, settings).j;
    };
  }
};

void BM_PopulationSerial(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population_serial(s.f, s.population));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PopulationParallel(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population_parallel(s.f, s.population));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PopulationSerial)->Arg(8)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PopulationParallel)->Arg(8)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

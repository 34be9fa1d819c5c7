#include <benchmark/benchmark.h>

#include <omp.h>

#include "cqm/estimator.hpp"

namespace {

cqm::EnsembleSpec spec(std::uint64_t n_traj, int workers) {
    cqm::EnsembleSpec s;
    s.model.eps_up = s.model.eps_down = -3.0;
    s.model.hubbard_u = 6.0;
    s.model.mu_left = 0.5;
    s.model.mu_right = -0.5;
    s.model.n_modes_per_lead = 100;
    s.quant.delta_up = s.quant.delta_down = 0.24;
    s.integrator.t_max = 5.0;
    s.integrator.output_grid = cqm::IntegratorConfig::uniform_grid(5.0, 0.25);
    s.observables = {cqm::Observable::population, cqm::Observable::current_left};
    s.seeds.master_seed = 1;
    s.n_traj = n_traj;
    s.workers = workers;
    return s;
}

void BM_serial(benchmark::State& state) {
    const cqm::EnsembleSpec s = spec(static_cast<std::uint64_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(cqm::run_ensemble_serial(s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_openmp(benchmark::State& state) {
    const cqm::EnsembleSpec s = spec(static_cast<std::uint64_t>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(cqm::run_ensemble(s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void worker_counts(benchmark::internal::Benchmark* b) {
    const int max = omp_get_max_threads();
    for (int w = 1; w <= max; w *= 2) b->Args({256, w});
    if ((max & (max - 1)) != 0) b->Args({256, max});
}

}  // namespace

BENCHMARK(BM_serial)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_openmp)->Apply(worker_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

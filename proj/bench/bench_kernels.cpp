#include "opo/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace opo;
using namespace opo::kernels;

namespace
{
const CounterRng rng(1);

void homodyne_serial(benchmark::State &st)
{
    HomodyneBlock b{0.65, 1e-6, 1e-7, static_cast<std::uint64_t>(st.range(0)), 0};
    for (auto _ : st) {
        benchmark::DoNotOptimize(block_power_serial(b, rng));
        ++b.block;
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void homodyne_parallel(benchmark::State &st)
{
    HomodyneBlock b{0.65, 1e-6, 1e-7, static_cast<std::uint64_t>(st.range(0)), 0};
    for (auto _ : st) {
        benchmark::DoNotOptimize(block_power_parallel(b, rng));
        ++b.block;
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

GridSpec grid(int n) { return {35.2, 36.0, 37.0, -0.2, 0.8, n, n}; }

void landscape_serial(benchmark::State &st)
{
    const optics::TuningResponse r;
    for (auto _ : st)
        benchmark::DoNotOptimize(tuning_grid_scan_serial(grid(static_cast<int>(st.range(0))), r));
}

void landscape_parallel(benchmark::State &st)
{
    const optics::TuningResponse r;
    for (auto _ : st)
        benchmark::DoNotOptimize(tuning_grid_scan_parallel(grid(static_cast<int>(st.range(0))), r));
}

ThresholdTrials trials(int n) { return {{0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.20, 0.23}, 0.87, 0.02, n}; }

void montecarlo_serial(benchmark::State &st)
{
    for (auto _ : st)
        benchmark::DoNotOptimize(threshold_fit_trials_serial(trials(static_cast<int>(st.range(0))), rng));
}

void montecarlo_parallel(benchmark::State &st)
{
    for (auto _ : st)
        benchmark::DoNotOptimize(threshold_fit_trials_parallel(trials(static_cast<int>(st.range(0))), rng));
}
} // namespace

BENCHMARK(homodyne_serial)->Arg(6000)->Arg(1 << 20);
BENCHMARK(homodyne_parallel)->Arg(6000)->Arg(1 << 20);
BENCHMARK(landscape_serial)->Arg(201)->Arg(801);
BENCHMARK(landscape_parallel)->Arg(201)->Arg(801);
BENCHMARK(montecarlo_serial)->Arg(1000);
BENCHMARK(montecarlo_parallel)->Arg(1000);

BENCHMARK_MAIN();

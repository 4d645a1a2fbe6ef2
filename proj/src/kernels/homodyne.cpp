#include "opo/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace opo::kernels
{
namespace
{
constexpr std::uint64_t kChunk = 2048;
constexpr std::uint64_t kParallelMin = 4 * kChunk;

double chunk_sum(const HomodyneBlock &b, const CounterRng &rng, std::uint64_t begin, std::uint64_t end)
{
    double acc = 0.0;
    for (std::uint64_t i = begin; i < end; ++i) {
        const double x = homodyne_sample(b.variance, b.shot, b.electronic, rng, b.block, i);
        acc += x * x;
    }
    return acc;
}
} // namespace

double block_power_serial(const HomodyneBlock &b, const CounterRng &rng)
{
    if (b.samples == 0)
        return 0.0;
    return chunk_sum(b, rng, 0, b.samples) / static_cast<double>(b.samples);
}

double block_power_parallel(const HomodyneBlock &b, const CounterRng &rng)
{
    if (b.samples == 0)
        return 0.0;
    const std::uint64_t nchunks = (b.samples + kChunk - 1) / kChunk;
    std::vector<double> partial(nchunks, 0.0);
    const auto n = static_cast<std::int64_t>(nchunks);

#pragma omp parallel for schedule(static) if (b.samples >= kParallelMin)
    for (std::int64_t c = 0; c < n; ++c) {
        const std::uint64_t begin = static_cast<std::uint64_t>(c) * kChunk;
        partial[c] = chunk_sum(b, rng, begin, std::min(begin + kChunk, b.samples));
    }

    double total = 0.0;
    for (double p : partial)
        total += p;
    return total / static_cast<double>(b.samples);
}

int max_threads() { return omp_get_max_threads(); }
} // namespace opo::kernels

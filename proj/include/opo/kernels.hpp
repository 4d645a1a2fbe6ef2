#ifndef OPO_KERNELS_HPP
#define OPO_KERNELS_HPP

// Data-parallel hot loops. Each kernel has a plain serial reference and an
// OpenMP version. The OpenMP versions reduce over fixed-size chunks in index
// order, so their output is bit-identical for any thread count; they agree
// with the serial reference to rounding.

#include "opo/optics.hpp"
#include "opo/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace opo::kernels
{
// One homodyne difference sample: Gaussian quadrature with variance
// `variance * shot` plus independent electronic noise of power `electronic`.
inline double homodyne_sample(double variance, double shot, double electronic, const CounterRng &rng,
                              std::uint64_t block, std::uint64_t index)
{
    const auto [z_sig, z_el] = rng.normal_pair(Stream::homodyne, block, index);
    return std::sqrt(variance * shot) * z_sig + std::sqrt(electronic) * z_el;
}

struct HomodyneBlock
{
    double variance = 1.0;    // relative to shot noise
    double shot = 0.0;        // shot-noise power in the band, mW
    double electronic = 0.0;  // electronic noise power in the band, mW
    std::uint64_t samples = 0;
    std::uint64_t block = 0;  // counter block, usually the tick index
};

// Mean squared sample over the block: the band-power estimate.
double block_power_serial(const HomodyneBlock &b, const CounterRng &rng);
double block_power_parallel(const HomodyneBlock &b, const CounterRng &rng);

struct GridSpec
{
    double T_A = 0.0;
    double ts_lo = 0.0, ts_hi = 0.0;
    double td_lo = 0.0, td_hi = 0.0;
    int ts_points = 201;
    int td_points = 201;
};

struct GridOptimum
{
    double T_S = 0.0;
    double T_D = 0.0;
    double factor = 0.0;
};

// Dense scan of tuning_factor over (T_S, T_D); ties resolve to the lowest index.
GridOptimum tuning_grid_scan_serial(const GridSpec &grid, const optics::TuningResponse &resp);
GridOptimum tuning_grid_scan_parallel(const GridSpec &grid, const optics::TuningResponse &resp);

struct ThresholdTrials
{
    std::vector<double> pump_powers;  // W
    double p_th = 0.87;
    double relative_noise = 0.02;     // multiplicative gain noise (1 sigma)
    int trials = 1000;
};

// Fitted P_th per trial (NaN where a fit was rejected).
std::vector<double> threshold_fit_trials_serial(const ThresholdTrials &setup, const CounterRng &rng);
std::vector<double> threshold_fit_trials_parallel(const ThresholdTrials &setup, const CounterRng &rng);

int max_threads();
} // namespace opo::kernels

#endif

#include "opo/kernels.hpp"

#include "opo/analysis.hpp"
#include "opo/errors.hpp"

#include <cstdint>
#include <limits>

namespace opo::kernels
{
namespace
{
double one_trial(const ThresholdTrials &setup, const CounterRng &rng, int trial)
{
    std::vector<analysis::GainPoint> points;
    points.reserve(setup.pump_powers.size());
    for (std::size_t i = 0; i < setup.pump_powers.size(); ++i) {
        const double p = setup.pump_powers[i];
        const double z = rng.normal(Stream::fit_noise, static_cast<std::uint64_t>(trial), i);
        points.push_back({p, optics::parametric_gain(p, setup.p_th) * (1.0 + setup.relative_noise * z)});
    }
    try {
        return analysis::fit_threshold(points).p_th;
    } catch (const Error &) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}
void check(const ThresholdTrials &setup)
{
    require(setup.trials >= 0, ErrorCode::domain, "negative trial count");
    for (double p : setup.pump_powers)
        optics::pump_parameter(p, setup.p_th);
}
} // namespace

std::vector<double> threshold_fit_trials_serial(const ThresholdTrials &setup, const CounterRng &rng)
{
    check(setup);
    std::vector<double> out(static_cast<std::size_t>(setup.trials));
    for (int t = 0; t < setup.trials; ++t)
        out[t] = one_trial(setup, rng, t);
    return out;
}

std::vector<double> threshold_fit_trials_parallel(const ThresholdTrials &setup, const CounterRng &rng)
{
    check(setup);
    std::vector<double> out(static_cast<std::size_t>(setup.trials));

#pragma omp parallel for schedule(dynamic, 16)
    for (int t = 0; t < setup.trials; ++t)
        out[t] = one_trial(setup, rng, t);
    return out;
}
} // namespace opo::kernels

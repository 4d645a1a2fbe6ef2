#include "opo/schedule.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <string>

namespace opo::control
{
namespace
{
// Tolerance that absorbs rounding in k * tick at window boundaries.
constexpr double kEdge = 1e-9;
} // namespace

void ScheduleConfig::validate() const
{
    require(mems_rate > 0.0, ErrorCode::config, "MEMS rate must be positive");
    require(duty > 0.0 && duty < 1.0, ErrorCode::config, "duty must lie in (0,1)");
    require(sweep_span >= 0.0, ErrorCode::config, "sweep span must be non-negative");
    require(tick > 0.0 && tick < 0.5 / mems_rate, ErrorCode::config,
            "tick must be shorter than half a MEMS period");
}

std::string_view to_string(MemsPosition pos) noexcept { return pos == MemsPosition::seed ? "seed" : "lo"; }

std::string_view to_string(SweepWaveform w) noexcept
{
    return w == SweepWaveform::triangle ? "triangle" : "sawtooth";
}

SweepWaveform waveform_from_string(std::string_view s)
{
    if (s == "triangle")
        return SweepWaveform::triangle;
    if (s == "sawtooth")
        return SweepWaveform::sawtooth;
    fail(ErrorCode::config, "unknown sweep waveform '" + std::string(s) + "'");
}

std::int64_t period_index(double t, const ScheduleConfig &cfg)
{
    return static_cast<std::int64_t>(std::floor(t / cfg.period() + kEdge));
}

double time_in_period(double t, const ScheduleConfig &cfg)
{
    const double tau = t - static_cast<double>(period_index(t, cfg)) * cfg.period();
    return tau < 0.0 ? 0.0 : tau;
}

MemsPosition mems_position(double t, const ScheduleConfig &cfg)
{
    return time_in_period(t, cfg) < cfg.seed_window() - kEdge ? MemsPosition::seed : MemsPosition::lo;
}

double sweep_phase(double t, const ScheduleConfig &cfg)
{
    require(t >= 0.0, ErrorCode::domain, "sweep_phase needs t >= 0");
    const double tau = time_in_period(t, cfg);
    const double up = cfg.seed_window();
    if (cfg.waveform == SweepWaveform::sawtooth) {
        const double frac = tau / up - std::floor(tau / up + kEdge);
        return cfg.sweep_span * (frac < 0.0 ? 0.0 : frac);
    }
    if (tau < up)
        return cfg.sweep_span * tau / up;
    const double down = cfg.period() - up;
    return cfg.sweep_span * (1.0 - (tau - up) / down);
}
} // namespace opo::control

#ifndef OPO_SCHEDULE_HPP
#define OPO_SCHEDULE_HPP

// MEMS seed/LO switching and the pump-phase sweep synchronised to it.

#include <cstdint>
#include <numbers>
#include <string_view>

namespace opo::control
{
enum class MemsPosition
{
    seed,
    lo
};

enum class SweepWaveform
{
    triangle,  // ramps up through the seed window, back down through the LO window
    sawtooth,  // ramps up through every seed-window-length interval
};

struct ScheduleConfig
{
    double mems_rate = 10.0;  // Hz
    double duty = 0.5;        // seed fraction of each period
    double sweep_span = 10.0 * std::numbers::pi;
    double tick = 1e-3;       // s
    SweepWaveform waveform = SweepWaveform::triangle;

    double period() const { return 1.0 / mems_rate; }
    double seed_window() const { return duty * period(); }
    void validate() const;
};

std::string_view to_string(MemsPosition pos) noexcept;
std::string_view to_string(SweepWaveform w) noexcept;
SweepWaveform waveform_from_string(std::string_view s);

// Index of the switching period containing t, and the offset into it.
std::int64_t period_index(double t, const ScheduleConfig &cfg);
double time_in_period(double t, const ScheduleConfig &cfg);

MemsPosition mems_position(double t, const ScheduleConfig &cfg);

// Pump phase (rad) at time t; 0 at the start of every seed window.
double sweep_phase(double t, const ScheduleConfig &cfg);
} // namespace opo::control

#endif

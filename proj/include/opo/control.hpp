#ifndef OPO_CONTROL_HPP
#define OPO_CONTROL_HPP

// Slow controllers of the apparatus: the laser-frequency walk lock driven by
// the per-window seed maximum, and coordinate-wise temperature optimisation
// on the measured parametric gain.

#include "opo/apparatus.hpp"
#include "opo/schedule.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace opo::control
{
struct LockController
{
    double step_size = 2.0;         // MHz
    double period = 0.1;            // s between updates
    int direction = +1;
    double last_max = 0.0;          // best maximum since the last reversal
    double drop_threshold = 0.005;
    bool engaged = false;

    void validate() const;
};

struct LockUpdate
{
    LockController ctrl;
    double action = 0.0;  // MHz; 0 means hold
};

// One walk step from the latest seed-window maximum. The walk reverses when the
// maximum falls more than drop_threshold below the best maximum seen since the
// previous reversal.
LockUpdate lock_update(LockController ctrl, double observed_max);

enum class LockState
{
    off,
    acquiring,
    locked,
    lost,
};

std::string_view to_string(LockState s) noexcept;

struct WindowReading
{
    double t_start = 0.0;
    double max = 0.0;
    double min = 0.0;
    double gain = 1.0;
    double transmission = 0.0;  // max / (reference * gain): on-resonance fraction
};

struct AcquisitionConfig
{
    double step = 50.0;       // MHz between coarse probes
    double range = 2000.0;    // MHz either side of the start
    double capture = 0.5;     // fraction of peak transmission that counts as found
};

// Drives an apparatus tick by tick and runs the lock once per seed window.
class LockLoop
{
public:
    LockLoop(sim::Apparatus &apparatus, LockController ctrl, AcquisitionConfig acq = {});

    sim::TickOutputs tick();
    // Runs ticks until `windows` further seed windows have been evaluated.
    void run_windows(int windows);

    void engage();
    void disengage();

    LockState state() const { return state_; }
    const LockController &controller() const { return ctrl_; }
    const std::optional<WindowReading> &last_window() const { return last_; }
    long windows_seen() const { return windows_; }
    long lost_events() const { return lost_events_; }
    double total_correction() const { return correction_; }
    sim::Apparatus &apparatus() { return apparatus_; }

private:
    void close_window();

    sim::Apparatus &apparatus_;
    LockController ctrl_;
    AcquisitionConfig acq_;
    LockState state_ = LockState::off;
    std::vector<double> times_;
    std::vector<double> dr_;
    std::optional<WindowReading> last_;
    long windows_ = 0;
    long lost_events_ = 0;
    double correction_ = 0.0;
    double acq_origin_ = 0.0;
    int acq_probe_ = 0;
    bool in_seed_ = false;
};

struct LockRun
{
    std::vector<double> time;
    std::vector<double> abs_detuning;  // MHz, one per tick
    double acquired_at = -1.0;         // s; negative when never locked
    long lost_events = 0;
};

LockRun run_lock(sim::Apparatus &apparatus, const LockController &ctrl, double duration,
                 const AcquisitionConfig &acq = {});

enum class TempStage
{
    blue_resonance,
    interference,
    done,
};

struct TempOptimizer
{
    TempStage stage = TempStage::blue_resonance;
    double probe_step = 0.05;   // degC, initial symmetric probes
    double shrink = 0.6180339887498949;
    double tolerance = 0.005;   // degC
    double ts_range = 0.25;     // half-width of the T_S search bracket
    double td_range = 0.30;     // half-width of the T_D search bracket
    double min_temp = 15.0;     // safety bounds for T_1 and T_2
    double max_temp = 60.0;
    int settle_windows = 1;
    int measure_windows = 4;

    void validate() const;
};

struct TempProbe
{
    TempStage stage;
    double T_1;
    double T_2;
    double gain;
};

struct TempResult
{
    double T_S = 0.0;
    double T_D = 0.0;
    double gain = 1.0;
    int probes_blue = 0;
    int probes_interference = 0;
    std::vector<TempProbe> history;
};

// Maximises measured gain over T_S, then over T_D, with T_A held. Needs an
// engaged, holding lock; throws on lock loss, flat gain or bad bounds.
TempResult optimize_temperatures(LockLoop &loop, TempOptimizer opt, double pump_power);
} // namespace opo::control

#endif

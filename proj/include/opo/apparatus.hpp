#ifndef OPO_APPARATUS_HPP
#define OPO_APPARATUS_HPP

// Time-stepped virtual apparatus: laser/cavity detuning with drift, MEMS
// seed/LO switching, synchronised pump-phase sweep, seed transmission on D_R,
// homodyne noise synthesis and a zero-span spectrum analyzer.
//
// Noise is synthesised at baseband: each LO-window tick draws
// 2 * RBW * tick homodyne samples whose variance follows the quadrature
// noise at the analyzer centre frequency, and the analyzer reduces them to a
// band-power estimate followed by the video filter.

#include "opo/analysis.hpp"
#include "opo/kernels.hpp"
#include "opo/optics.hpp"
#include "opo/rng.hpp"
#include "opo/schedule.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace opo::sim
{
using control::MemsPosition;
using control::ScheduleConfig;
using kernels::homodyne_sample;

struct SAConfig
{
    double center_freq = 10.0;  // MHz
    double rbw = 3.0;           // MHz
    double vbw = 100.0;         // Hz
    void validate() const;
};

struct DetectorModel
{
    double electronic_noise_dbm = -70.75;  // at reference_rbw
    double shot_dbm_at_1mw = -71.706;      // shot noise for 1 mW LO at reference_rbw
    double reference_rbw = 3.0;            // MHz
    double bandwidth = 45.0;               // MHz

    double electronic_mw(double rbw) const;
    double shot_mw(double lo_power, double rbw) const;
    void validate() const;
};

struct DriftModel
{
    double random_walk = 0.5;  // MHz / sqrt(s)
    double ramp = 0.0;         // MHz / s
};

struct SeedPath
{
    double power_in = 1.0;            // mW
    double peak_transmission = 0.5;   // on-resonance cavity transmission to D_R
    double detector_noise = 1e-4;     // relative, per sample
};

struct ApparatusConfig
{
    optics::CavityParams cavity;
    optics::EfficiencyBudget efficiency;
    // Detection efficiency used in the noise spectra; empty means efficiency.total().
    std::optional<double> eta = 0.75;
    optics::TuningResponse tuning;
    double kerr_tau = 12.0;       // s
    double kerr_coupling = 0.0;   // MHz per W circulating
    ScheduleConfig schedule;
    SAConfig sa;
    DetectorModel detector;
    DriftModel drift;
    SeedPath seed;

    double detection_efficiency() const { return eta ? *eta : efficiency.total(); }
    void validate() const;
};

struct ApparatusState
{
    std::int64_t tick_index = 0;
    double clock = 0.0;            // s
    double laser_offset = 0.0;     // MHz, laser relative to the nominal cavity resonance
    double drift = 0.0;            // MHz, cavity resonance offset
    optics::ThermalState thermal;
    optics::KerrState kerr;
    double pump_power = 0.0;       // W
    double pump_phase = 0.0;       // rad
    bool sweep_on = true;
    MemsPosition mems = MemsPosition::seed;
    double lo_power = 2.5;         // mW
    double filter = 1.0;           // transmission inserted in the squeezed path
    bool synthesize_homodyne = true;
    double video = -1.0;           // analyzer video-filter state, mW; negative = unset
    std::uint64_t seed = 1;

    // Laser minus (drifted + Kerr-shifted) cavity resonance.
    double detuning() const { return laser_offset - drift - kerr.shift; }
};

struct TickOutputs
{
    double time = 0.0;
    MemsPosition mems = MemsPosition::seed;
    double pump_phase = 0.0;
    double detuning = 0.0;
    double gain = 1.0;         // ideal parametric gain at the current settings
    double dr = 0.0;           // D_R seed power, mW (seed window only)
    double variance = 1.0;     // homodyne quadrature variance (LO window only)
    double band_power = 0.0;   // RBW band-power estimate, mW (0 when synthesis is off)
    double sa_dbm = 0.0;       // video-filtered analyzer reading
};

class Apparatus
{
public:
    explicit Apparatus(ApparatusConfig config, std::uint64_t seed = 1);

    TickOutputs step();

    const ApparatusConfig &config() const { return config_; }
    const ApparatusState &state() const { return state_; }
    void restore(const ApparatusState &s) { state_ = s; }

    double threshold() const { return p_th_; }
    double pump_parameter() const;
    // Seed power on D_R on resonance with the pump off.
    double seed_reference() const { return config_.seed.power_in * config_.seed.peak_transmission; }

    void set_pump_power(double watts);
    void set_lo_power(double mw);
    void set_temperatures(const optics::ThermalState &t);
    void step_laser(double mhz) { state_.laser_offset += mhz; }
    void set_laser_offset(double mhz) { state_.laser_offset = mhz; }
    void set_filter(double transmission);
    void set_sweep(bool on) { state_.sweep_on = on; }
    void set_sa(const SAConfig &sa);
    void set_drift(const DriftModel &d) { config_.drift = d; }
    void set_synthesize_homodyne(bool on) { state_.synthesize_homodyne = on; }

    double tick() const { return config_.schedule.tick; }
    std::uint64_t samples_per_tick() const;

private:
    ApparatusConfig config_;
    ApparatusState state_;
    CounterRng rng_;
    double p_th_;
};

// Zero-span trace point and trace.
struct TracePoint
{
    double time = 0.0;
    double phase = 0.0;
    double power_dbm = 0.0;
    MemsPosition mems = MemsPosition::lo;
};

struct NoiseTrace
{
    SAConfig settings;
    std::vector<TracePoint> points;
};

// Band-power samples (mW, one per tick) reduced to a video-filtered dBm trace.
// Phases and MEMS positions are optional companions of equal length.
NoiseTrace sa_zero_span(std::span<const double> band_power, double tick, const SAConfig &cfg,
                        std::span<const double> phases = {}, std::span<const MemsPosition> mems = {});

// Simulated total analyzer noise versus LO power with the pump off.
std::vector<analysis::NoisePoint> lo_power_scan(std::span<const double> powers, const DetectorModel &detector,
                                                const SAConfig &sa, double tick, int blocks_per_point,
                                                std::uint64_t seed);

void write_trace_csv(std::ostream &out, const NoiseTrace &trace);
NoiseTrace read_trace_csv(std::istream &in);
} // namespace opo::sim

#endif

#ifndef OPO_CONFIG_HPP
#define OPO_CONFIG_HPP

// Run configuration: every module default in one serialisable value. A run is
// reproducible from (RunConfig, command stream).

#include "opo/apparatus.hpp"
#include "opo/control.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace opo
{
struct GainCurveSettings
{
    std::vector<double> pump_powers{0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.20, 0.23};  // W
    int measure_windows = 10;
};

struct NoiseScanSettings
{
    std::vector<double> lo_powers{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0};  // mW
    int blocks_per_point = 400;
};

struct SqueezeSettings
{
    double target_gain = 1.4;
    std::optional<double> pump_power;  // W; overrides target_gain when set
    double lo_power = 2.5;             // mW
    double duration = 10.0;            // s of recorded trace with the pump on
    double reference_duration = 3.0;   // s of pump-off reference
    double lock_settle = 1.0;          // s of locked running before optimisation
    double video_settle = 0.008;       // s skipped at the start of each LO window
};

struct SessionSettings
{
    double telemetry_rate = 20.0;  // Hz of simulated time
    double time_factor = 1.0;      // simulated seconds per wall second; 0 = unpaced
};

struct RunConfig
{
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    sim::ApparatusConfig apparatus;
    // Starting point of each run, relative to the tuning optimum.
    double start_ts_offset = 0.1;
    double start_td_offset = 0.2;
    control::LockController lock;
    control::AcquisitionConfig acquisition;
    control::TempOptimizer optimizer;
    GainCurveSettings gain_curve;
    NoiseScanSettings noise_scan;
    SqueezeSettings squeeze;
    SessionSettings session;

    void validate() const;
};

nlohmann::json to_json(const RunConfig &cfg);
// Strict: unknown keys and type mismatches raise ErrorCode::config.
RunConfig config_from_json(const nlohmann::json &j);
// Accepts // and /* */ comments.
RunConfig load_config(const std::string &path);
RunConfig parse_config(const std::string &text);
} // namespace opo

#endif

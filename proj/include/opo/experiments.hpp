#ifndef OPO_EXPERIMENTS_HPP
#define OPO_EXPERIMENTS_HPP

// End-to-end measurement pipelines behind the command-line tool: gain versus
// pump power with threshold fit, LO-power noise calibration, and the full
// squeezing run.

#include "opo/analysis.hpp"
#include "opo/apparatus.hpp"
#include "opo/config.hpp"
#include "opo/control.hpp"
#include "opo/errors.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace opo::experiments
{
struct PointError
{
    double pump_power = 0.0;
    ErrorCode code = ErrorCode::domain;
    std::string message;
};

struct GainCurveResult
{
    std::vector<analysis::GainPoint> points;
    std::vector<PointError> errors;
    std::optional<analysis::ThresholdFit> fit;
    std::optional<std::string> fit_error;
    double configured_threshold = 0.0;
    bool lock_failure = false;
};

struct NoiseScanResult
{
    std::vector<analysis::NoisePoint> points;
    analysis::ShotNoiseFit fit;
};

struct SqueezeRunResult
{
    sim::NoiseTrace trace;
    analysis::SqueezeResult result;
    analysis::ShotNoiseFit calibration;
    double pump_power = 0.0;
    double measured_gain = 1.0;
    double reference_dbm = 0.0;
    std::optional<double> filter;
    double baseline_shift_db = 0.0;  // pump-off level with the filter minus without
    control::TempResult temperatures;
    int windows = 0;
};

// A locked apparatus at the configured start temperatures.
struct Bench
{
    explicit Bench(const RunConfig &cfg);
    sim::Apparatus apparatus;
    control::LockLoop loop;
    void acquire(double settle_seconds);
};

GainCurveResult gain_curve(const RunConfig &cfg, const std::vector<double> &pump_powers);
NoiseScanResult noise_scan(const RunConfig &cfg, const std::vector<double> &lo_powers);
SqueezeRunResult squeeze_run(const RunConfig &cfg, double duration, std::optional<double> filter);

nlohmann::json report(const GainCurveResult &r);
nlohmann::json report(const NoiseScanResult &r);
nlohmann::json report(const SqueezeRunResult &r);
nlohmann::json report(const analysis::ThresholdFit &fit);
nlohmann::json report(const analysis::ShotNoiseFit &fit);

// Flat `key = value` lines with dotted keys for nested objects.
std::string flat_text(const nlohmann::json &j);
// Writes <dir>/<stem>.json and <dir>/<stem>.txt; creates dir.
void write_report(const std::string &dir, const std::string &stem, const nlohmann::json &j);
} // namespace opo::experiments

#endif

#ifndef OPO_ANALYSIS_HPP
#define OPO_ANALYSIS_HPP

// Data reduction: threshold fit, shot-noise calibration, electronic-noise
// correction and robust trace extrema.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace opo::analysis
{
struct GainPoint
{
    double pump_power = 0.0;  // W
    double gain = 1.0;
};

struct NoisePoint
{
    double lo_power = 0.0;  // mW
    double noise_dbm = 0.0; // at the analyzer RBW
};

struct SqueezeResult
{
    double raw_sq_db = 0.0;
    double raw_asq_db = 0.0;
    double corrected_sq_db = 0.0;
    double corrected_asq_db = 0.0;
    double clearance = 0.0;  // (shot + electronic) / electronic at the LO power used
};

struct ThresholdFit
{
    double p_th = 0.0;      // W
    double rms_residual = 0.0;
    int iterations = 0;
};

struct ShotNoiseFit
{
    double slope = 0.0;            // mW of noise per mW of LO
    double offset_dbm = 0.0;       // electronic floor
    double rms_residual_db = 0.0;
    double max_residual_db = 0.0;  // over all points
    double shot_limited_up_to = 0.0;  // largest LO power with every residual below the limit

    double offset_mw() const;
    // (shot + electronic) / electronic at the given LO power.
    double clearance_at(double lo_power) const;
};

struct Extrema
{
    double t_start = 0.0;
    double max = 0.0;
    double min = 0.0;
};

double to_db(double linear);
double from_db(double db);
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

// Linear-interpolated percentile (0..100) of an unsorted sample.
double percentile(std::vector<double> values, double pct);

// Least-squares fit of G(P) = (1 - sqrt(P/P_th))^-2 in the single parameter P_th.
ThresholdFit fit_threshold(std::span<const GainPoint> points);

// Linear regression of noise power (in linear mW) against LO power.
ShotNoiseFit fit_shot_noise(std::span<const NoisePoint> points, double residual_limit_db = 0.1);

// Removes the electronic contribution from a level measured against a
// (shot + electronic) reference; e = 1/clearance.
double correct_electronic(double raw_db, double clearance);

// Per-window robust extrema: the (100 - pct) and pct percentiles of the
// moving-average-smoothed samples in each window. Windows are laid out from
// the first timestamp.
std::vector<Extrema> extract_minmax(std::span<const double> times, std::span<const double> values,
                                    double window, double arch_period, double pct = 5.0,
                                    int smooth_samples = 1);

// CSV: `pump_w,gain` and `lo_mw,noise_dbm`.
std::vector<GainPoint> read_gain_csv(std::istream &in);
std::vector<NoisePoint> read_noise_csv(std::istream &in);
void write_gain_csv(std::ostream &out, std::span<const GainPoint> points);
void write_noise_csv(std::ostream &out, std::span<const NoisePoint> points);
} // namespace opo::analysis

#endif

#include "opo/analysis.hpp"

#include "opo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace opo::analysis
{
double to_db(double linear)
{
    require(linear > 0.0, ErrorCode::domain, "dB conversion needs a positive linear value");
    return 10.0 * std::log10(linear);
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_mw(double dbm) { return from_db(dbm); }
double mw_to_dbm(double mw) { return to_db(mw); }

double percentile(std::vector<double> values, double pct)
{
    require(!values.empty(), ErrorCode::insufficient_data, "percentile of an empty sample");
    require(pct >= 0.0 && pct <= 100.0, ErrorCode::domain, "percentile outside [0,100]");
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ThresholdFit fit_threshold(std::span<const GainPoint> points)
{
    require(points.size() >= 3, ErrorCode::fit, "threshold fit needs at least 3 points");
    double p_max = 0.0;
    for (const auto &pt : points) {
        require(pt.pump_power >= 0.0 && std::isfinite(pt.pump_power), ErrorCode::fit, "invalid pump power");
        require(pt.gain >= 1.0 && std::isfinite(pt.gain), ErrorCode::fit, "gain point below 1");
        p_max = std::max(p_max, pt.pump_power);
    }
    require(p_max > 0.0, ErrorCode::fit, "all points at zero pump");

    // Work in s = 1/sqrt(P_th): model G = (1 - sqrt(P) s)^-2, feasible for s < 1/sqrt(p_max).
    const double s_limit = 1.0 / std::sqrt(p_max);

    // Start from the linearised problem 1/sqrt(G) = 1 - sqrt(P) s.
    double num = 0.0, den = 0.0;
    for (const auto &pt : points) {
        num += std::sqrt(pt.pump_power) * (1.0 - 1.0 / std::sqrt(pt.gain));
        den += pt.pump_power;
    }
    double s = std::clamp(num / den, 1e-9 * s_limit, 0.999 * s_limit);

    auto cost = [&](double sv) {
        double c = 0.0;
        for (const auto &pt : points) {
            const double m = 1.0 - std::sqrt(pt.pump_power) * sv;
            const double r = pt.gain - 1.0 / (m * m);
            c += r * r;
        }
        return c;
    };

    double c = cost(s);
    int it = 0;
    bool converged = false;
    for (; it < 200; ++it) {
        double jtr = 0.0, jtj = 0.0;
        for (const auto &pt : points) {
            const double sp = std::sqrt(pt.pump_power);
            const double m = 1.0 - sp * s;
            const double r = pt.gain - 1.0 / (m * m);
            const double j = 2.0 * sp / (m * m * m);
            jtr += j * r;
            jtj += j * j;
        }
        if (jtj <= 0.0)
            break;
        double step = jtr / jtj;
        // Backtrack to stay feasible and non-increasing.
        double trial = s + step;
        double c_trial = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 60; ++k) {
            if (trial > 0.0 && trial < s_limit) {
                c_trial = cost(trial);
                if (c_trial <= c)
                    break;
            }
            step *= 0.5;
            trial = s + step;
        }
        if (!(c_trial <= c))
            break;
        const double ds = trial - s;
        s = trial;
        c = c_trial;
        if (std::abs(ds) <= 1e-14 * s) {
            converged = true;
            break;
        }
    }
    // A stalled backtrack at the minimum also counts when the gradient vanishes.
    if (!converged) {
        double jtr = 0.0, scale = 0.0;
        for (const auto &pt : points) {
            const double sp = std::sqrt(pt.pump_power);
            const double m = 1.0 - sp * s;
            const double r = pt.gain - 1.0 / (m * m);
            jtr += 2.0 * sp / (m * m * m) * r;
            scale += std::abs(2.0 * sp / (m * m * m) * pt.gain);
        }
        converged = std::abs(jtr) <= 1e-9 * scale;
    }
    require(converged, ErrorCode::fit, "threshold fit did not converge");
    require(s > 0.0, ErrorCode::fit, "fit implies an infinite threshold");

    return {1.0 / (s * s), std::sqrt(c / static_cast<double>(points.size())), it};
}

double ShotNoiseFit::offset_mw() const { return dbm_to_mw(offset_dbm); }

double ShotNoiseFit::clearance_at(double lo_power) const
{
    const double e = offset_mw();
    return (slope * lo_power + e) / e;
}

ShotNoiseFit fit_shot_noise(std::span<const NoisePoint> points, double residual_limit_db)
{
    require(points.size() >= 3, ErrorCode::calibration, "shot-noise fit needs at least 3 points");
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto &pt : points) {
        require(pt.lo_power >= 0.0, ErrorCode::calibration, "negative LO power");
        sx += pt.lo_power;
        sy += dbm_to_mw(pt.noise_dbm);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto &pt : points) {
        const double dx = pt.lo_power - mx;
        sxx += dx * dx;
        sxy += dx * (dbm_to_mw(pt.noise_dbm) - my);
    }
    require(sxx > 0.0, ErrorCode::calibration, "LO powers must not all be equal");
    const double slope = sxy / sxx;
    const double offset = my - slope * mx;
    const double lo_span = mx + std::sqrt(sxx / n);
    // A slope this small relative to the floor means there is no shot noise to calibrate.
    require(slope * lo_span > 1e-9 * std::abs(offset) && slope > 0.0, ErrorCode::calibration,
            "fitted shot-noise slope is not positive");
    require(offset > 0.0, ErrorCode::calibration, "fitted electronic floor is not positive");

    ShotNoiseFit fit;
    fit.slope = slope;
    fit.offset_dbm = mw_to_dbm(offset);

    std::vector<NoisePoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const NoisePoint &a, const NoisePoint &b) { return a.lo_power < b.lo_power; });
    double ss = 0.0;
    bool within = true;
    for (const auto &pt : sorted) {
        const double res = pt.noise_dbm - mw_to_dbm(offset + slope * pt.lo_power);
        ss += res * res;
        fit.max_residual_db = std::max(fit.max_residual_db, std::abs(res));
        if (within && std::abs(res) < residual_limit_db)
            fit.shot_limited_up_to = pt.lo_power;
        else
            within = false;
    }
    fit.rms_residual_db = std::sqrt(ss / n);
    return fit;
}

double correct_electronic(double raw_db, double clearance)
{
    require(clearance > 1.0, ErrorCode::domain, "clearance must exceed 1");
    const double e = 1.0 / clearance;
    const double r = from_db(raw_db);
    require(r > e, ErrorCode::unphysical, "measured level at or below the electronic floor");
    return to_db((r - e) / (1.0 - e));
}

std::vector<Extrema> extract_minmax(std::span<const double> times, std::span<const double> values,
                                    double window, double arch_period, double pct, int smooth_samples)
{
    require(times.size() == values.size(), ErrorCode::domain, "times and values differ in length");
    require(window > 0.0 && window >= arch_period, ErrorCode::insufficient_data,
            "window shorter than one modulation arch");
    require(smooth_samples >= 1, ErrorCode::domain, "smoothing length must be >= 1");
    std::vector<Extrema> out;
    if (values.empty())
        return out;

    // Centered moving average, truncated at the ends.
    std::vector<double> smoothed(values.begin(), values.end());
    if (smooth_samples > 1) {
        const auto half = static_cast<std::ptrdiff_t>(smooth_samples / 2);
        const auto n = static_cast<std::ptrdiff_t>(values.size());
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto a = std::max<std::ptrdiff_t>(0, i - half);
            const auto b = std::min<std::ptrdiff_t>(n - 1, i + half);
            double acc = 0.0;
            for (auto k = a; k <= b; ++k)
                acc += values[k];
            smoothed[i] = acc / static_cast<double>(b - a + 1);
        }
    }

    const double t0 = times.front();
    std::size_t i = 0;
    while (i < values.size()) {
        const auto idx = static_cast<long long>(std::floor((times[i] - t0) / window + 1e-9));
        std::vector<double> bucket;
        std::size_t j = i;
        while (j < values.size() &&
               static_cast<long long>(std::floor((times[j] - t0) / window + 1e-9)) == idx)
            bucket.push_back(smoothed[j++]);
        out.push_back({t0 + window * static_cast<double>(idx), percentile(bucket, 100.0 - pct),
                       percentile(bucket, pct)});
        i = j;
    }
    return out;
}

namespace
{
std::vector<std::pair<double, double>> read_pairs(std::istream &in, const char *header)
{
    std::vector<std::pair<double, double>> out;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (first) {
            first = false;
            if (line == header)
                continue;
        }
        std::istringstream ss(line);
        double a = 0.0, b = 0.0;
        char comma = 0;
        if (!(ss >> a >> comma >> b) || comma != ',')
            fail(ErrorCode::config, "malformed CSV line " + std::to_string(lineno) + ": " + line);
        out.emplace_back(a, b);
    }
    return out;
}
} // namespace

std::vector<GainPoint> read_gain_csv(std::istream &in)
{
    std::vector<GainPoint> out;
    for (auto [p, g] : read_pairs(in, "pump_w,gain"))
        out.push_back({p, g});
    return out;
}

std::vector<NoisePoint> read_noise_csv(std::istream &in)
{
    std::vector<NoisePoint> out;
    for (auto [p, n] : read_pairs(in, "lo_mw,noise_dbm"))
        out.push_back({p, n});
    return out;
}

void write_gain_csv(std::ostream &out, std::span<const GainPoint> points)
{
    out << "pump_w,gain\n";
    out.precision(10);
    for (const auto &pt : points)
        out << pt.pump_power << ',' << pt.gain << '\n';
}

void write_noise_csv(std::ostream &out, std::span<const NoisePoint> points)
{
    out << "lo_mw,noise_dbm\n";
    out.precision(10);
    for (const auto &pt : points)
        out << pt.lo_power << ',' << pt.noise_dbm << '\n';
}
} // namespace opo::analysis

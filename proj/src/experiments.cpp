#include "opo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace opo::experiments
{
using nlohmann::json;

namespace
{
sim::Apparatus make_apparatus(const RunConfig &cfg)
{
    cfg.validate();
    sim::Apparatus app(cfg.apparatus, cfg.seed);
    const auto &tun = cfg.apparatus.tuning;
    app.set_temperatures(optics::ThermalState::from_coordinates(tun.T_A_opt, tun.T_S_opt + cfg.start_ts_offset,
                                                                tun.T_D_opt + cfg.start_td_offset));
    app.set_synthesize_homodyne(false);
    return app;
}

double mean_gain(control::LockLoop &loop, int windows)
{
    double acc = 0.0;
    for (int i = 0; i < windows; ++i) {
        loop.run_windows(1);
        if (loop.state() != control::LockState::locked)
            fail(ErrorCode::lock_lost, "lock lost while measuring gain");
        acc += loop.last_window()->gain;
    }
    return acc / windows;
}

// Collects LO-window analyzer readings after the video filter has settled.
struct LoCollector
{
    double settle;
    double lo_window;
    double arch;
    std::vector<std::vector<double>> windows;  // mW per LO window
    std::vector<double> current_t, current_v;
    bool in_lo = false;

    void push(const sim::TickOutputs &o, double tick, const control::ScheduleConfig &sched)
    {
        if (o.mems == control::MemsPosition::lo) {
            if (!in_lo) {
                current_t.clear();
                current_v.clear();
            }
            in_lo = true;
            const double into = control::time_in_period(o.time, sched) - sched.seed_window();
            if (into + 0.5 * tick >= settle) {
                current_t.push_back(o.time);
                current_v.push_back(analysis::dbm_to_mw(o.sa_dbm));
            }
        } else if (in_lo) {
            in_lo = false;
            if (!current_v.empty())
                windows.push_back(current_v);
        }
    }

    double mean() const
    {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto &w : windows)
            for (double v : w) {
                acc += v;
                ++n;
            }
        require(n > 0, ErrorCode::insufficient_data, "no settled LO-window samples recorded");
        return acc / static_cast<double>(n);
    }
};

LoCollector make_collector(const RunConfig &cfg)
{
    const auto &sched = cfg.apparatus.schedule;
    const double lo_window = sched.period() - sched.seed_window();
    double arch = 0.0;
    if (sched.sweep_span > 0.0)
        arch = std::min(lo_window - cfg.squeeze.video_settle, lo_window * 2.0 * std::numbers::pi / sched.sweep_span);
    return {cfg.squeeze.video_settle, lo_window, arch, {}, {}, {}, false};
}

// Runs the lock loop for `seconds` with homodyne synthesis on, feeding the collector.
void record(control::LockLoop &loop, double seconds, LoCollector &col, sim::NoiseTrace *trace)
{
    auto &app = loop.apparatus();
    const auto &sched = app.config().schedule;
    const auto ticks = static_cast<long>(std::llround(seconds / sched.tick));
    for (long i = 0; i < ticks; ++i) {
        const auto o = loop.tick();
        col.push(o, sched.tick, sched);
        if (trace)
            trace->points.push_back({o.time, o.pump_phase, o.sa_dbm, o.mems});
    }
}
} // namespace

Bench::Bench(const RunConfig &cfg) : apparatus(make_apparatus(cfg)), loop(apparatus, cfg.lock, cfg.acquisition) {}

void Bench::acquire(double settle_seconds)
{
    loop.engage();
    const auto &acq = apparatus.config();
    (void)acq;
    for (int i = 0; i < 1000 && loop.state() != control::LockState::locked; ++i)
        loop.run_windows(1);
    if (loop.state() != control::LockState::locked)
        fail(ErrorCode::lock_lost, "lock acquisition did not complete");
    const int windows = static_cast<int>(std::ceil(settle_seconds / apparatus.config().schedule.period()));
    loop.run_windows(windows);
}

GainCurveResult gain_curve(const RunConfig &cfg, const std::vector<double> &pump_powers)
{
    GainCurveResult out;
    Bench bench(cfg);
    out.configured_threshold = bench.apparatus.threshold();
    bench.acquire(cfg.squeeze.lock_settle);

    for (double pump : pump_powers) {
        try {
            require(pump >= 0.0, ErrorCode::domain, "pump power must be non-negative");
            require(pump < out.configured_threshold, ErrorCode::above_threshold,
                    "pump power at or above the OPO threshold");
            if (bench.loop.state() != control::LockState::locked)
                bench.acquire(cfg.squeeze.lock_settle);
            if (pump > 0.0)
                control::optimize_temperatures(bench.loop, cfg.optimizer, pump);
            else
                bench.apparatus.set_pump_power(0.0);
            out.points.push_back({pump, mean_gain(bench.loop, cfg.gain_curve.measure_windows)});
        } catch (const Error &e) {
            out.errors.push_back({pump, e.code(), e.what()});
            if (e.code() == ErrorCode::lock_lost)
                out.lock_failure = true;
        }
    }
    bench.apparatus.set_pump_power(0.0);

    try {
        out.fit = analysis::fit_threshold(out.points);
    } catch (const Error &e) {
        out.fit_error = e.what();
    }
    return out;
}

NoiseScanResult noise_scan(const RunConfig &cfg, const std::vector<double> &lo_powers)
{
    cfg.validate();
    const auto &a = cfg.apparatus;
    NoiseScanResult out;
    out.points = sim::lo_power_scan(lo_powers, a.detector, a.sa, a.schedule.tick, cfg.noise_scan.blocks_per_point,
                                    cfg.seed);
    out.fit = analysis::fit_shot_noise(out.points);
    return out;
}

SqueezeRunResult squeeze_run(const RunConfig &cfg, double duration, std::optional<double> filter)
{
    require(duration > 0.0, ErrorCode::domain, "squeeze run duration must be positive");
    if (filter)
        require(*filter > 0.0 && *filter <= 1.0, ErrorCode::domain, "filter transmission must lie in (0,1]");

    SqueezeRunResult out;
    out.filter = filter;
    out.calibration = noise_scan(cfg, cfg.noise_scan.lo_powers).fit;
    const double clearance = out.calibration.clearance_at(cfg.squeeze.lo_power);

    Bench bench(cfg);
    auto &app = bench.apparatus;
    auto &loop = bench.loop;
    bench.acquire(cfg.squeeze.lock_settle);

    out.pump_power = cfg.squeeze.pump_power ? *cfg.squeeze.pump_power
                                            : optics::pump_for_gain(cfg.squeeze.target_gain, app.threshold());
    if (out.pump_power > 0.0)
        out.temperatures = control::optimize_temperatures(loop, cfg.optimizer, out.pump_power);

    app.set_lo_power(cfg.squeeze.lo_power);
    app.set_synthesize_homodyne(true);
    app.set_pump_power(0.0);

    // Pump-off reference defines 0 dB.
    if (filter) {
        LoCollector bare = make_collector(cfg);
        record(loop, cfg.squeeze.reference_duration, bare, nullptr);
        app.set_filter(*filter);
        LoCollector filtered = make_collector(cfg);
        record(loop, cfg.squeeze.reference_duration, filtered, nullptr);
        out.reference_dbm = analysis::mw_to_dbm(filtered.mean());
        out.baseline_shift_db = analysis::to_db(filtered.mean() / bare.mean());
    } else {
        LoCollector ref = make_collector(cfg);
        record(loop, cfg.squeeze.reference_duration, ref, nullptr);
        out.reference_dbm = analysis::mw_to_dbm(ref.mean());
    }
    const double ref_mw = analysis::dbm_to_mw(out.reference_dbm);

    app.set_pump_power(out.pump_power);
    out.trace.settings = app.config().sa;
    LoCollector col = make_collector(cfg);
    record(loop, duration, col, &out.trace);

    double acc_max = 0.0, acc_min = 0.0;
    for (const auto &w : col.windows) {
        std::vector<double> t(w.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = static_cast<double>(i) * app.tick();
        const double span = static_cast<double>(w.size()) * app.tick();
        const auto ext = analysis::extract_minmax(t, w, span, std::min(col.arch, span));
        acc_max += ext.front().max;
        acc_min += ext.front().min;
    }
    require(!col.windows.empty(), ErrorCode::insufficient_data, "squeeze run recorded no LO windows");
    out.windows = static_cast<int>(col.windows.size());
    const double n = static_cast<double>(col.windows.size());

    auto &r = out.result;
    r.raw_sq_db = analysis::to_db(acc_min / n / ref_mw);
    r.raw_asq_db = analysis::to_db(acc_max / n / ref_mw);
    r.clearance = clearance;
    r.corrected_sq_db = analysis::correct_electronic(r.raw_sq_db, clearance);
    r.corrected_asq_db = analysis::correct_electronic(r.raw_asq_db, clearance);
    if (loop.last_window())
        out.measured_gain = loop.last_window()->gain;
    return out;
}

json report(const analysis::ThresholdFit &fit)
{
    return {{"p_th_w", fit.p_th}, {"rms_residual", fit.rms_residual}, {"iterations", fit.iterations}};
}

json report(const analysis::ShotNoiseFit &fit)
{
    return {{"slope_mw_per_mw", fit.slope},
            {"electronic_floor_dbm", fit.offset_dbm},
            {"rms_residual_db", fit.rms_residual_db},
            {"max_residual_db", fit.max_residual_db},
            {"shot_noise_limited_up_to_mw", fit.shot_limited_up_to}};
}

json report(const GainCurveResult &r)
{
    json j;
    j["configured_threshold_w"] = r.configured_threshold;
    j["points"] = static_cast<int>(r.points.size());
    if (r.fit)
        j["fit"] = report(*r.fit);
    if (r.fit_error)
        j["fit_error"] = *r.fit_error;
    json errs = json::array();
    for (const auto &e : r.errors)
        errs.push_back({{"pump_w", e.pump_power}, {"code", std::string(to_string(e.code))}, {"message", e.message}});
    j["errors"] = errs;
    j["lock_failure"] = r.lock_failure;
    return j;
}

json report(const NoiseScanResult &r)
{
    json j = report(r.fit);
    j["points"] = static_cast<int>(r.points.size());
    return j;
}

json report(const SqueezeRunResult &r)
{
    json j;
    j["pump_power_w"] = r.pump_power;
    j["measured_gain"] = r.measured_gain;
    j["reference_dbm"] = r.reference_dbm;
    j["raw_squeezing_db"] = r.result.raw_sq_db;
    j["raw_antisqueezing_db"] = r.result.raw_asq_db;
    j["corrected_squeezing_db"] = r.result.corrected_sq_db;
    j["corrected_antisqueezing_db"] = r.result.corrected_asq_db;
    j["clearance"] = r.result.clearance;
    j["lo_windows"] = r.windows;
    j["T_S_c"] = r.temperatures.T_S;
    j["T_D_c"] = r.temperatures.T_D;
    j["calibration"] = report(r.calibration);
    if (r.filter) {
        j["filter_transmission"] = *r.filter;
        j["baseline_shift_db"] = r.baseline_shift_db;
    }
    return j;
}

namespace
{
void flatten(const json &j, const std::string &prefix, std::ostringstream &out)
{
    if (j.is_object()) {
        for (const auto &[k, v] : j.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out << prefix << " = " << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
}
} // namespace

std::string flat_text(const json &j)
{
    std::ostringstream out;
    flatten(j, "", out);
    return out.str();
}

void write_report(const std::string &dir, const std::string &stem, const json &j)
{
    std::filesystem::create_directories(dir);
    std::ofstream js(std::filesystem::path(dir) / (stem + ".json"));
    js << j.dump(2) << '\n';
    std::ofstream txt(std::filesystem::path(dir) / (stem + ".txt"));
    txt << flat_text(j);
    if (!js || !txt)
        fail(ErrorCode::config, "cannot write report to '" + dir + "'");
}
} // namespace opo::experiments

#include "opo/config.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace opo
{
using nlohmann::json;

void RunConfig::validate() const
{
    apparatus.validate();
    lock.validate();
    optimizer.validate();
    require(std::abs(lock.period - apparatus.schedule.period()) < 1e-9, ErrorCode::config,
            "lock period must equal the MEMS switching period");
    require(squeeze.target_gain >= 1.0, ErrorCode::config, "target gain must be >= 1");
    require(squeeze.lo_power >= 0.0, ErrorCode::config, "LO power must be non-negative");
    require(squeeze.duration > 0.0 && squeeze.reference_duration > 0.0, ErrorCode::config,
            "squeeze durations must be positive");
    require(squeeze.video_settle >= 0.0 && squeeze.video_settle < apparatus.schedule.period() -
                                                                       apparatus.schedule.seed_window(),
            ErrorCode::config, "video settle time must be shorter than the LO window");
    require(noise_scan.blocks_per_point > 0, ErrorCode::config, "noise scan needs blocks per point");
    require(gain_curve.measure_windows > 0, ErrorCode::config, "gain curve needs measurement windows");
    require(session.telemetry_rate > 0.0, ErrorCode::config, "telemetry rate must be positive");
    require(session.time_factor >= 0.0, ErrorCode::config, "time factor must be non-negative (0 = unpaced)");
}

namespace
{
class Section
{
public:
    Section(const json &parent, const char *key, std::string path)
        : path_(std::move(path)), present_(parent.contains(key))
    {
        if (present_) {
            node_ = &parent.at(key);
            require(node_->is_object(), ErrorCode::config, ("section '" + path_ + "' must be an object").c_str());
        }
    }

    explicit Section(const json &root) : path_(""), node_(&root), present_(true)
    {
        require(root.is_object(), ErrorCode::config, "configuration root must be an object");
    }

    template <class T> Section &get(const char *key, T &out)
    {
        if (!present_ || !node_->contains(key))
            return *this;
        seen_.insert(key);
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception &) {
            fail(ErrorCode::config, "bad value for '" + qualified(key) + "'");
        }
        return *this;
    }

    Section &get_optional(const char *key, std::optional<double> &out)
    {
        if (!present_ || !node_->contains(key))
            return *this;
        seen_.insert(key);
        const json &v = node_->at(key);
        if (v.is_null())
            out.reset();
        else if (v.is_number())
            out = v.get<double>();
        else
            fail(ErrorCode::config, "bad value for '" + qualified(key) + "'");
        return *this;
    }

    void subsection(const char *key) { seen_.insert(key); }

    void finish() const
    {
        if (!present_)
            return;
        for (const auto &[k, v] : node_->items())
            if (!seen_.count(k))
                fail(ErrorCode::config, "unknown configuration key '" + qualified(k.c_str()) + "'");
    }

    const json &node() const { return *node_; }
    bool present() const { return present_; }

private:
    std::string qualified(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

    std::string path_;
    const json *node_ = nullptr;
    bool present_;
    std::set<std::string> seen_;
};
} // namespace

json to_json(const RunConfig &c)
{
    const auto &a = c.apparatus;
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["cavity"] = {{"T_out", a.cavity.T_out},
                   {"T_pump", a.cavity.T_pump},
                   {"bandwidth_fwhm_mhz", a.cavity.bandwidth_fwhm},
                   {"d_per_cm", a.cavity.d_per_cm},
                   {"crystal_length_cm", a.cavity.crystal_length_cm}};
    j["efficiency"] = {{"eta_det", a.efficiency.eta_det},
                       {"eta_hom", a.efficiency.eta_hom},
                       {"eta_loss", a.efficiency.eta_loss},
                       {"eta_cav", a.efficiency.eta_cav},
                       {"eta", a.eta ? json(*a.eta) : json(nullptr)}};
    j["tuning"] = {{"T_A_opt", a.tuning.T_A_opt}, {"T_S_opt", a.tuning.T_S_opt}, {"T_D_opt", a.tuning.T_D_opt},
                   {"w_A", a.tuning.w_A},         {"w_S", a.tuning.w_S},         {"lambda_D", a.tuning.lambda_D}};
    j["start"] = {{"T_S_offset", c.start_ts_offset}, {"T_D_offset", c.start_td_offset}};
    j["kerr"] = {{"tau_s", a.kerr_tau}, {"coupling_mhz_per_w", a.kerr_coupling}};
    j["schedule"] = {{"mems_rate_hz", a.schedule.mems_rate},
                     {"duty", a.schedule.duty},
                     {"sweep_span_rad", a.schedule.sweep_span},
                     {"tick_s", a.schedule.tick},
                     {"waveform", std::string(control::to_string(a.schedule.waveform))}};
    j["sa"] = {{"center_mhz", a.sa.center_freq}, {"rbw_mhz", a.sa.rbw}, {"vbw_hz", a.sa.vbw}};
    j["detector"] = {{"electronic_noise_dbm", a.detector.electronic_noise_dbm},
                     {"shot_dbm_at_1mw", a.detector.shot_dbm_at_1mw},
                     {"reference_rbw_mhz", a.detector.reference_rbw},
                     {"bandwidth_mhz", a.detector.bandwidth}};
    j["drift"] = {{"random_walk_mhz_per_sqrt_s", a.drift.random_walk}, {"ramp_mhz_per_s", a.drift.ramp}};
    j["seed_path"] = {{"power_in_mw", a.seed.power_in},
                      {"peak_transmission", a.seed.peak_transmission},
                      {"detector_noise", a.seed.detector_noise}};
    j["lock"] = {{"step_mhz", c.lock.step_size}, {"period_s", c.lock.period}, {"drop_threshold", c.lock.drop_threshold}};
    j["acquisition"] = {{"step_mhz", c.acquisition.step},
                        {"range_mhz", c.acquisition.range},
                        {"capture", c.acquisition.capture}};
    j["optimizer"] = {{"probe_step_c", c.optimizer.probe_step}, {"shrink", c.optimizer.shrink},
                      {"tolerance_c", c.optimizer.tolerance},   {"ts_range_c", c.optimizer.ts_range},
                      {"td_range_c", c.optimizer.td_range},     {"min_temp_c", c.optimizer.min_temp},
                      {"max_temp_c", c.optimizer.max_temp},     {"settle_windows", c.optimizer.settle_windows},
                      {"measure_windows", c.optimizer.measure_windows}};
    j["gain_curve"] = {{"pump_powers_w", c.gain_curve.pump_powers},
                       {"measure_windows", c.gain_curve.measure_windows}};
    j["noise_scan"] = {{"lo_powers_mw", c.noise_scan.lo_powers},
                       {"blocks_per_point", c.noise_scan.blocks_per_point}};
    j["squeeze"] = {{"target_gain", c.squeeze.target_gain},
                    {"pump_power_w", c.squeeze.pump_power ? json(*c.squeeze.pump_power) : json(nullptr)},
                    {"lo_power_mw", c.squeeze.lo_power},
                    {"duration_s", c.squeeze.duration},
                    {"reference_duration_s", c.squeeze.reference_duration},
                    {"lock_settle_s", c.squeeze.lock_settle},
                    {"video_settle_s", c.squeeze.video_settle}};
    j["session"] = {{"telemetry_rate_hz", c.session.telemetry_rate}, {"time_factor", c.session.time_factor}};
    return j;
}

RunConfig config_from_json(const json &j)
{
    RunConfig c;
    auto &a = c.apparatus;
    Section root(j);
    root.get("seed", c.seed).get("output_dir", c.output_dir);

    const char *names[] = {"cavity", "efficiency", "tuning", "start", "kerr", "schedule", "sa", "detector",
                           "drift", "seed_path", "lock", "acquisition", "optimizer", "gain_curve",
                           "noise_scan", "squeeze", "session"};
    for (const char *n : names)
        root.subsection(n);
    root.finish();

    Section s(j, "cavity", "cavity");
    s.get("T_out", a.cavity.T_out)
        .get("T_pump", a.cavity.T_pump)
        .get("bandwidth_fwhm_mhz", a.cavity.bandwidth_fwhm)
        .get("d_per_cm", a.cavity.d_per_cm)
        .get("crystal_length_cm", a.cavity.crystal_length_cm)
        .finish();

    Section e(j, "efficiency", "efficiency");
    e.get("eta_det", a.efficiency.eta_det)
        .get("eta_hom", a.efficiency.eta_hom)
        .get("eta_loss", a.efficiency.eta_loss)
        .get("eta_cav", a.efficiency.eta_cav)
        .get_optional("eta", a.eta)
        .finish();

    Section t(j, "tuning", "tuning");
    t.get("T_A_opt", a.tuning.T_A_opt)
        .get("T_S_opt", a.tuning.T_S_opt)
        .get("T_D_opt", a.tuning.T_D_opt)
        .get("w_A", a.tuning.w_A)
        .get("w_S", a.tuning.w_S)
        .get("lambda_D", a.tuning.lambda_D)
        .finish();

    Section st(j, "start", "start");
    st.get("T_S_offset", c.start_ts_offset).get("T_D_offset", c.start_td_offset).finish();

    Section k(j, "kerr", "kerr");
    k.get("tau_s", a.kerr_tau).get("coupling_mhz_per_w", a.kerr_coupling).finish();

    Section sc(j, "schedule", "schedule");
    std::string waveform(control::to_string(a.schedule.waveform));
    sc.get("mems_rate_hz", a.schedule.mems_rate)
        .get("duty", a.schedule.duty)
        .get("sweep_span_rad", a.schedule.sweep_span)
        .get("tick_s", a.schedule.tick)
        .get("waveform", waveform)
        .finish();
    a.schedule.waveform = control::waveform_from_string(waveform);

    Section sa(j, "sa", "sa");
    sa.get("center_mhz", a.sa.center_freq).get("rbw_mhz", a.sa.rbw).get("vbw_hz", a.sa.vbw).finish();

    Section d(j, "detector", "detector");
    d.get("electronic_noise_dbm", a.detector.electronic_noise_dbm)
        .get("shot_dbm_at_1mw", a.detector.shot_dbm_at_1mw)
        .get("reference_rbw_mhz", a.detector.reference_rbw)
        .get("bandwidth_mhz", a.detector.bandwidth)
        .finish();

    Section dr(j, "drift", "drift");
    dr.get("random_walk_mhz_per_sqrt_s", a.drift.random_walk).get("ramp_mhz_per_s", a.drift.ramp).finish();

    Section sp(j, "seed_path", "seed_path");
    sp.get("power_in_mw", a.seed.power_in)
        .get("peak_transmission", a.seed.peak_transmission)
        .get("detector_noise", a.seed.detector_noise)
        .finish();

    Section l(j, "lock", "lock");
    l.get("step_mhz", c.lock.step_size)
        .get("period_s", c.lock.period)
        .get("drop_threshold", c.lock.drop_threshold)
        .finish();

    Section aq(j, "acquisition", "acquisition");
    aq.get("step_mhz", c.acquisition.step)
        .get("range_mhz", c.acquisition.range)
        .get("capture", c.acquisition.capture)
        .finish();

    Section o(j, "optimizer", "optimizer");
    o.get("probe_step_c", c.optimizer.probe_step)
        .get("shrink", c.optimizer.shrink)
        .get("tolerance_c", c.optimizer.tolerance)
        .get("ts_range_c", c.optimizer.ts_range)
        .get("td_range_c", c.optimizer.td_range)
        .get("min_temp_c", c.optimizer.min_temp)
        .get("max_temp_c", c.optimizer.max_temp)
        .get("settle_windows", c.optimizer.settle_windows)
        .get("measure_windows", c.optimizer.measure_windows)
        .finish();

    Section g(j, "gain_curve", "gain_curve");
    g.get("pump_powers_w", c.gain_curve.pump_powers).get("measure_windows", c.gain_curve.measure_windows).finish();

    Section n(j, "noise_scan", "noise_scan");
    n.get("lo_powers_mw", c.noise_scan.lo_powers).get("blocks_per_point", c.noise_scan.blocks_per_point).finish();

    Section q(j, "squeeze", "squeeze");
    q.get("target_gain", c.squeeze.target_gain)
        .get_optional("pump_power_w", c.squeeze.pump_power)
        .get("lo_power_mw", c.squeeze.lo_power)
        .get("duration_s", c.squeeze.duration)
        .get("reference_duration_s", c.squeeze.reference_duration)
        .get("lock_settle_s", c.squeeze.lock_settle)
        .get("video_settle_s", c.squeeze.video_settle)
        .finish();

    Section se(j, "session", "session");
    se.get("telemetry_rate_hz", c.session.telemetry_rate).get("time_factor", c.session.time_factor).finish();

    c.validate();
    return c;
}

RunConfig parse_config(const std::string &text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error &ex) {
        fail(ErrorCode::config, std::string("configuration is not valid JSON: ") + ex.what());
    }
    return config_from_json(j);
}

RunConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::config, "cannot open configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}
} // namespace opo

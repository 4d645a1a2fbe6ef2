#include "opo/apparatus.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace opo::sim
{
void SAConfig::validate() const
{
    require(center_freq > 0.0, ErrorCode::config, "analyzer centre frequency must be positive");
    require(rbw > 0.0 && vbw > 0.0, ErrorCode::config, "analyzer bandwidths must be positive");
    require(vbw <= rbw * 1e6, ErrorCode::config, "VBW must not exceed RBW");
}

double DetectorModel::electronic_mw(double rbw) const
{
    return analysis::dbm_to_mw(electronic_noise_dbm) * rbw / reference_rbw;
}

double DetectorModel::shot_mw(double lo_power, double rbw) const
{
    return analysis::dbm_to_mw(shot_dbm_at_1mw) * lo_power * rbw / reference_rbw;
}

void DetectorModel::validate() const
{
    require(reference_rbw > 0.0 && bandwidth > 0.0, ErrorCode::config, "detector bandwidths must be positive");
}

void ApparatusConfig::validate() const
{
    cavity.validate();
    efficiency.validate();
    tuning.validate();
    schedule.validate();
    sa.validate();
    detector.validate();
    if (eta)
        require(*eta >= 0.0 && *eta <= 1.0, ErrorCode::config, "eta must lie in [0,1]");
    require(kerr_tau > 0.0, ErrorCode::config, "Kerr time constant must be positive");
    require(drift.random_walk >= 0.0, ErrorCode::config, "drift random walk must be non-negative");
    require(seed.power_in >= 0.0 && seed.peak_transmission > 0.0 && seed.peak_transmission <= 1.0 &&
                seed.detector_noise >= 0.0,
            ErrorCode::config, "invalid seed path");
    require(sa.center_freq + 0.5 * sa.rbw <= detector.bandwidth, ErrorCode::config,
            "analyzer band lies outside the detector bandwidth");
}

Apparatus::Apparatus(ApparatusConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed), p_th_(0.0)
{
    config_.validate();
    p_th_ = optics::threshold_power(config_.cavity);
    state_.seed = seed;
    state_.kerr.tau_s = config_.kerr_tau;
    state_.kerr.coupling = config_.kerr_coupling;
    state_.thermal = config_.tuning.optimum();
}

double Apparatus::pump_parameter() const
{
    const double effective = state_.pump_power * optics::tuning_factor(state_.thermal, config_.tuning);
    return optics::pump_parameter(effective, p_th_);
}

void Apparatus::set_pump_power(double watts)
{
    require(watts >= 0.0, ErrorCode::domain, "pump power must be non-negative");
    require(watts < p_th_, ErrorCode::above_threshold, "pump power at or above the OPO threshold");
    state_.pump_power = watts;
}

void Apparatus::set_lo_power(double mw)
{
    require(mw >= 0.0, ErrorCode::domain, "LO power must be non-negative");
    state_.lo_power = mw;
}

void Apparatus::set_temperatures(const optics::ThermalState &t)
{
    require(std::isfinite(t.T_A) && std::isfinite(t.T_1) && std::isfinite(t.T_2), ErrorCode::domain,
            "temperatures must be finite");
    state_.thermal = t;
}

void Apparatus::set_filter(double transmission)
{
    require(transmission >= 0.0 && transmission <= 1.0, ErrorCode::domain, "filter transmission must lie in [0,1]");
    state_.filter = transmission;
}

void Apparatus::set_sa(const SAConfig &sa)
{
    sa.validate();
    require(sa.center_freq + 0.5 * sa.rbw <= config_.detector.bandwidth, ErrorCode::config,
            "analyzer band lies outside the detector bandwidth");
    config_.sa = sa;
}

std::uint64_t Apparatus::samples_per_tick() const
{
    return static_cast<std::uint64_t>(std::llround(2.0 * config_.sa.rbw * 1e6 * config_.schedule.tick));
}

TickOutputs Apparatus::step()
{
    const auto &sched = config_.schedule;
    const double dt = sched.tick;
    const auto k = static_cast<std::uint64_t>(state_.tick_index);
    const double t = static_cast<double>(state_.tick_index) * dt;

    state_.clock = t;
    state_.mems = control::mems_position(t, sched);
    if (state_.sweep_on)
        state_.pump_phase = control::sweep_phase(t, sched);

    state_.drift += config_.drift.ramp * dt +
                    config_.drift.random_walk * std::sqrt(dt) * rng_.normal(Stream::drift, k, 0);

    const double mu = pump_parameter();
    const double theta = 0.5 * state_.pump_phase;
    const double c2 = std::cos(theta) * std::cos(theta);
    const double s2 = 1.0 - c2;

    TickOutputs out;
    out.time = t;
    out.mems = state_.mems;
    out.pump_phase = state_.pump_phase;
    out.detuning = state_.detuning();
    out.gain = optics::amplified_gain(mu);

    const double rbw = config_.sa.rbw;
    kernels::HomodyneBlock block;
    block.samples = state_.synthesize_homodyne ? samples_per_tick() : 0;
    block.block = k;
    block.electronic = config_.detector.electronic_mw(rbw);

    double circulating = 0.0;
    if (state_.mems == MemsPosition::seed) {
        const double x = out.detuning / config_.cavity.halfwidth();
        const double lorentz = 1.0 / (1.0 + x * x);
        const double amp = optics::amplified_gain(mu) * c2 + optics::deamplified_gain(mu) * s2;
        const double noise = 1.0 + config_.seed.detector_noise * rng_.normal(Stream::seed_detector, k, 0);
        out.dr = seed_reference() * lorentz * amp * noise;
        circulating = 1e-3 * out.dr / config_.cavity.T_out;
        // No LO: the difference signal carries electronic noise only.
        block.shot = 0.0;
    } else {
        const double eta = config_.detection_efficiency();
        const double f = config_.sa.center_freq;
        const double hw = config_.cavity.halfwidth();
        const double sq = optics::quadrature_noise(f, mu, eta, optics::Quadrature::squeezed, hw);
        const double asq = optics::quadrature_noise(f, mu, eta, optics::Quadrature::antisqueezed, hw);
        out.variance = optics::apply_passive_loss(sq * c2 + asq * s2, state_.filter);
        block.variance = out.variance;
        block.shot = config_.detector.shot_mw(state_.lo_power, rbw);
    }

    if (block.samples > 0) {
        out.band_power = kernels::block_power_parallel(block, rng_);
        const double alpha = -std::expm1(-2.0 * std::numbers::pi * config_.sa.vbw * dt);
        state_.video = state_.video < 0.0 ? out.band_power : state_.video + alpha * (out.band_power - state_.video);
        out.sa_dbm = analysis::mw_to_dbm(state_.video);
    }

    state_.kerr = optics::kerr_step(state_.kerr, circulating, dt);

    if (!std::isfinite(state_.drift) || !std::isfinite(state_.kerr.shift) || !std::isfinite(out.dr) ||
        !std::isfinite(out.sa_dbm) || !std::isfinite(state_.laser_offset))
        fail(ErrorCode::simulation_fault, "non-finite value in apparatus state");

    ++state_.tick_index;
    state_.clock = static_cast<double>(state_.tick_index) * dt;
    return out;
}

NoiseTrace sa_zero_span(std::span<const double> band_power, double tick, const SAConfig &cfg,
                        std::span<const double> phases, std::span<const MemsPosition> mems)
{
    cfg.validate();
    require(tick > 0.0, ErrorCode::domain, "tick must be positive");
    require(phases.empty() || phases.size() == band_power.size(), ErrorCode::domain, "phase stream length mismatch");
    require(mems.empty() || mems.size() == band_power.size(), ErrorCode::domain, "MEMS stream length mismatch");

    NoiseTrace trace{cfg, {}};
    trace.points.reserve(band_power.size());
    const double alpha = -std::expm1(-2.0 * std::numbers::pi * cfg.vbw * tick);
    double video = 0.0;
    for (std::size_t i = 0; i < band_power.size(); ++i) {
        require(band_power[i] > 0.0, ErrorCode::domain, "band power must be positive");
        video = i == 0 ? band_power[i] : video + alpha * (band_power[i] - video);
        trace.points.push_back({static_cast<double>(i) * tick, phases.empty() ? 0.0 : phases[i],
                                analysis::mw_to_dbm(video), mems.empty() ? MemsPosition::lo : mems[i]});
    }
    return trace;
}

std::vector<analysis::NoisePoint> lo_power_scan(std::span<const double> powers, const DetectorModel &detector,
                                                const SAConfig &sa, double tick, int blocks_per_point,
                                                std::uint64_t seed)
{
    sa.validate();
    require(blocks_per_point > 0, ErrorCode::domain, "need at least one block per LO power");
    const CounterRng rng(seed);
    const auto samples = static_cast<std::uint64_t>(std::llround(2.0 * sa.rbw * 1e6 * tick));
    // Counter blocks far above any tick index used by a running apparatus.
    constexpr std::uint64_t kScanBase = 1ULL << 48;

    std::vector<analysis::NoisePoint> out;
    out.reserve(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) {
        require(powers[i] >= 0.0, ErrorCode::domain, "LO power must be non-negative");
        kernels::HomodyneBlock block{1.0, detector.shot_mw(powers[i], sa.rbw), detector.electronic_mw(sa.rbw),
                                     samples, 0};
        double acc = 0.0;
        for (int j = 0; j < blocks_per_point; ++j) {
            block.block = kScanBase + (static_cast<std::uint64_t>(i) << 24) + static_cast<std::uint64_t>(j);
            acc += kernels::block_power_parallel(block, rng);
        }
        out.push_back({powers[i], analysis::mw_to_dbm(acc / blocks_per_point)});
    }
    return out;
}

void write_trace_csv(std::ostream &out, const NoiseTrace &trace)
{
    out << "time_s,phase_rad,power_dbm,mems_pos\n";
    char buf[128];
    for (const auto &p : trace.points) {
        std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.6f,%s\n", p.time, p.phase, p.power_dbm,
                      std::string(control::to_string(p.mems)).c_str());
        out << buf;
    }
}

NoiseTrace read_trace_csv(std::istream &in)
{
    NoiseTrace trace;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::config, "empty trace CSV");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    require(line == "time_s,phase_rad,power_dbm,mems_pos", ErrorCode::config, "unexpected trace CSV header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        TracePoint p;
        char c1 = 0, c2 = 0, c3 = 0;
        std::string pos;
        if (!(ss >> p.time >> c1 >> p.phase >> c2 >> p.power_dbm >> c3) || c1 != ',' || c2 != ',' || c3 != ',')
            fail(ErrorCode::config, "malformed trace line: " + line);
        std::getline(ss, pos);
        if (!pos.empty() && pos.back() == '\r')
            pos.pop_back();
        if (pos == "seed")
            p.mems = MemsPosition::seed;
        else if (pos == "lo")
            p.mems = MemsPosition::lo;
        else
            fail(ErrorCode::config, "unknown MEMS position '" + pos + "'");
        trace.points.push_back(p);
    }
    return trace;
}
} // namespace opo::sim

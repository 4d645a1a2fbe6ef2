#include "opo/control.hpp"

#include "opo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace opo::control
{
void LockController::validate() const
{
    require(step_size > 0.0, ErrorCode::config, "lock step size must be positive");
    require(period > 0.0, ErrorCode::config, "lock period must be positive");
    require(drop_threshold > 0.0 && drop_threshold < 1.0, ErrorCode::config, "drop threshold must lie in (0,1)");
    require(direction == 1 || direction == -1, ErrorCode::config, "lock direction must be +1 or -1");
}

LockUpdate lock_update(LockController ctrl, double observed_max)
{
    require(ctrl.engaged, ErrorCode::protocol, "lock_update called while the lock is disengaged");
    require(observed_max >= 0.0 && std::isfinite(observed_max), ErrorCode::domain, "invalid observed maximum");
    if (observed_max == 0.0)
        return {ctrl, 0.0};

    if (observed_max < ctrl.last_max * (1.0 - ctrl.drop_threshold)) {
        ctrl.direction = -ctrl.direction;
        ctrl.last_max = observed_max;
    } else {
        ctrl.last_max = std::max(ctrl.last_max, observed_max);
    }
    return {ctrl, ctrl.direction * ctrl.step_size};
}

std::string_view to_string(LockState s) noexcept
{
    switch (s) {
    case LockState::off: return "off";
    case LockState::acquiring: return "acquiring";
    case LockState::locked: return "locked";
    case LockState::lost: return "lost";
    }
    return "off";
}

LockLoop::LockLoop(sim::Apparatus &apparatus, LockController ctrl, AcquisitionConfig acq)
    : apparatus_(apparatus), ctrl_(ctrl), acq_(acq)
{
    ctrl_.validate();
    require(acq_.step > 0.0 && acq_.range >= 0.0 && acq_.capture > 0.0 && acq_.capture < 1.0, ErrorCode::config,
            "invalid lock acquisition settings");
}

void LockLoop::engage()
{
    if (state_ == LockState::locked || state_ == LockState::acquiring)
        return;
    state_ = LockState::acquiring;
    ctrl_.engaged = false;
    acq_origin_ = apparatus_.state().laser_offset;
    acq_probe_ = 0;
}

void LockLoop::disengage()
{
    state_ = LockState::off;
    ctrl_.engaged = false;
}

sim::TickOutputs LockLoop::tick()
{
    const sim::TickOutputs out = apparatus_.step();
    if (out.mems == MemsPosition::seed) {
        if (!in_seed_) {
            times_.clear();
            dr_.clear();
        }
        in_seed_ = true;
        times_.push_back(out.time);
        dr_.push_back(out.dr);
    } else if (in_seed_) {
        in_seed_ = false;
        close_window();
    }
    return out;
}

void LockLoop::run_windows(int windows)
{
    const long target = windows_ + windows;
    while (windows_ < target)
        tick();
}

void LockLoop::close_window()
{
    if (dr_.empty())
        return;
    const auto &sched = apparatus_.config().schedule;
    const double window = sched.seed_window() + sched.tick;
    double arch = 0.0;
    if (apparatus_.state().sweep_on && sched.sweep_span > 0.0)
        arch = std::min(window, sched.seed_window() * 2.0 * std::numbers::pi / sched.sweep_span);
    const auto ext = analysis::extract_minmax(times_, dr_, window, arch);
    const auto &e = ext.front();

    WindowReading r;
    r.t_start = e.t_start;
    r.max = e.max;
    r.min = e.min;
    r.gain = (e.min > 0.0 && e.max >= e.min) ? optics::gain_from_minmax(e.max, e.min) : 1.0;
    r.transmission = e.max / (apparatus_.seed_reference() * r.gain);
    last_ = r;
    ++windows_;

    if (state_ == LockState::acquiring) {
        if (r.transmission >= acq_.capture) {
            state_ = LockState::locked;
            ctrl_.engaged = true;
            ctrl_.last_max = r.max;
            return;
        }
        ++acq_probe_;
        const int k = (acq_probe_ + 1) / 2;
        const double offset = (acq_probe_ % 2 == 1 ? 1.0 : -1.0) * k * acq_.step;
        if (k * acq_.step > acq_.range) {
            state_ = LockState::lost;
            fail(ErrorCode::lock_lost, "lock acquisition found no resonance within range");
        }
        apparatus_.set_laser_offset(acq_origin_ + offset);
        return;
    }

    if (state_ == LockState::locked || state_ == LockState::lost) {
        const bool healthy = r.transmission >= acq_.capture;
        if (state_ == LockState::locked && !healthy)
            ++lost_events_;
        state_ = healthy ? LockState::locked : LockState::lost;
        const LockUpdate u = lock_update(ctrl_, r.max);
        ctrl_ = u.ctrl;
        apparatus_.step_laser(u.action);
        correction_ += u.action;
    }
}

LockRun run_lock(sim::Apparatus &apparatus, const LockController &ctrl, double duration, const AcquisitionConfig &acq)
{
    require(duration >= 0.0, ErrorCode::domain, "duration must be non-negative");
    LockLoop loop(apparatus, ctrl, acq);
    loop.engage();
    LockRun run;
    const auto ticks = static_cast<long>(std::llround(duration / apparatus.tick()));
    run.time.reserve(static_cast<std::size_t>(ticks));
    run.abs_detuning.reserve(static_cast<std::size_t>(ticks));
    for (long i = 0; i < ticks; ++i) {
        const auto out = loop.tick();
        run.time.push_back(out.time);
        run.abs_detuning.push_back(std::abs(out.detuning));
        if (run.acquired_at < 0.0 && loop.state() == LockState::locked)
            run.acquired_at = out.time;
    }
    run.lost_events = loop.lost_events();
    return run;
}

void TempOptimizer::validate() const
{
    require(probe_step > 0.0, ErrorCode::config, "probe step must be positive");
    require(shrink > 0.0 && shrink < 1.0, ErrorCode::config, "shrink factor must lie in (0,1)");
    require(tolerance > 0.0, ErrorCode::config, "tolerance must be positive");
    require(ts_range > probe_step && td_range > probe_step, ErrorCode::config,
            "search brackets must be wider than the probe step");
    require(max_temp > min_temp, ErrorCode::config, "empty temperature safety bounds");
    require(settle_windows >= 0 && measure_windows >= 1, ErrorCode::config, "invalid measurement windows");
}

namespace
{
struct Stage
{
    double lo;
    double hi;
};

double golden_max(double a, double b, double ratio, double tol, const std::function<double(double)> &f)
{
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}
} // namespace

TempResult optimize_temperatures(LockLoop &loop, TempOptimizer opt, double pump_power)
{
    opt.validate();
    require(loop.state() == LockState::locked, ErrorCode::protocol, "temperature optimisation needs a holding lock");
    require(pump_power > 0.0, ErrorCode::optimization, "no pump: gain signal is flat, nothing to optimise");

    sim::Apparatus &app = loop.apparatus();
    app.set_pump_power(pump_power);

    const double T_A = app.state().thermal.T_A;
    double ts = app.state().thermal.sum_coordinate();
    double td = app.state().thermal.diff_coordinate();
    const long lost_before = loop.lost_events();

    TempResult result;

    auto in_bounds = [&](double s, double d) {
        const auto th = optics::ThermalState::from_coordinates(T_A, s, d);
        return th.T_1 >= opt.min_temp && th.T_1 <= opt.max_temp && th.T_2 >= opt.min_temp && th.T_2 <= opt.max_temp;
    };
    require(in_bounds(ts, td), ErrorCode::optimization, "starting temperatures outside the safety bounds");

    auto measure = [&](double s, double d) {
        const auto th = optics::ThermalState::from_coordinates(T_A, s, d);
        app.set_temperatures(th);
        loop.run_windows(opt.settle_windows);
        double acc = 0.0;
        for (int i = 0; i < opt.measure_windows; ++i) {
            loop.run_windows(1);
            if (loop.lost_events() != lost_before || loop.state() != LockState::locked)
                fail(ErrorCode::lock_lost, "fundamental lock lost during temperature optimisation");
            acc += loop.last_window()->gain;
        }
        const double g = acc / opt.measure_windows;
        result.history.push_back({opt.stage, th.T_1, th.T_2, g});
        return g;
    };

    // One coordinate: symmetric probes first, golden section only if the start is not already optimal.
    auto optimise_axis = [&](bool sum_axis, double range, int &probes) {
        double &x = sum_axis ? ts : td;
        auto eval = [&](double v) { return sum_axis ? measure(v, td) : measure(ts, v); };

        double lo = x - range, hi = x + range;
        if (sum_axis) {
            lo = std::max(lo, opt.min_temp + 0.5 * std::abs(td));
            hi = std::min(hi, opt.max_temp - 0.5 * std::abs(td));
        } else {
            const double lim = 2.0 * std::min(opt.max_temp - ts, ts - opt.min_temp);
            lo = std::max(lo, -lim);
            hi = std::min(hi, lim);
        }

        const double g0 = eval(x);
        double gm = 0.0, gp = 0.0;
        const bool probes_fit = x - opt.probe_step >= lo && x + opt.probe_step <= hi;
        if (probes_fit) {
            gm = eval(x - opt.probe_step);
            gp = eval(x + opt.probe_step);
            probes = 2;
            if (std::max({std::abs(g0 - 1.0), std::abs(gm - 1.0), std::abs(gp - 1.0)}) < 1e-3)
                fail(ErrorCode::optimization, "gain signal is flat; temperatures cannot be optimised");
            const double curvature = gm - 2.0 * g0 + gp;
            if (g0 >= gm && g0 >= gp && curvature < 0.0) {
                const double vertex = 0.5 * opt.probe_step * (gm - gp) / curvature;
                if (std::abs(vertex) <= opt.tolerance)
                    return;
            }
        }
        const std::size_t before = result.history.size();
        x = golden_max(lo, hi, opt.shrink, opt.tolerance, eval);
        probes += static_cast<int>(result.history.size() - before);
    };

    opt.stage = TempStage::blue_resonance;
    optimise_axis(true, opt.ts_range, result.probes_blue);
    opt.stage = TempStage::interference;
    optimise_axis(false, opt.td_range, result.probes_interference);
    opt.stage = TempStage::done;

    result.T_S = ts;
    result.T_D = td;
    result.gain = measure(ts, td);
    return result;
}
} // namespace opo::control

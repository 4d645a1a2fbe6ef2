#include "opo/errors.hpp"
#include "opo/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using namespace opo;
using namespace opo::experiments;

TEST_CASE("gain curve at defaults")
{
    const RunConfig cfg;
    const auto r = gain_curve(cfg, cfg.gain_curve.pump_powers);
    REQUIRE(r.fit);
    CHECK(r.errors.empty());
    CHECK(r.points.size() == cfg.gain_curve.pump_powers.size());
    CHECK(std::abs(r.fit->p_th - 0.87) <= 0.02 * 0.87);
}

TEST_CASE("gain curve boundary handling")
{
    const RunConfig cfg;
    const auto single = gain_curve(cfg, {0.1});
    CHECK(!single.fit);
    CHECK(single.fit_error);
    CHECK(single.points.size() == 1);

    const auto mixed = gain_curve(cfg, {0.05, 0.1, 1.0, 0.15});
    REQUIRE(mixed.errors.size() == 1);
    CHECK(mixed.errors[0].code == ErrorCode::above_threshold);
    CHECK(mixed.errors[0].pump_power == 1.0);
    CHECK(mixed.points.size() == 3);
    CHECK(mixed.fit);
}

TEST_CASE("noise scan calibration")
{
    const RunConfig cfg;
    const auto r = noise_scan(cfg, cfg.noise_scan.lo_powers);
    CHECK(std::abs(r.fit.offset_dbm + 70.75) < 0.1);
    CHECK(r.fit.max_residual_db < 0.1);
    CHECK(r.fit.shot_limited_up_to >= 3.0);
}

TEST_CASE("squeeze run with the pump off stays at the reference")
{
    RunConfig cfg;
    cfg.squeeze.pump_power = 0.0;
    const auto r = squeeze_run(cfg, 3.0, std::nullopt);
    // percentile extremes of a flat, noisy trace sit a few tenths of a dB apart
    CHECK(std::abs(r.result.raw_sq_db) < 0.3);
    CHECK(std::abs(r.result.raw_asq_db) < 0.3);
    CHECK(r.result.raw_sq_db <= 0.0);
    CHECK(r.result.raw_asq_db >= 0.0);
    CHECK(std::abs(r.result.raw_sq_db + r.result.raw_asq_db) < 0.1);
    CHECK(r.trace.points.size() == 3000);
}

TEST_CASE("squeeze run reduces both quadratures with one clearance")
{
    RunConfig cfg;
    const auto r = squeeze_run(cfg, 3.0, std::nullopt);
    CHECK(r.result.raw_sq_db < -0.3);
    CHECK(r.result.raw_asq_db > 0.8);
    CHECK(r.measured_gain == doctest::Approx(1.4).epsilon(0.02));
    CHECK(analysis::correct_electronic(r.result.raw_sq_db, r.result.clearance) == r.result.corrected_sq_db);
    CHECK(analysis::correct_electronic(r.result.raw_asq_db, r.result.clearance) == r.result.corrected_asq_db);
    CHECK(r.result.corrected_sq_db < r.result.raw_sq_db);
    CHECK(r.result.corrected_asq_db > r.result.raw_asq_db);
}

TEST_CASE("reports")
{
    analysis::ThresholdFit f{0.87, 0.01, 4};
    const auto j = report(f);
    CHECK(j["p_th_w"] == 0.87);
    const auto text = flat_text({{"a", 1}, {"b", {{"c", "x"}}}, {"d", {1.5, 2}}});
    CHECK(text == "a = 1\nb.c = x\nd.0 = 1.5\nd.1 = 2\n");

    const auto dir = std::filesystem::temp_directory_path() / "opo_report_test";
    write_report(dir.string(), "r", j);
    CHECK(std::filesystem::exists(dir / "r.json"));
    CHECK(std::filesystem::exists(dir / "r.txt"));
    std::filesystem::remove_all(dir);
}

namespace
{
int run_cli(const std::string &args)
{
    const std::string cmd = std::string(OPO_TWIN_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
} // namespace

TEST_CASE("command-line exit codes")
{
    const auto dir = std::filesystem::temp_directory_path() / "opo_cli_test";
    std::filesystem::create_directories(dir);
    const std::string out = " -o " + (dir / "out").string();

    CHECK(run_cli("noise-scan --lo 0,1,2,3" + out) == 0);
    CHECK(std::filesystem::exists(dir / "out" / "noise_scan.csv"));
    CHECK(run_cli("fit --noise " + (dir / "out" / "noise_scan.csv").string() + out) == 0);

    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("noise-scan --bogus") == 2);
    {
        std::ofstream bad(dir / "bad.jsonc");
        bad << R"({"cavity": {"T_out": 2.0}})";
    }
    CHECK(run_cli("-c " + (dir / "bad.jsonc").string() + " noise-scan" + out) == 2);
    {
        std::ofstream one(dir / "one.csv");
        one << "pump_w,gain\n0.1,2.0\n";
    }
    CHECK(run_cli("fit --gain " + (dir / "one.csv").string() + out) == 2);
    CHECK(run_cli("gain-curve --pumps 0.1" + out) == 2);
    {
        // the lock cannot find the resonance inside a 100 MHz acquisition range
        std::ofstream far(dir / "far.jsonc");
        far << R"({"acquisition": {"range_mhz": 100}, "drift": {"ramp_mhz_per_s": 400}})";
    }
    CHECK(run_cli("-c " + (dir / "far.jsonc").string() + " gain-curve" + out) == 3);
    std::filesystem::remove_all(dir);
}

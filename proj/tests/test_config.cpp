#include "opo/config.hpp"
#include "opo/errors.hpp"

#include <doctest.h>

#include <fstream>

using namespace opo;

namespace
{
ErrorCode code_of(auto &&f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::domain;
}
} // namespace

TEST_CASE("config round trip")
{
    RunConfig c;
    c.seed = 77;
    c.apparatus.sa.rbw = 1.0;
    c.apparatus.eta.reset();
    c.squeeze.pump_power = 0.03;
    c.apparatus.schedule.waveform = control::SweepWaveform::sawtooth;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.seed == 77);
    CHECK(!back.apparatus.eta);
    CHECK(back.squeeze.pump_power == 0.03);
}

TEST_CASE("partial configs keep defaults")
{
    const auto c = parse_config(R"({
        // only the analyzer changes
        "sa": { "rbw_mhz": 1.0 } /* trailing */
    })");
    CHECK(c.apparatus.sa.rbw == 1.0);
    CHECK(c.apparatus.sa.center_freq == 10.0);
    CHECK(c.apparatus.cavity.T_out == 0.14);
}

TEST_CASE("shipped default file matches the built-in defaults")
{
    const auto c = load_config(OPO_SOURCE_DIR "/config/default.jsonc");
    CHECK(to_json(c) == to_json(RunConfig{}));
}

TEST_CASE("strict parsing")
{
    CHECK(code_of([] { parse_config(R"({"cavty": {}})"); }) == ErrorCode::config);
    CHECK(code_of([] { parse_config(R"({"cavity": {"T_outt": 0.1}})"); }) == ErrorCode::config);
    CHECK(code_of([] { parse_config(R"({"cavity": {"T_out": "high"}})"); }) == ErrorCode::config);
    CHECK(code_of([] { parse_config("{ not json"); }) == ErrorCode::config);
    CHECK(code_of([] { parse_config(R"({"cavity": {"T_out": 1.5}})"); }) == ErrorCode::config);
    CHECK(code_of([] { parse_config(R"({"lock": {"period_s": 0.2}})"); }) == ErrorCode::config);
    CHECK(code_of([] { load_config("/nonexistent/opo.jsonc"); }) == ErrorCode::config);
}

#include "opo/session.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <set>

namespace opo::session
{
using nlohmann::json;

namespace
{
struct ProtocolError
{
    std::string code;
    std::string message;
};

void allow_keys(const json &payload, const std::set<std::string> &keys)
{
    if (payload.is_null())
        return;
    if (!payload.is_object())
        throw ProtocolError{"invalid_payload", "payload must be an object"};
    for (const auto &[k, v] : payload.items())
        if (!keys.count(k))
            throw ProtocolError{"invalid_payload", "unexpected payload key '" + k + "'"};
}

std::optional<double> number(const json &payload, const char *key)
{
    if (payload.is_null() || !payload.contains(key))
        return std::nullopt;
    const auto &v = payload.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw ProtocolError{"invalid_payload", std::string("'") + key + "' must be a finite number"};
    return v.get<double>();
}

double required(const json &payload, const char *key)
{
    const auto v = number(payload, key);
    if (!v)
        throw ProtocolError{"invalid_payload", std::string("missing '") + key + "'"};
    return *v;
}

json thermal_json(const optics::ThermalState &t)
{
    return {{"T_A", t.T_A}, {"T_1", t.T_1}, {"T_2", t.T_2}, {"T_S", t.sum_coordinate()}, {"T_D", t.diff_coordinate()}};
}
} // namespace

json journal_to_json(const std::vector<JournalEntry> &journal)
{
    json arr = json::array();
    for (const auto &e : journal)
        arr.push_back({{"tick", e.tick}, {"line", e.line}, {"commander", e.commander}});
    return arr;
}

std::vector<JournalEntry> journal_from_json(const json &j)
{
    require(j.is_array(), ErrorCode::config, "journal must be a JSON array");
    std::vector<JournalEntry> out;
    try {
        for (const auto &e : j)
            out.push_back({e.at("tick").get<std::int64_t>(), e.at("line").get<std::string>(),
                           e.value("commander", true)});
    } catch (const json::exception &ex) {
        fail(ErrorCode::config, std::string("bad journal entry: ") + ex.what());
    }
    return out;
}

Session::Session(const RunConfig &cfg) : cfg_(cfg), bench_(cfg_)
{
    require(cfg_.session.telemetry_rate > 0.0, ErrorCode::config, "telemetry rate must be positive");
    telemetry_every_ = std::max<std::int64_t>(
        1, std::llround(1.0 / (cfg_.session.telemetry_rate * bench_.apparatus.tick())));
    bench_.apparatus.set_synthesize_homodyne(true);
}

void Session::emit(std::string_view kind, std::string_view name, json payload, const json &ref_seq)
{
    json msg{{"kind", kind}, {"name", name}, {"seq", ++seq_}, {"t", time()}};
    if (!ref_seq.is_null())
        msg["ref_seq"] = ref_seq;
    msg["payload"] = std::move(payload);
    out_.push_back(msg.dump());
}

void Session::submit(std::string_view line, bool commander)
{
    journal_.push_back({tick_index(), std::string(line), commander});

    json msg;
    try {
        msg = json::parse(line);
    } catch (const json::parse_error &) {
        emit("error", "", {{"code", "malformed"}, {"message", "line is not valid JSON"}});
        return;
    }
    const json ref = msg.is_object() && msg.contains("seq") ? msg["seq"] : json(nullptr);
    if (!msg.is_object() || msg.value("kind", "") != "command" || !msg.contains("name") ||
        !msg["name"].is_string() || !ref.is_number_integer()) {
        emit("error", "", {{"code", "malformed"}, {"message", "expected {kind:command, name, seq, payload}"}}, ref);
        return;
    }
    const std::string name = msg["name"].get<std::string>();
    if (!commander) {
        emit("error", name, {{"code", "read_only"}, {"message", "observers cannot issue commands"}}, ref);
        return;
    }
    try {
        json result = apply(name, msg.contains("payload") ? msg["payload"] : json(nullptr));
        emit("ack", name, std::move(result), ref);
    } catch (const ProtocolError &e) {
        emit("error", name, {{"code", e.code}, {"message", e.message}}, ref);
    } catch (const Error &e) {
        emit("error", name, {{"code", to_string(e.code())}, {"message", e.what()}}, ref);
    }
}

json Session::apply(const std::string &name, const json &payload)
{
    auto &app = bench_.apparatus;
    auto &loop = bench_.loop;

    if (name == "set_temperature") {
        allow_keys(payload, {"T_A", "T_1", "T_2", "T_S", "T_D"});
        auto t = app.state().thermal;
        const auto T_S = number(payload, "T_S"), T_D = number(payload, "T_D");
        const auto T_1 = number(payload, "T_1"), T_2 = number(payload, "T_2");
        if ((T_S || T_D) && (T_1 || T_2))
            throw ProtocolError{"invalid_payload", "give either T_1/T_2 or T_S/T_D, not both"};
        if (const auto a = number(payload, "T_A"))
            t.T_A = *a;
        if (T_S || T_D)
            t = optics::ThermalState::from_coordinates(t.T_A, T_S.value_or(t.sum_coordinate()),
                                                       T_D.value_or(t.diff_coordinate()));
        if (T_1)
            t.T_1 = *T_1;
        if (T_2)
            t.T_2 = *T_2;
        const double lo = cfg_.optimizer.min_temp, hi = cfg_.optimizer.max_temp;
        for (double v : {t.T_A, t.T_1, t.T_2})
            if (v < lo || v > hi)
                throw ProtocolError{"out_of_range", "temperature outside the safety bounds"};
        app.set_temperatures(t);
        return thermal_json(t);
    }
    if (name == "set_pump_power") {
        allow_keys(payload, {"watts"});
        app.set_pump_power(required(payload, "watts"));
        return {{"watts", app.state().pump_power}, {"threshold_w", app.threshold()}};
    }
    if (name == "set_lo_power") {
        allow_keys(payload, {"mw"});
        app.set_lo_power(required(payload, "mw"));
        return {{"mw", app.state().lo_power}};
    }
    if (name == "engage_lock") {
        allow_keys(payload, {});
        loop.engage();
        return {{"lock_state", control::to_string(loop.state())}};
    }
    if (name == "disengage_lock") {
        allow_keys(payload, {});
        loop.disengage();
        return {{"lock_state", control::to_string(loop.state())}};
    }
    if (name == "start_sweep" || name == "stop_sweep") {
        allow_keys(payload, {});
        app.set_sweep(name == "start_sweep");
        return {{"sweep", app.state().sweep_on}};
    }
    if (name == "set_sa") {
        allow_keys(payload, {"center_freq", "rbw", "vbw"});
        auto sa = app.config().sa;
        sa.center_freq = number(payload, "center_freq").value_or(sa.center_freq);
        sa.rbw = number(payload, "rbw").value_or(sa.rbw);
        sa.vbw = number(payload, "vbw").value_or(sa.vbw);
        app.set_sa(sa);
        return {{"center_freq", sa.center_freq}, {"rbw", sa.rbw}, {"vbw", sa.vbw}};
    }
    if (name == "insert_filter") {
        allow_keys(payload, {"transmission"});
        app.set_filter(required(payload, "transmission"));
        return {{"transmission", app.state().filter}};
    }
    if (name == "remove_filter") {
        allow_keys(payload, {});
        app.set_filter(1.0);
        return {{"transmission", 1.0}};
    }
    if (name == "get_config") {
        allow_keys(payload, {});
        return to_json(cfg_);
    }
    throw ProtocolError{"unknown_command", "unknown command '" + name + "'"};
}

void Session::step()
{
    try {
        const auto o = bench_.loop.tick();
        trace_t_.push_back(o.time);
        trace_mems_.push_back(o.mems == control::MemsPosition::seed ? 0 : 1);
        trace_phase_.push_back(o.pump_phase);
        trace_dr_.push_back(o.dr);
        trace_sa_.push_back(o.sa_dbm);
    } catch (const Error &e) {
        bench_.loop.disengage();
        emit("error", "fault", {{"code", to_string(e.code())}, {"message", e.what()}});
    }
    if (++since_telemetry_ >= telemetry_every_) {
        since_telemetry_ = 0;
        telemetry();
    }
}

void Session::advance(double seconds)
{
    const auto ticks = std::llround(seconds / bench_.apparatus.tick());
    for (long long i = 0; i < ticks; ++i)
        step();
}

void Session::telemetry()
{
    const auto &app = bench_.apparatus;
    const auto &s = app.state();
    const auto &loop = bench_.loop;
    json p;
    p["lock_state"] = control::to_string(loop.state());
    p["detuning_mhz"] = s.detuning();
    p["temperatures"] = thermal_json(s.thermal);
    p["gain"] = loop.last_window() ? json(loop.last_window()->gain) : json(nullptr);
    p["seed_max_mw"] = loop.last_window() ? json(loop.last_window()->max) : json(nullptr);
    p["model_gain"] = optics::amplified_gain(app.pump_parameter());
    p["pump_w"] = s.pump_power;
    p["lo_mw"] = s.lo_power;
    p["filter"] = s.filter;
    p["sweep"] = s.sweep_on;
    p["sa"] = {{"center_freq", app.config().sa.center_freq}, {"rbw", app.config().sa.rbw},
               {"vbw", app.config().sa.vbw}};
    p["trace"] = {{"time_s", trace_t_}, {"mems", trace_mems_}, {"phase_rad", trace_phase_},
                  {"seed_mw", trace_dr_}, {"power_dbm", trace_sa_}};
    trace_t_.clear();
    trace_mems_.clear();
    trace_phase_.clear();
    trace_dr_.clear();
    trace_sa_.clear();
    emit("telemetry", "state", std::move(p));
}

std::vector<std::string> Session::drain()
{
    std::vector<std::string> v(std::make_move_iterator(out_.begin()), std::make_move_iterator(out_.end()));
    out_.clear();
    return v;
}

std::vector<std::string> replay(const RunConfig &cfg, const std::vector<JournalEntry> &journal,
                                std::int64_t until_tick)
{
    Session s(cfg);
    std::vector<std::string> out;
    std::size_t next = 0;
    auto feed = [&] {
        while (next < journal.size() && journal[next].tick <= s.tick_index()) {
            s.submit(journal[next].line, journal[next].commander);
            ++next;
        }
    };
    while (s.tick_index() < until_tick) {
        feed();
        s.step();
        for (auto &m : s.drain())
            out.push_back(std::move(m));
    }
    feed();
    for (auto &m : s.drain())
        out.push_back(std::move(m));
    return out;
}
} // namespace opo::session

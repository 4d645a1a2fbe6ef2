#ifndef OPO_SESSION_HPP
#define OPO_SESSION_HPP

// Interactive operator session over the virtual apparatus, and the TCP endpoint
// that carries it.
//
// Wire format: one JSON object per line.
//   client -> server  {"kind":"command","name":"set_pump_power","seq":7,"payload":{"watts":0.02}}
//   server -> client  {"kind":"ack","name":...,"seq":..,"ref_seq":7,"t":..,"payload":{...}}
//                     {"kind":"error","name":...,"seq":..,"ref_seq":7,"t":..,"payload":{"code":..,"message":..}}
//                     {"kind":"telemetry","name":"state","seq":..,"t":..,"payload":{...}}
// Server messages share one strictly increasing sequence and go to every
// connected client, so any gap is visible to each of them.

#include "opo/config.hpp"
#include "opo/control.hpp"
#include "opo/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace opo::session
{
// One line received from a client, stamped with the tick it was applied before.
struct JournalEntry
{
    std::int64_t tick = 0;
    std::string line;
    bool commander = true;
};

nlohmann::json journal_to_json(const std::vector<JournalEntry> &journal);
std::vector<JournalEntry> journal_from_json(const nlohmann::json &j);

class Session
{
public:
    explicit Session(const RunConfig &cfg);

    // Applies one client line immediately (between ticks). Exactly one ack or
    // error is queued per line. Observers may not command.
    void submit(std::string_view line, bool commander = true);

    void step();
    void advance(double seconds);

    // Serialized outgoing messages since the last drain, in sequence order.
    std::vector<std::string> drain();

    const std::vector<JournalEntry> &journal() const { return journal_; }
    std::int64_t tick_index() const { return bench_.apparatus.state().tick_index; }
    double time() const { return bench_.apparatus.state().clock; }
    sim::Apparatus &apparatus() { return bench_.apparatus; }
    control::LockLoop &loop() { return bench_.loop; }
    const RunConfig &config() const { return cfg_; }

private:
    void emit(std::string_view kind, std::string_view name, nlohmann::json payload,
              const nlohmann::json &ref_seq = nullptr);
    nlohmann::json apply(const std::string &name, const nlohmann::json &payload);
    void telemetry();

    RunConfig cfg_;
    experiments::Bench bench_;
    std::int64_t telemetry_every_;
    std::int64_t since_telemetry_ = 0;
    std::uint64_t seq_ = 0;
    std::deque<std::string> out_;
    std::vector<JournalEntry> journal_;
    std::vector<double> trace_t_, trace_dr_, trace_sa_, trace_phase_;
    std::vector<int> trace_mems_;
};

// Re-runs a journal against a fresh session up to `until_tick` and returns
// every message produced.
std::vector<std::string> replay(const RunConfig &cfg, const std::vector<JournalEntry> &journal,
                                std::int64_t until_tick);

// NDJSON over TCP. The first client to connect commands; later ones observe.
// The apparatus only advances while a commander is connected.
class Server
{
public:
    // port 0 picks a free port.
    Server(Session &session, int port, double time_factor, std::string bind_address = "127.0.0.1");
    ~Server();
    Server(const Server &) = delete;
    Server &operator=(const Server &) = delete;

    int port() const { return port_; }
    // Serves until stop is set.
    void run(const std::atomic<bool> &stop);

private:
    struct Client
    {
        int fd;
        bool commander;
        std::string in;
        std::string out;
    };

    void accept_clients();
    bool read_client(Client &c);
    bool flush_client(Client &c);
    bool has_commander() const;

    Session &session_;
    double time_factor_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::vector<Client> clients_;
};
} // namespace opo::session

#endif

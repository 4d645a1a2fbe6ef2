#include "opo/session.hpp"

#include "opo/errors.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

namespace opo::session
{
namespace
{
constexpr std::size_t max_line = 1 << 16;
constexpr std::size_t max_backlog = 64u << 20;
constexpr int max_batch = 500;  // ticks between polls

void set_nonblocking(int fd)
{
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}
} // namespace

Server::Server(Session &session, int port, double time_factor, std::string bind_address)
    : session_(session), time_factor_(time_factor)
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    require(listen_fd_ >= 0, ErrorCode::config, "cannot create socket");
    const int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        fail(ErrorCode::config, "invalid bind address '" + bind_address + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 8) != 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        fail(ErrorCode::config, "cannot listen on port " + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
}

Server::~Server()
{
    for (auto &c : clients_)
        ::close(c.fd);
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
}

bool Server::has_commander() const
{
    return std::any_of(clients_.begin(), clients_.end(), [](const Client &c) { return c.commander; });
}

void Server::accept_clients()
{
    for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
            return;
        set_nonblocking(fd);
        clients_.push_back({fd, !has_commander(), {}, {}});
    }
}

// Reads what is available and submits complete lines. False on disconnect.
bool Server::read_client(Client &c)
{
    char buf[4096];
    for (;;) {
        const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
        if (n == 0)
            return false;
        if (n < 0)
            return errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR;
        c.in.append(buf, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = c.in.find('\n')) != std::string::npos) {
            std::string line = c.in.substr(0, pos);
            c.in.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (!line.empty())
                session_.submit(line, c.commander);
        }
        if (c.in.size() > max_line) {
            session_.submit(c.in.substr(0, 256), c.commander);
            c.in.clear();
        }
    }
}

bool Server::flush_client(Client &c)
{
    while (!c.out.empty()) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n < 0)
            return errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR;
        c.out.erase(0, static_cast<std::size_t>(n));
    }
    return true;
}

void Server::run(const std::atomic<bool> &stop)
{
    using clock = std::chrono::steady_clock;
    const double tick = session_.apparatus().tick();
    auto last = clock::now();
    double owed = 0.0;  // simulated seconds due but not yet stepped

    while (!stop.load()) {
        std::vector<pollfd> fds;
        fds.push_back({listen_fd_, POLLIN, 0});
        for (const auto &c : clients_)
            fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});

        int timeout_ms = 50;
        if (has_commander()) {
            if (time_factor_ <= 0.0 || owed >= tick)
                timeout_ms = 0;
            else
                timeout_ms = std::clamp(static_cast<int>(std::ceil((tick - owed) / time_factor_ * 1e3)), 1, 50);
        }
        ::poll(fds.data(), fds.size(), timeout_ms);

        if (fds[0].revents & POLLIN)
            accept_clients();
        for (std::size_t i = 0; i < clients_.size() && i + 1 < fds.size(); ++i) {
            auto &c = clients_[i];
            const short re = fds[i + 1].revents;
            bool alive = true;
            if (re & (POLLIN | POLLHUP | POLLERR))
                alive = read_client(c);
            if (!alive) {
                ::close(c.fd);
                c.fd = -1;
            }
        }
        clients_.erase(std::remove_if(clients_.begin(), clients_.end(), [](const Client &c) { return c.fd < 0; }),
                       clients_.end());

        const auto now = clock::now();
        const double wall = std::chrono::duration<double>(now - last).count();
        last = now;
        if (has_commander()) {
            int n = 0;
            if (time_factor_ <= 0.0) {
                n = max_batch;
            } else {
                owed += wall * time_factor_;
                n = static_cast<int>(std::min<double>(std::floor(owed / tick), max_batch));
                owed = std::min(owed - n * tick, 1.0);
            }
            for (int k = 0; k < n; ++k)
                session_.step();
        } else {
            owed = 0.0;  // paused
        }

        for (const auto &m : session_.drain())
            for (auto &c : clients_) {
                c.out += m;
                c.out += '\n';
            }
        for (auto &c : clients_)
            if (!flush_client(c) || c.out.size() > max_backlog) {
                ::close(c.fd);
                c.fd = -1;
            }
        clients_.erase(std::remove_if(clients_.begin(), clients_.end(), [](const Client &c) { return c.fd < 0; }),
                       clients_.end());
    }
    for (const auto &m : session_.drain())
        for (auto &c : clients_)
            c.out += m + '\n';
    for (auto &c : clients_)
        flush_client(c);
}
} // namespace opo::session

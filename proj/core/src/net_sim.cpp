#include "matef/net_sim.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "matef/dns.hpp"
#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

namespace {

std::string peer_string(const sockaddr_in& peer) {
    char ip[INET_ADDRSTRLEN] = {0};
    inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof(ip));
    return std::string(ip) + ":" + std::to_string(ntohs(peer.sin_port));
}

std::string qtype_name(std::uint16_t qtype) {
    switch (qtype) {
        case 1: return "A";
        case 2: return "NS";
        case 5: return "CNAME";
        case 12: return "PTR";
        case 15: return "MX";
        case 16: return "TXT";
        case 28: return "AAAA";
        default: return std::to_string(qtype);
    }
}

int bound_udp_socket(const std::string& host, std::uint16_t port, std::uint16_t* actual) {
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw BackendError("dns: cannot create UDP socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw BackendError("dns: bad bind host " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        const int err = errno;
        ::close(fd);
        throw BackendError("dns: bind failed on " + host + ":" + std::to_string(port) + ": " +
                           std::strerror(err));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    *actual = ntohs(bound.sin_port);
    return fd;
}

int bound_tcp_listener(const std::string& host, std::uint16_t port, std::uint16_t* actual) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw BackendError("tcp: cannot create socket");
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw BackendError("tcp: bad bind host " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 16) != 0) {
        const int err = errno;
        ::close(fd);
        throw BackendError("tcp: bind failed on " + host + ":" + std::to_string(port) + ": " +
                           std::strerror(err));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    *actual = ntohs(bound.sin_port);
    return fd;
}

}  // namespace

struct Services::Impl {
    ServiceConfig cfg;
    std::array<std::uint8_t, 4> answer_ip{};

    std::atomic<bool> stopping{false};
    bool started = false;

    mutable std::mutex log_mutex;
    std::vector<InteractionEvent> log;
    std::map<std::string, std::string> last_at;  // per-service timestamp clamp

    int dns_fd = -1;
    std::uint16_t dns_port = 0;
    std::thread dns_thread;

    httplib::Server http;
    std::uint16_t http_port = 0;
    std::thread http_thread;

    struct EchoListener {
        int fd = -1;
        std::uint16_t port = 0;
    };
    std::vector<EchoListener> echo;
    std::vector<std::thread> echo_threads;
    std::mutex conn_mutex;
    std::vector<std::thread> conn_threads;

    void add_event(const std::string& service, const std::string& peer,
                   const std::string& detail) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::string at = utc_now_iso8601();
        auto& last = last_at[service];
        // ISO-8601 UTC strings compare chronologically; clamp so per-service
        // timestamps never regress even if the wall clock does.
        if (!last.empty() && at < last) at = last;
        last = at;
        log.push_back({at, service, peer, detail});
    }

    void dns_loop() {
        std::vector<std::uint8_t> buf(65536);
        while (!stopping.load()) {
            pollfd p{dns_fd, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) continue;
            sockaddr_in peer{};
            socklen_t plen = sizeof(peer);
            const ssize_t n = ::recvfrom(dns_fd, buf.data(), buf.size(), 0,
                                         reinterpret_cast<sockaddr*>(&peer), &plen);
            if (n < 0) continue;
            const std::span<const std::uint8_t> datagram(buf.data(), static_cast<std::size_t>(n));
            std::string err;
            std::vector<std::uint8_t> reply;
            if (const auto query = dns::parse_query(datagram, &err)) {
                reply = dns::build_response(*query, answer_ip, cfg.dns_ttl);
                add_event("dns", peer_string(peer),
                          "qname=" + query->question.qname +
                              " qtype=" + qtype_name(query->question.qtype));
            } else {
                // FORMERR replies are sent but only valid queries are logged.
                reply = dns::build_formerr(datagram);
            }
            ::sendto(dns_fd, reply.data(), reply.size(), 0, reinterpret_cast<sockaddr*>(&peer),
                     plen);
        }
    }

    void echo_accept_loop(int lfd, std::uint16_t port) {
        while (!stopping.load()) {
            pollfd p{lfd, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) continue;
            sockaddr_in peer{};
            socklen_t plen = sizeof(peer);
            const int cfd = ::accept(lfd, reinterpret_cast<sockaddr*>(&peer), &plen);
            if (cfd < 0) continue;
            add_event("tcp", peer_string(peer), "accept port=" + std::to_string(port));
            std::lock_guard<std::mutex> lock(conn_mutex);
            conn_threads.emplace_back([this, cfd] { echo_connection(cfd); });
        }
    }

    void echo_connection(int cfd) {
        std::vector<char> buf(4096);
        while (!stopping.load()) {
            pollfd p{cfd, POLLIN, 0};
            const int rc = ::poll(&p, 1, 50);
            if (rc < 0) break;
            if (rc == 0) continue;
            const ssize_t n = ::read(cfd, buf.data(), buf.size());
            if (n <= 0) break;
            std::size_t off = 0;
            while (off < static_cast<std::size_t>(n)) {
                const ssize_t w = ::write(cfd, buf.data() + off, static_cast<std::size_t>(n) - off);
                if (w <= 0) break;
                off += static_cast<std::size_t>(w);
            }
        }
        ::close(cfd);
    }

    void shutdown() {
        if (stopping.exchange(true)) return;
        if (started) {
            http.stop();
            if (http_thread.joinable()) http_thread.join();
            if (dns_thread.joinable()) dns_thread.join();
            for (auto& t : echo_threads)
                if (t.joinable()) t.join();
            std::vector<std::thread> conns;
            {
                std::lock_guard<std::mutex> lock(conn_mutex);
                conns.swap(conn_threads);
            }
            for (auto& t : conns)
                if (t.joinable()) t.join();
        }
        if (dns_fd >= 0) {
            ::close(dns_fd);
            dns_fd = -1;
        }
        for (auto& l : echo) {
            if (l.fd >= 0) ::close(l.fd);
            l.fd = -1;
        }
    }

    ~Impl() { shutdown(); }
};

Services::Services() : impl_(std::make_unique<Impl>()) {}
Services::~Services() = default;
Services::Services(Services&&) noexcept = default;
Services& Services::operator=(Services&&) noexcept = default;

Services Services::start(const ServiceConfig& cfg) {
    Services s;
    auto& impl = *s.impl_;
    impl.cfg = cfg;
    impl.answer_ip = dns::parse_ipv4(cfg.dns_answer_ip);

    // Bind everything before serving anything: a failed bind throws and the
    // already-bound sockets are released by the Impl destructor.
    impl.dns_fd = bound_udp_socket(cfg.bind_host, cfg.dns_port, &impl.dns_port);

    for (const std::uint16_t port : cfg.tcp_echo_ports) {
        Impl::EchoListener listener;
        listener.fd = bound_tcp_listener(cfg.bind_host, port, &listener.port);
        impl.echo.push_back(listener);
    }

    impl.http.set_pre_routing_handler([pimpl = s.impl_.get()](const httplib::Request& req,
                                                              httplib::Response& res) {
        // Every method and path gets the one configured reply; no routing table.
        res.status = pimpl->cfg.http_status;
        res.set_content(pimpl->cfg.http_body, pimpl->cfg.http_content_type);
        pimpl->add_event("http", req.remote_addr + ":" + std::to_string(req.remote_port),
                         req.method + " " + req.path);
        return httplib::Server::HandlerResponse::Handled;
    });
    if (cfg.http_port == 0) {
        const int port = impl.http.bind_to_any_port(cfg.bind_host);
        if (port <= 0)
            throw BackendError("http: bind failed on " + cfg.bind_host + ":<ephemeral>");
        impl.http_port = static_cast<std::uint16_t>(port);
    } else {
        if (!impl.http.bind_to_port(cfg.bind_host, cfg.http_port))
            throw BackendError("http: bind failed on " + cfg.bind_host + ":" +
                               std::to_string(cfg.http_port));
        impl.http_port = cfg.http_port;
    }

    // All listeners bound; start serving.
    impl.started = true;
    impl.http_thread = std::thread([pimpl = s.impl_.get()] { pimpl->http.listen_after_bind(); });
    impl.http.wait_until_ready();
    impl.dns_thread = std::thread([pimpl = s.impl_.get()] { pimpl->dns_loop(); });
    for (const auto& listener : impl.echo)
        impl.echo_threads.emplace_back([pimpl = s.impl_.get(), listener] {
            pimpl->echo_accept_loop(listener.fd, listener.port);
        });
    return s;
}

void Services::stop() { impl_->shutdown(); }

std::uint16_t Services::dns_port() const { return impl_->dns_port; }
std::uint16_t Services::http_port() const { return impl_->http_port; }

std::vector<std::uint16_t> Services::echo_ports() const {
    std::vector<std::uint16_t> out;
    for (const auto& l : impl_->echo) out.push_back(l.port);
    return out;
}

std::vector<InteractionEvent> Services::interaction_log() const {
    std::lock_guard<std::mutex> lock(impl_->log_mutex);
    return impl_->log;
}

void Services::export_log_jsonl(std::ostream& out) const {
    for (const auto& e : interaction_log()) {
        nlohmann::json j;
        j["at"] = e.at;
        j["service"] = e.service;
        j["peer"] = e.peer;
        j["detail"] = e.detail;
        out << j.dump() << '\n';
    }
}

std::vector<std::uint8_t> dns_answer(std::span<const std::uint8_t> query,
                                     const ServiceConfig& cfg) {
    std::string err;
    if (const auto parsed = dns::parse_query(query, &err))
        return dns::build_response(*parsed, dns::parse_ipv4(cfg.dns_answer_ip), cfg.dns_ttl);
    return dns::build_formerr(query);
}

}  // namespace matef

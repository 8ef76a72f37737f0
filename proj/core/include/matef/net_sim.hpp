#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace matef {

/// Configuration for the simulated internet services.
struct ServiceConfig {
    std::string dns_answer_ip = "10.99.99.1";  // returned for every A query
    std::uint32_t dns_ttl = 300;
    int http_status = 200;
    std::string http_body = "OK\n";
    std::string http_content_type = "text/plain";
    std::vector<std::uint16_t> tcp_echo_ports;  // 0 = pick an ephemeral port

    std::string bind_host = "127.0.0.1";
    std::uint16_t dns_port = 0;   // 0 = ephemeral
    std::uint16_t http_port = 0;  // 0 = ephemeral
};

struct InteractionEvent {
    std::string at;       // ISO-8601 UTC
    std::string service;  // dns | http | tcp
    std::string peer;     // ip:port
    std::string detail;   // e.g. "qname=x.example qtype=A", "GET /probe"
};

/// Running DNS/HTTP/TCP-echo listeners with an append-only interaction log.
/// Start is all-or-nothing; stop() (or destruction) joins every thread and
/// releases every listener.
class Services {
public:
    /// Throws BackendError naming the endpoint on bind failure.
    static Services start(const ServiceConfig& cfg);
    ~Services();
    Services(Services&&) noexcept;
    Services& operator=(Services&&) noexcept;
    Services(const Services&) = delete;
    Services& operator=(const Services&) = delete;

    void stop();

    std::uint16_t dns_port() const;
    std::uint16_t http_port() const;
    std::vector<std::uint16_t> echo_ports() const;

    /// Complete log since start, ordered per service.
    std::vector<InteractionEvent> interaction_log() const;
    /// JSON Lines export: one event per line with fields at,service,peer,detail.
    void export_log_jsonl(std::ostream& out) const;

private:
    Services();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Pure DNS responder: answer bytes for a query datagram under the given
/// config. Unparseable input yields a FORMERR (RCODE 1) reply.
std::vector<std::uint8_t> dns_answer(std::span<const std::uint8_t> query,
                                     const ServiceConfig& cfg);

}  // namespace matef

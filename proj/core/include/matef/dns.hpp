#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace matef::dns {

inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kClassIN = 1;

struct Question {
    std::string qname;  // dotted, lowercase as received
    std::uint16_t qtype = 0;
    std::uint16_t qclass = 0;
};

struct Query {
    std::uint16_t id = 0;
    std::uint16_t flags = 0;
    Question question;  // first question; QDCOUNT >= 1 required
};

/// Parses a DNS query datagram. Returns nullopt (with a reason) when the
/// message is malformed: short header, zero questions, label overruns,
/// compression pointers in the question, or truncated fields.
std::optional<Query> parse_query(std::span<const std::uint8_t> datagram,
                                 std::string* error = nullptr);

/// Response to a well-formed query. A/IN questions get RCODE 0 and exactly one
/// answer carrying answer_ipv4/ttl (name compressed to the question at 0x0c);
/// any other qtype/qclass gets RCODE 0 with zero answers, which keeps
/// catch-all resolvers progressing. The question section is echoed.
std::vector<std::uint8_t> build_response(const Query& query, const std::array<std::uint8_t, 4>& answer_ipv4,
                                         std::uint32_t ttl);

/// FORMERR (RCODE 1) reply for an unparseable datagram; id is echoed when at
/// least two bytes were received, else zero.
std::vector<std::uint8_t> build_formerr(std::span<const std::uint8_t> datagram);

/// Parses a dotted IPv4 address; throws ConfigError on malformed input.
std::array<std::uint8_t, 4> parse_ipv4(const std::string& dotted);

}  // namespace matef::dns

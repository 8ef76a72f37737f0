#include "matef/dns.hpp"

#include <array>

#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef::dns {

namespace {

constexpr std::uint16_t kFlagQR = 0x8000;
constexpr std::uint16_t kFlagRD = 0x0100;
constexpr std::uint16_t kFlagRA = 0x0080;
constexpr std::uint16_t kOpcodeMask = 0x7800;

std::uint16_t read_u16(std::span<const std::uint8_t> buf, std::size_t off) {
    return static_cast<std::uint16_t>((buf[off] << 8) | buf[off + 1]);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_qname(std::vector<std::uint8_t>& out, const std::string& dotted) {
    for (const auto& label : split(dotted, '.')) {
        if (label.empty()) continue;
        out.push_back(static_cast<std::uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
    }
    out.push_back(0);
}

}  // namespace

std::optional<Query> parse_query(std::span<const std::uint8_t> datagram, std::string* error) {
    auto bad = [&](const char* why) -> std::optional<Query> {
        if (error) *error = why;
        return std::nullopt;
    };
    if (datagram.size() < 12) return bad("datagram shorter than DNS header");
    Query q;
    q.id = read_u16(datagram, 0);
    q.flags = read_u16(datagram, 2);
    if (q.flags & kFlagQR) return bad("QR bit set: not a query");
    const std::uint16_t qdcount = read_u16(datagram, 4);
    if (qdcount == 0) return bad("zero questions");

    // First question only; catch-all service answers one question per message.
    std::size_t pos = 12;
    std::string name;
    std::size_t name_len = 0;
    while (true) {
        if (pos >= datagram.size()) return bad("qname runs past end of datagram");
        const std::uint8_t len = datagram[pos];
        if (len == 0) {
            ++pos;
            break;
        }
        if ((len & 0xc0) != 0) return bad("compression pointer in question name");
        if (pos + 1 + len > datagram.size()) return bad("label runs past end of datagram");
        name_len += len + 1;
        if (name_len > 255) return bad("qname exceeds 255 octets");
        if (!name.empty()) name += '.';
        name.append(reinterpret_cast<const char*>(datagram.data() + pos + 1), len);
        pos += 1 + len;
    }
    if (pos + 4 > datagram.size()) return bad("question truncated before qtype/qclass");
    q.question.qname = name;
    q.question.qtype = read_u16(datagram, pos);
    q.question.qclass = read_u16(datagram, pos + 2);
    return q;
}

std::vector<std::uint8_t> build_response(const Query& query,
                                         const std::array<std::uint8_t, 4>& answer_ipv4,
                                         std::uint32_t ttl) {
    const bool answerable = query.question.qtype == kTypeA && query.question.qclass == kClassIN;

    std::vector<std::uint8_t> out;
    out.reserve(12 + query.question.qname.size() + 2 + 4 + 16);
    put_u16(out, query.id);
    // QR=1, opcode copied, RD copied, RA=1, RCODE=0.
    const std::uint16_t flags = kFlagQR | (query.flags & kOpcodeMask) | (query.flags & kFlagRD) |
                                kFlagRA;
    put_u16(out, flags);
    put_u16(out, 1);                       // QDCOUNT
    put_u16(out, answerable ? 1 : 0);      // ANCOUNT
    put_u16(out, 0);                       // NSCOUNT
    put_u16(out, 0);                       // ARCOUNT

    put_qname(out, query.question.qname);
    put_u16(out, query.question.qtype);
    put_u16(out, query.question.qclass);

    if (answerable) {
        put_u16(out, 0xc00c);  // pointer to the question name at offset 12
        put_u16(out, kTypeA);
        put_u16(out, kClassIN);
        put_u32(out, ttl);
        put_u16(out, 4);
        out.insert(out.end(), answer_ipv4.begin(), answer_ipv4.end());
    }
    return out;
}

std::vector<std::uint8_t> build_formerr(std::span<const std::uint8_t> datagram) {
    std::vector<std::uint8_t> out;
    out.reserve(12);
    const std::uint16_t id = datagram.size() >= 2 ? read_u16(datagram, 0) : 0;
    put_u16(out, id);
    std::uint16_t flags = kFlagQR | kFlagRA | 0x0001;  // RCODE=1 FORMERR
    if (datagram.size() >= 4) flags |= read_u16(datagram, 2) & (kOpcodeMask | kFlagRD);
    put_u16(out, flags);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, 0);
    return out;
}

std::array<std::uint8_t, 4> parse_ipv4(const std::string& dotted) {
    const auto parts = split(dotted, '.');
    if (parts.size() != 4) throw ConfigError("bad IPv4 address: " + dotted);
    std::array<std::uint8_t, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        int v = -1;
        try {
            v = std::stoi(parts[i]);
        } catch (...) {
        }
        if (v < 0 || v > 255 || parts[i].empty())
            throw ConfigError("bad IPv4 address: " + dotted);
        out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

}  // namespace matef::dns

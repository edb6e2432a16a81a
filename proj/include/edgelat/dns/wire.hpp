#pragma once

// RFC 1035 message encoding and decoding.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgelat/error.hpp"
#include "edgelat/ip.hpp"

namespace edgelat::dns {

enum class RecordType : std::uint16_t {
  A = 1,
  NS = 2,
  CNAME = 5,
  SOA = 6,
  PTR = 12,
  TXT = 16,
  AAAA = 28,
  OPT = 41,
};

inline constexpr std::uint16_t kClassIn = 1;
inline constexpr std::uint16_t kEdnsPayloadSize = 1232;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxNameOctets = 255;
inline constexpr std::size_t kMaxLabelOctets = 63;

inline std::string to_string(RecordType t) {
  switch (t) {
    case RecordType::A: return "A";
    case RecordType::NS: return "NS";
    case RecordType::CNAME: return "CNAME";
    case RecordType::SOA: return "SOA";
    case RecordType::PTR: return "PTR";
    case RecordType::TXT: return "TXT";
    case RecordType::AAAA: return "AAAA";
    case RecordType::OPT: return "OPT";
  }
  return "TYPE" + std::to_string(static_cast<std::uint16_t>(t));
}

inline std::optional<RecordType> parse_record_type(std::string_view s) {
  for (auto t : {RecordType::A, RecordType::NS, RecordType::CNAME, RecordType::SOA, RecordType::PTR,
                 RecordType::TXT, RecordType::AAAA, RecordType::OPT}) {
    if (s == to_string(t)) return t;
  }
  if (s.starts_with("TYPE") && s.size() > 4) {
    unsigned v = 0;
    for (char c : s.substr(4)) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<unsigned>(c - '0');
      if (v > 0xFFFF) return std::nullopt;
    }
    return static_cast<RecordType>(v);
  }
  return std::nullopt;
}

inline RecordType address_type(IpVersion v) { return v == IpVersion::V4 ? RecordType::A : RecordType::AAAA; }

/// Strip one trailing dot. The canonical in-memory form of a name has none.
inline std::string normalize_name(std::string_view name) {
  if (!name.empty() && name.back() == '.') name.remove_suffix(1);
  return std::string(name);
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

inline bool names_equal(std::string_view a, std::string_view b) {
  if (!a.empty() && a.back() == '.') a.remove_suffix(1);
  if (!b.empty() && b.back() == '.') b.remove_suffix(1);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  return true;
}

struct DnsQuestion {
  std::string qname;
  RecordType qtype = RecordType::A;
  Endpoint resolver;
  IpVersion transport = IpVersion::V4;
  std::chrono::milliseconds timeout{5000};
  bool edns = true;

  friend bool operator==(const DnsQuestion&, const DnsQuestion&) = default;

  static DnsQuestion to(std::string qname, RecordType qtype, Endpoint resolver,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds{5000}) {
    DnsQuestion q;
    q.qname = normalize_name(qname);
    q.qtype = qtype;
    q.transport = resolver.address.version();
    q.resolver = std::move(resolver);
    q.timeout = timeout;
    return q;
  }
};

struct NameData {
  std::string name;
  friend bool operator==(const NameData&, const NameData&) = default;
};
struct TxtData {
  std::vector<std::string> strings;
  friend bool operator==(const TxtData&, const TxtData&) = default;
};
struct OpaqueData {
  std::vector<std::uint8_t> bytes;
  friend bool operator==(const OpaqueData&, const OpaqueData&) = default;
};

using Rdata = std::variant<IpAddress, NameData, TxtData, OpaqueData>;

struct ResourceRecord {
  std::string name;
  RecordType type = RecordType::A;
  std::uint16_t rclass = kClassIn;
  std::uint32_t ttl = 0;
  Rdata rdata;

  const IpAddress* address() const { return std::get_if<IpAddress>(&rdata); }

  friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

struct QuestionEcho {
  std::string name;
  RecordType type = RecordType::A;
  std::uint16_t qclass = kClassIn;
  friend bool operator==(const QuestionEcho&, const QuestionEcho&) = default;
};

struct Flags {
  bool qr = false;
  std::uint8_t opcode = 0;
  bool aa = false;
  bool tc = false;
  bool rd = false;
  bool ra = false;
  friend bool operator==(const Flags&, const Flags&) = default;
};

struct DecodedMessage {
  std::uint16_t id = 0;
  Flags flags;
  int rcode = 0;
  std::vector<QuestionEcho> questions;
  std::vector<ResourceRecord> answers;
};

namespace detail {

inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
}

inline std::uint16_t get16(std::span<const std::uint8_t> m, std::size_t at) {
  return static_cast<std::uint16_t>((m[at] << 8) | m[at + 1]);
}

inline std::uint32_t get32(std::span<const std::uint8_t> m, std::size_t at) {
  return (static_cast<std::uint32_t>(get16(m, at)) << 16) | get16(m, at + 2);
}

inline void need(std::span<const std::uint8_t> m, std::size_t at, std::size_t n, const char* what) {
  if (at > m.size() || m.size() - at < n) throw Error(Errc::Malformed, std::string("truncated ") + what);
}

}  // namespace detail

/// Appends the uncompressed wire form of `name`.
inline void encode_name(std::vector<std::uint8_t>& out, std::string_view name) {
  name = name.empty() || name.back() != '.' ? name : name.substr(0, name.size() - 1);
  std::size_t total = 1;
  if (!name.empty()) {
    std::size_t start = 0;
    while (true) {
      auto dot = name.find('.', start);
      auto label = name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
      if (label.empty()) throw Error(Errc::InvalidName, "empty label in '" + std::string(name) + "'");
      if (label.size() > kMaxLabelOctets)
        throw Error(Errc::InvalidName, "label longer than 63 octets in '" + std::string(name) + "'");
      total += label.size() + 1;
      out.push_back(static_cast<std::uint8_t>(label.size()));
      out.insert(out.end(), label.begin(), label.end());
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
  }
  if (total > kMaxNameOctets) throw Error(Errc::InvalidName, "name exceeds 255 octets");
  out.push_back(0);
}

inline void validate_name(std::string_view name) {
  std::vector<std::uint8_t> scratch;
  encode_name(scratch, name);
}

/// Standard query: RD set, one question, class IN, optional EDNS0 OPT
/// advertising a 1232-octet UDP payload.
inline std::vector<std::uint8_t> encode_query(const DnsQuestion& q, std::uint16_t txid, bool edns) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + q.qname.size() + 2 + 4 + 11);
  detail::put16(out, txid);
  detail::put16(out, 0x0100);  // RD
  detail::put16(out, 1);
  detail::put16(out, 0);
  detail::put16(out, 0);
  detail::put16(out, edns ? 1 : 0);
  encode_name(out, q.qname);
  detail::put16(out, static_cast<std::uint16_t>(q.qtype));
  detail::put16(out, kClassIn);
  if (edns) {
    out.push_back(0);
    detail::put16(out, static_cast<std::uint16_t>(RecordType::OPT));
    detail::put16(out, kEdnsPayloadSize);
    detail::put32(out, 0);
    detail::put16(out, 0);
  }
  return out;
}

/// Reads a possibly compressed name starting at `at`. Returns the name and
/// the offset just past its in-place encoding.
inline std::pair<std::string, std::size_t> decode_name(std::span<const std::uint8_t> m, std::size_t at) {
  constexpr int kMaxJumps = 64;
  std::string name;
  std::size_t pos = at;
  std::optional<std::size_t> resume;
  std::size_t octets = 1;
  int jumps = 0;
  while (true) {
    detail::need(m, pos, 1, "name");
    std::uint8_t len = m[pos];
    if ((len & 0xC0) == 0xC0) {
      detail::need(m, pos, 2, "compression pointer");
      std::size_t target = static_cast<std::size_t>(detail::get16(m, pos) & 0x3FFF);
      if (target >= m.size()) throw Error(Errc::Malformed, "compression pointer beyond message");
      if (++jumps > kMaxJumps) throw Error(Errc::Malformed, "compression pointer loop");
      if (!resume) resume = pos + 2;
      pos = target;
      continue;
    }
    if ((len & 0xC0) != 0) throw Error(Errc::Malformed, "reserved label type");
    if (len == 0) {
      ++pos;
      break;
    }
    detail::need(m, pos + 1, len, "label");
    octets += len + 1u;
    if (octets > kMaxNameOctets) throw Error(Errc::Malformed, "name exceeds 255 octets");
    if (!name.empty()) name.push_back('.');
    name.append(reinterpret_cast<const char*>(m.data() + pos + 1), len);
    pos += len + 1u;
  }
  return {name, resume.value_or(pos)};
}

inline Rdata decode_rdata(std::span<const std::uint8_t> m, RecordType type, std::size_t at, std::size_t len) {
  auto body = m.subspan(at, len);
  switch (type) {
    case RecordType::A:
      if (len != 4) throw Error(Errc::Malformed, "A rdata length " + std::to_string(len));
      return IpAddress::v4({body[0], body[1], body[2], body[3]});
    case RecordType::AAAA: {
      if (len != 16) throw Error(Errc::Malformed, "AAAA rdata length " + std::to_string(len));
      std::array<std::uint8_t, 16> b{};
      std::copy(body.begin(), body.end(), b.begin());
      return IpAddress::v6(b);
    }
    case RecordType::CNAME:
    case RecordType::NS:
    case RecordType::PTR: {
      auto [name, end] = decode_name(m, at);
      if (end > at + len) throw Error(Errc::Malformed, "name overruns rdata");
      return NameData{name};
    }
    case RecordType::TXT: {
      TxtData txt;
      std::size_t pos = 0;
      while (pos < len) {
        std::size_t n = body[pos];
        if (pos + 1 + n > len) throw Error(Errc::Malformed, "TXT string overruns rdata");
        txt.strings.emplace_back(reinterpret_cast<const char*>(body.data() + pos + 1), n);
        pos += 1 + n;
      }
      return txt;
    }
    default:
      return OpaqueData{{body.begin(), body.end()}};
  }
}

/// Parses header, question, and answer sections. Records of unknown type
/// keep their rdata as opaque bytes.
inline DecodedMessage decode_response(std::span<const std::uint8_t> m) {
  if (m.size() < kHeaderSize)
    throw Error(Errc::Malformed, "message of " + std::to_string(m.size()) + " octets is shorter than a header");
  DecodedMessage msg;
  msg.id = detail::get16(m, 0);
  std::uint16_t fl = detail::get16(m, 2);
  msg.flags.qr = (fl & 0x8000) != 0;
  msg.flags.opcode = static_cast<std::uint8_t>((fl >> 11) & 0xF);
  msg.flags.aa = (fl & 0x0400) != 0;
  msg.flags.tc = (fl & 0x0200) != 0;
  msg.flags.rd = (fl & 0x0100) != 0;
  msg.flags.ra = (fl & 0x0080) != 0;
  msg.rcode = fl & 0xF;
  std::uint16_t qdcount = detail::get16(m, 4);
  std::uint16_t ancount = detail::get16(m, 6);

  std::size_t pos = kHeaderSize;
  for (std::uint16_t i = 0; i < qdcount; ++i) {
    auto [name, next] = decode_name(m, pos);
    detail::need(m, next, 4, "question");
    msg.questions.push_back({name, static_cast<RecordType>(detail::get16(m, next)), detail::get16(m, next + 2)});
    pos = next + 4;
  }
  msg.answers.reserve(ancount);
  for (std::uint16_t i = 0; i < ancount; ++i) {
    auto [name, next] = decode_name(m, pos);
    detail::need(m, next, 10, "resource record header");
    ResourceRecord rr;
    rr.name = std::move(name);
    rr.type = static_cast<RecordType>(detail::get16(m, next));
    rr.rclass = detail::get16(m, next + 2);
    rr.ttl = detail::get32(m, next + 4);
    if (rr.ttl > 0x7FFFFFFFu) rr.ttl = 0;  // RFC 2181 section 8
    std::size_t rdlen = detail::get16(m, next + 8);
    detail::need(m, next + 10, rdlen, "rdata");
    rr.rdata = decode_rdata(m, rr.type, next + 10, rdlen);
    msg.answers.push_back(std::move(rr));
    pos = next + 10 + rdlen;
  }
  return msg;
}

/// Builds response messages. Used by the test fixtures and by anything that
/// needs to synthesize wire data (e.g. re-encoding imported answers).
class MessageBuilder {
 public:
  explicit MessageBuilder(std::uint16_t id) : id_(id) {}

  MessageBuilder& flags(Flags f) { flags_ = f; return *this; }
  MessageBuilder& rcode(int rc) { rcode_ = rc; return *this; }
  MessageBuilder& truncated(bool tc = true) { flags_.tc = tc; return *this; }
  MessageBuilder& question(std::string name, RecordType type) {
    questions_.push_back({normalize_name(name), type, kClassIn});
    return *this;
  }
  MessageBuilder& answer(ResourceRecord rr) { answers_.push_back(std::move(rr)); return *this; }
  /// Owner names equal to the first question are written as a pointer to offset 12.
  MessageBuilder& compress_owner(bool on = true) { compress_ = on; return *this; }

  std::vector<std::uint8_t> build() const {
    std::vector<std::uint8_t> out;
    detail::put16(out, id_);
    std::uint16_t fl = 0;
    if (flags_.qr) fl |= 0x8000;
    fl |= static_cast<std::uint16_t>((flags_.opcode & 0xF) << 11);
    if (flags_.aa) fl |= 0x0400;
    if (flags_.tc) fl |= 0x0200;
    if (flags_.rd) fl |= 0x0100;
    if (flags_.ra) fl |= 0x0080;
    fl |= static_cast<std::uint16_t>(rcode_ & 0xF);
    detail::put16(out, fl);
    detail::put16(out, static_cast<std::uint16_t>(questions_.size()));
    detail::put16(out, static_cast<std::uint16_t>(answers_.size()));
    detail::put16(out, 0);
    detail::put16(out, 0);
    for (const auto& q : questions_) {
      encode_name(out, q.name);
      detail::put16(out, static_cast<std::uint16_t>(q.type));
      detail::put16(out, q.qclass);
    }
    for (const auto& rr : answers_) {
      if (compress_ && !questions_.empty() && names_equal(rr.name, questions_.front().name)) {
        detail::put16(out, 0xC00C);
      } else {
        encode_name(out, rr.name);
      }
      detail::put16(out, static_cast<std::uint16_t>(rr.type));
      detail::put16(out, rr.rclass);
      detail::put32(out, rr.ttl);
      std::vector<std::uint8_t> rdata;
      std::visit(
          [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, IpAddress>) {
              rdata.assign(d.data(), d.data() + d.size());
            } else if constexpr (std::is_same_v<T, NameData>) {
              encode_name(rdata, d.name);
            } else if constexpr (std::is_same_v<T, TxtData>) {
              for (const auto& s : d.strings) {
                if (s.size() > 255) throw Error(Errc::InvalidArgument, "TXT string longer than 255 octets");
                rdata.push_back(static_cast<std::uint8_t>(s.size()));
                rdata.insert(rdata.end(), s.begin(), s.end());
              }
            } else {
              rdata = d.bytes;
            }
          },
          rr.rdata);
      detail::put16(out, static_cast<std::uint16_t>(rdata.size()));
      out.insert(out.end(), rdata.begin(), rdata.end());
    }
    return out;
  }

 private:
  std::uint16_t id_;
  Flags flags_{.qr = true, .rd = true, .ra = true};
  int rcode_ = 0;
  bool compress_ = false;
  std::vector<QuestionEcho> questions_;
  std::vector<ResourceRecord> answers_;
};

inline ResourceRecord make_a(std::string name, std::uint32_t ttl, std::string_view addr) {
  return {normalize_name(name), RecordType::A, kClassIn, ttl, IpAddress::parse(addr)};
}
inline ResourceRecord make_aaaa(std::string name, std::uint32_t ttl, std::string_view addr) {
  return {normalize_name(name), RecordType::AAAA, kClassIn, ttl, IpAddress::parse(addr)};
}
inline ResourceRecord make_cname(std::string name, std::uint32_t ttl, std::string target) {
  return {normalize_name(name), RecordType::CNAME, kClassIn, ttl, NameData{normalize_name(target)}};
}
inline ResourceRecord make_ns(std::string name, std::uint32_t ttl, std::string target) {
  return {normalize_name(name), RecordType::NS, kClassIn, ttl, NameData{normalize_name(target)}};
}
inline ResourceRecord make_txt(std::string name, std::uint32_t ttl, std::vector<std::string> strings) {
  return {normalize_name(name), RecordType::TXT, kClassIn, ttl, TxtData{std::move(strings)}};
}

}  // namespace edgelat::dns

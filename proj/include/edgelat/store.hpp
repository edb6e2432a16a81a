#pragma once

// Campaign records as JSON lines. Keys are emitted in a fixed order:
//   schema_version, campaign_id, provenance, spec, set
// and nested objects follow the field order of their C++ types.

#include <fstream>
#include <optional>

#include "edgelat/campaign.hpp"
#include "json.hpp"

namespace edgelat::store {

using nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Provenance { Native, AtlasImport };

inline std::string to_string(Provenance p) { return p == Provenance::Native ? "native" : "atlas-import"; }

inline std::optional<Provenance> parse_provenance(std::string_view s) {
  if (s == "native") return Provenance::Native;
  if (s == "atlas-import") return Provenance::AtlasImport;
  return std::nullopt;
}

struct CampaignRecord {
  int schema_version = kSchemaVersion;
  std::string campaign_id;
  Provenance provenance = Provenance::Native;
  campaign::MeasurementSpec spec;
  campaign::MeasurementSet set;

  friend bool operator==(const CampaignRecord&, const CampaignRecord&) = default;
};

namespace detail {

inline std::string hex(const std::uint8_t* p, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[p[i] >> 4];
    out += digits[p[i] & 0xF];
  }
  return out;
}

inline std::vector<std::uint8_t> unhex(std::string_view s) {
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(Errc::ParseFailure, "bad hex digit in '" + std::string(s) + "'");
  };
  if (s.size() % 2) throw Error(Errc::ParseFailure, "odd-length hex string");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < s.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(nibble(s[i]) << 4 | nibble(s[i + 1])));
  return out;
}

inline bool printable(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 0x20 && c <= 0x7E; });
}

inline IpAddress address(const nlohmann::json& j) {
  auto a = IpAddress::try_parse(j.get<std::string>());
  if (!a) throw Error(Errc::ParseFailure, "not an IP address: " + j.dump());
  return *a;
}

inline IpVersion version(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  if (s == "v4") return IpVersion::V4;
  if (s == "v6") return IpVersion::V6;
  throw Error(Errc::ParseFailure, "bad ip_version '" + s + "'");
}

inline ordered_json to_json(const Timestamp& t) { return {{"wall_us", t.wall_us}, {"mono_ns", t.mono_ns}}; }
inline Timestamp timestamp(const nlohmann::json& j) {
  return {j.at("wall_us").get<std::int64_t>(), j.at("mono_ns").get<std::int64_t>()};
}

inline ordered_json to_json(const Endpoint& e) { return {{"address", e.address.to_string()}, {"port", e.port}}; }
inline Endpoint endpoint(const nlohmann::json& j) { return {address(j.at("address")), j.at("port").get<std::uint16_t>()}; }

inline dns::RecordType record_type(const nlohmann::json& j) {
  const auto s = j.get<std::string>();
  auto t = dns::parse_record_type(s);
  if (!t) throw Error(Errc::ParseFailure, "bad record type '" + s + "'");
  return *t;
}

inline ordered_json to_json(const dns::Rdata& rd) {
  return std::visit(
      [](const auto& d) -> ordered_json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IpAddress>) {
          return {{"address", d.to_string()}};
        } else if constexpr (std::is_same_v<T, dns::NameData>) {
          return {{"name", d.name}};
        } else if constexpr (std::is_same_v<T, dns::TxtData>) {
          auto arr = ordered_json::array();
          for (const auto& s : d.strings) {
            if (printable(s)) arr.push_back(s);
            else arr.push_back({{"hex", hex(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())}});
          }
          return {{"txt", arr}};
        } else {
          return {{"hex", hex(d.bytes.data(), d.bytes.size())}};
        }
      },
      rd);
}

inline dns::Rdata rdata(const nlohmann::json& j) {
  if (j.contains("address")) return address(j.at("address"));
  if (j.contains("name")) return dns::NameData{j.at("name").get<std::string>()};
  if (j.contains("txt")) {
    dns::TxtData t;
    for (const auto& s : j.at("txt")) {
      if (s.is_string()) {
        t.strings.push_back(s.get<std::string>());
      } else {
        auto b = unhex(s.at("hex").get<std::string>());
        t.strings.emplace_back(b.begin(), b.end());
      }
    }
    return t;
  }
  if (j.contains("hex")) return dns::OpaqueData{unhex(j.at("hex").get<std::string>())};
  throw Error(Errc::ParseFailure, "unrecognised rdata " + j.dump());
}

inline ordered_json to_json(const dns::ResourceRecord& rr) {
  return {{"name", rr.name}, {"type", dns::to_string(rr.type)}, {"class", rr.rclass}, {"ttl", rr.ttl},
          {"rdata", to_json(rr.rdata)}};
}

inline dns::ResourceRecord resource_record(const nlohmann::json& j) {
  return {j.at("name").get<std::string>(), record_type(j.at("type")), j.at("class").get<std::uint16_t>(),
          j.at("ttl").get<std::uint32_t>(), rdata(j.at("rdata"))};
}

inline ordered_json to_json(const DnsResult& r) {
  const auto& x = r.response;
  auto answers = ordered_json::array();
  for (const auto& rr : x.answers) answers.push_back(to_json(rr));
  return {{"prewarm", r.prewarm},
          {"qname", x.question.qname},
          {"qtype", dns::to_string(x.question.qtype)},
          {"resolver", to_json(x.question.resolver)},
          {"transport", std::string(to_string(x.question.transport))},
          {"timeout_ms", x.question.timeout.count()},
          {"edns", x.question.edns},
          {"rcode", x.rcode},
          {"latency_ms", x.latency_ms},
          {"sent_at", to_json(x.sent_at)},
          {"truncated_retried", x.truncated_retried},
          {"answers", answers}};
}

inline DnsResult dns_result(const nlohmann::json& j) {
  DnsResult r;
  r.prewarm = j.at("prewarm").get<bool>();
  auto& x = r.response;
  x.question.qname = j.at("qname").get<std::string>();
  x.question.qtype = record_type(j.at("qtype"));
  x.question.resolver = endpoint(j.at("resolver"));
  x.question.transport = version(j.at("transport"));
  x.question.timeout = std::chrono::milliseconds{j.at("timeout_ms").get<std::int64_t>()};
  x.question.edns = j.at("edns").get<bool>();
  x.rcode = j.at("rcode").get<int>();
  x.latency_ms = j.at("latency_ms").get<double>();
  x.sent_at = timestamp(j.at("sent_at"));
  x.truncated_retried = j.at("truncated_retried").get<bool>();
  for (const auto& a : j.at("answers")) x.answers.push_back(resource_record(a));
  return r;
}

inline ordered_json to_json(const HandshakeSample& h) {
  return {{"target", to_json(h.target)},
          {"rtt_ms", h.rtt_ms ? ordered_json(*h.rtt_ms) : ordered_json()},
          {"error", h.error ? ordered_json(to_string(*h.error)) : ordered_json()},
          {"started_at", to_json(h.started_at)}};
}

inline HandshakeSample handshake(const nlohmann::json& j) {
  HandshakeSample h;
  h.target = endpoint(j.at("target"));
  if (!j.at("rtt_ms").is_null()) h.rtt_ms = j.at("rtt_ms").get<double>();
  if (!j.at("error").is_null()) {
    const auto s = j.at("error").get<std::string>();
    h.error = parse_handshake_error(s);
    if (!h.error) throw Error(Errc::ParseFailure, "bad handshake error '" + s + "'");
  }
  h.started_at = timestamp(j.at("started_at"));
  return h;
}

inline ordered_json to_json(const EdgeAssignment& e) {
  return {{"website", e.website},
          {"resolver", e.resolver_label},
          {"ip_version", std::string(to_string(e.ip_version))},
          {"address", e.address.to_string()},
          {"source_response", e.source_response}};
}

inline EdgeAssignment edge(const nlohmann::json& j) {
  return {j.at("website").get<std::string>(), j.at("resolver").get<std::string>(), version(j.at("ip_version")),
          address(j.at("address")), j.at("source_response").get<std::size_t>()};
}

}  // namespace detail

inline ordered_json to_json(const campaign::MeasurementSpec& s) {
  auto websites = ordered_json::array();
  for (const auto& w : s.websites) websites.push_back({{"cdn", w.cdn}, {"name", w.name}});
  auto resolvers = ordered_json::array();
  for (const auto& r : s.resolvers)
    resolvers.push_back({{"label", r.label}, {"v4", detail::to_json(r.v4)}, {"v6", detail::to_json(r.v6)}});
  return {{"websites", websites},
          {"resolvers", resolvers},
          {"dns_repeats", s.dns_repeats},
          {"prewarm_gap_ms", s.prewarm_gap.count()},
          {"handshake_repeats", s.handshake_repeats},
          {"handshake_port", s.handshake_port},
          {"dns_timeout_ms", s.dns_timeout.count()},
          {"handshake_timeout_ms", s.handshake_timeout.count()}};
}

inline campaign::MeasurementSpec spec_from_json(const nlohmann::json& j) {
  campaign::MeasurementSpec s;
  for (const auto& w : j.at("websites")) s.websites.push_back({w.at("cdn").get<std::string>(), w.at("name").get<std::string>()});
  for (const auto& r : j.at("resolvers"))
    s.resolvers.push_back({r.at("label").get<std::string>(), detail::endpoint(r.at("v4")), detail::endpoint(r.at("v6"))});
  s.dns_repeats = j.at("dns_repeats").get<int>();
  s.prewarm_gap = std::chrono::milliseconds{j.at("prewarm_gap_ms").get<std::int64_t>()};
  s.handshake_repeats = j.at("handshake_repeats").get<int>();
  s.handshake_port = j.at("handshake_port").get<std::uint16_t>();
  s.dns_timeout = std::chrono::milliseconds{j.at("dns_timeout_ms").get<std::int64_t>()};
  s.handshake_timeout = std::chrono::milliseconds{j.at("handshake_timeout_ms").get<std::int64_t>()};
  return s;
}

inline ordered_json to_json(const campaign::MeasurementSet& s) {
  auto dns_results = ordered_json::array();
  for (const auto& r : s.dns_results) dns_results.push_back(detail::to_json(r));
  auto handshakes = ordered_json::array();
  for (const auto& h : s.handshakes) handshakes.push_back(detail::to_json(h));
  return {{"vantage_id", s.vantage_id},
          {"website", s.website},
          {"cdn", s.cdn},
          {"resolver", s.resolver_label},
          {"ip_version", std::string(to_string(s.ip_version))},
          {"dns_results", dns_results},
          {"handshakes", handshakes},
          {"edge", s.edge ? detail::to_json(*s.edge) : ordered_json()},
          {"created_at", detail::to_json(s.created_at)},
          {"attempt", s.attempt},
          {"failed_twice", s.failed_twice}};
}

inline campaign::MeasurementSet set_from_json(const nlohmann::json& j) {
  campaign::MeasurementSet s;
  s.vantage_id = j.at("vantage_id").get<std::string>();
  s.website = j.at("website").get<std::string>();
  s.cdn = j.at("cdn").get<std::string>();
  s.resolver_label = j.at("resolver").get<std::string>();
  s.ip_version = detail::version(j.at("ip_version"));
  for (const auto& r : j.at("dns_results")) s.dns_results.push_back(detail::dns_result(r));
  for (const auto& h : j.at("handshakes")) s.handshakes.push_back(detail::handshake(h));
  if (!j.at("edge").is_null()) s.edge = detail::edge(j.at("edge"));
  s.created_at = detail::timestamp(j.at("created_at"));
  s.attempt = j.at("attempt").get<int>();
  s.failed_twice = j.at("failed_twice").get<bool>();
  return s;
}

inline ordered_json to_json(const CampaignRecord& r) {
  return {{"schema_version", r.schema_version},
          {"campaign_id", r.campaign_id},
          {"provenance", to_string(r.provenance)},
          {"spec", to_json(r.spec)},
          {"set", to_json(r.set)}};
}

inline std::string encode_line(const CampaignRecord& r) { return to_json(r).dump() + "\n"; }

/// Parses one line. `line_no` is 1-based and appears in every error.
inline CampaignRecord decode_line(std::string_view line, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no) + ": ";
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseFailure, where + "not a JSON object");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
    throw Error(Errc::SchemaMismatch, where + "missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    throw Error(Errc::SchemaMismatch, where + "unsupported schema_version " + std::to_string(version));
  try {
    CampaignRecord r;
    r.schema_version = version;
    r.campaign_id = j.at("campaign_id").get<std::string>();
    const auto p = j.at("provenance").get<std::string>();
    auto prov = parse_provenance(p);
    if (!prov) throw Error(Errc::ParseFailure, "bad provenance '" + p + "'");
    r.provenance = *prov;
    r.spec = spec_from_json(j.at("spec"));
    r.set = set_from_json(j.at("set"));
    return r;
  } catch (const Error& e) {
    throw Error(e.code(), where + std::string(e.what()).substr(to_string(e.code()).size() + 2));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseFailure, where + e.what());
  }
}

/// Writes `records` to `path`, replacing it, or appending when `append`.
inline void write_records(const std::string& path, const std::vector<CampaignRecord>& records, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path + " for writing");
  for (const auto& r : records) out << encode_line(r);
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write to " + path + " failed");
}

struct ReadOutcome {
  std::vector<CampaignRecord> records;
  std::optional<Error> error;  // set when the final line is incomplete
};

/// Reads every record. A final line that does not parse is reported in
/// `error` with the records before it returned; any other bad line throws.
inline ReadOutcome read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  if (in.bad()) throw Error(Errc::IoFailure, "read from " + path + " failed");
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  ReadOutcome out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.records.push_back(decode_line(lines[i], i + 1));
    } catch (const Error& e) {
      if (e.code() == Errc::ParseFailure && i + 1 == lines.size()) {
        out.error = Error(Errc::ParseFailure, "line " + std::to_string(i + 1) + ": truncated record in " + path);
        break;
      }
      throw;
    }
  }
  return out;
}

}  // namespace edgelat::store

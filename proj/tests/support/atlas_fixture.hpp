#pragma once

// Hand-built RIPE Atlas result objects: DNS results with base64 `abuf`
// answers and sslcert results with `rt` / `ttc` timings.

#include "edgelat/dns/wire.hpp"
#include "json.hpp"

namespace edgelat::testing {

inline std::string base64(const std::vector<std::uint8_t>& in) {
  static constexpr char a[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  for (std::size_t i = 0; i < in.size(); i += 3) {
    std::uint32_t n = static_cast<std::uint32_t>(in[i]) << 16;
    if (i + 1 < in.size()) n |= static_cast<std::uint32_t>(in[i + 1]) << 8;
    if (i + 2 < in.size()) n |= in[i + 2];
    out += a[(n >> 18) & 63];
    out += a[(n >> 12) & 63];
    out += i + 1 < in.size() ? a[(n >> 6) & 63] : '=';
    out += i + 2 < in.size() ? a[n & 63] : '=';
  }
  return out;
}

inline std::string abuf(const std::string& qname, dns::RecordType qtype, const std::vector<dns::ResourceRecord>& answers,
                        std::uint16_t id = 4242) {
  dns::MessageBuilder b(id);
  b.question(qname, qtype);
  for (const auto& rr : answers) b.answer(rr);
  return base64(b.build());
}

inline nlohmann::json atlas_dns(int probe, const std::string& resolver, const std::string& qname, dns::RecordType qtype,
                                const std::vector<dns::ResourceRecord>& answers, std::int64_t time_s, double rt) {
  return {{"fw", 5080},
          {"af", resolver.find(':') == std::string::npos ? 4 : 6},
          {"dst_addr", resolver},
          {"from", "198.51.100.23"},
          {"msm_id", 40000001},
          {"prb_id", probe},
          {"proto", "UDP"},
          {"result", {{"ANCOUNT", answers.size()}, {"ARCOUNT", 0}, {"ID", 4242}, {"NSCOUNT", 0}, {"QDCOUNT", 1},
                      {"abuf", abuf(qname, qtype, answers)}, {"rt", rt}, {"size", 64}}},
          {"timestamp", time_s},
          {"type", "dns"}};
}

inline nlohmann::json atlas_tls(int probe, const std::string& dst, std::int64_t time_s, double ttc, double rt) {
  return {{"af", dst.find(':') == std::string::npos ? 4 : 6},
          {"dst_addr", dst},
          {"dst_name", dst},
          {"dst_port", "443"},
          {"from", "198.51.100.23"},
          {"method", "TLS"},
          {"msm_id", 40000002},
          {"prb_id", probe},
          {"rt", rt},
          {"ttc", ttc},
          {"timestamp", time_s},
          {"ver", "1.2"},
          {"type", "sslcert"}};
}

/// One probe, one website, one resolver: prewarm plus three follow-ups and
/// three sslcert downloads to the returned edge.
inline std::pair<nlohmann::json, nlohmann::json> single_set_fixture(int probe = 6012, std::int64_t t0 = 1'650'000'000) {
  const std::string site = "www.example.com.edgekey.net";
  auto dns_doc = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    const std::uint32_t ttl = i == 0 ? 20 : 19 - static_cast<std::uint32_t>(i);
    dns_doc.push_back(atlas_dns(probe, "8.8.8.8", site, dns::RecordType::A,
                                {dns::make_cname(site, 300, "e1.a.akamaiedge.net"),
                                 dns::make_a("e1.a.akamaiedge.net", ttl, "203.0.113.10"),
                                 dns::make_a("e1.a.akamaiedge.net", ttl, "203.0.113.11")},
                                t0 + (i == 0 ? 0 : 15 + i), 20.0 + i));
  }
  auto tls_doc = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) tls_doc.push_back(atlas_tls(probe, "203.0.113.10", t0 + 30 + i, 10.0 + i, 55.0 + i));
  return {dns_doc, tls_doc};
}

}  // namespace edgelat::testing

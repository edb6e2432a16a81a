#pragma once

// Import of RIPE Atlas DNS and sslcert result arrays into measurement sets.
// DNS results are grouped by (probe, query name, resolver address, family)
// and split into sessions where consecutive results are more than
// `session_gap` apart. Each TLS result joins the session of the same probe
// and family whose edge address equals the TLS target and whose timestamps
// are nearest to it.

#include <fstream>
#include <sstream>

#include "edgelat/campaign.hpp"
#include "json.hpp"

namespace edgelat::atlas {

namespace detail {

inline std::vector<std::uint8_t> base64_decode(std::string_view s) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+' || c == '-') return 62;
    if (c == '/' || c == '_') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t i = 0;
  for (; i < s.size() && s[i] != '='; ++i) {
    if (s[i] == '\n' || s[i] == '\r') continue;
    const int v = value(s[i]);
    if (v < 0) throw Error(Errc::ParseFailure, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  for (; i < s.size(); ++i)
    if (s[i] != '=') throw Error(Errc::ParseFailure, "data after base64 padding");
  if (bits >= 6) throw Error(Errc::ParseFailure, "truncated base64");
  return out;
}

inline std::optional<IpAddress> address_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) return std::nullopt;
  return IpAddress::try_parse(j.at(key).get<std::string>());
}

inline std::optional<double> number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

struct ImportOptions {
  std::map<IpAddress, std::string> resolver_labels;  // resolver address -> label; default label is the address
  std::map<std::string, std::string> website_cdns;   // query name -> CDN; default "unknown"
  std::chrono::seconds session_gap{600};
};

struct ImportResult {
  std::vector<campaign::MeasurementSet> sets;
  std::size_t skipped = 0;  // records that failed to parse or decode
  std::size_t orphans = 0;  // TLS results matching no DNS session
  std::vector<std::string> warnings;
};

namespace detail {

struct AtlasDns {
  std::string probe;
  IpAddress resolver;
  IpVersion family = IpVersion::V4;
  std::int64_t time_s = 0;
  double rt_ms = 0;
  dns::DecodedMessage message;
};

struct AtlasTls {
  std::string probe;
  Endpoint target;
  IpVersion family = IpVersion::V4;
  std::int64_t time_s = 0;
  double rtt_ms = 0;
};

inline std::string probe_id(const nlohmann::json& r) {
  if (!r.contains("prb_id")) throw Error(Errc::ParseFailure, "record without prb_id");
  const auto& p = r.at("prb_id");
  return p.is_string() ? p.get<std::string>() : std::to_string(p.get<std::int64_t>());
}

/// Yields one (dst_addr, af, time, result) tuple per answer in either the
/// single-result or the `resultset` layout.
inline void each_dns_entry(const nlohmann::json& r, const std::function<void(const nlohmann::json& holder,
                                                                              const nlohmann::json& result)>& fn) {
  if (r.contains("resultset")) {
    for (const auto& e : r.at("resultset")) fn(e, e.contains("result") ? e.at("result") : nlohmann::json());
  } else {
    fn(r, r.contains("result") ? r.at("result") : nlohmann::json());
  }
}

inline AtlasDns parse_dns_entry(const std::string& probe, const nlohmann::json& outer, const nlohmann::json& holder,
                                const nlohmann::json& result) {
  if (!result.is_object() || !result.contains("abuf")) throw Error(Errc::ParseFailure, "DNS result without abuf");
  AtlasDns d;
  d.probe = probe;
  auto dst = address_field(holder, "dst_addr");
  if (!dst) dst = address_field(outer, "dst_addr");
  if (!dst) throw Error(Errc::ParseFailure, "DNS result without dst_addr");
  d.resolver = *dst;
  d.family = d.resolver.version();
  if (holder.contains("time")) d.time_s = holder.at("time").get<std::int64_t>();
  else if (outer.contains("timestamp")) d.time_s = outer.at("timestamp").get<std::int64_t>();
  else throw Error(Errc::ParseFailure, "DNS result without timestamp");
  d.rt_ms = number_field(result, "rt").value_or(0.0);
  const auto wire = base64_decode(result.at("abuf").get<std::string>());
  d.message = dns::decode_response(wire);
  if (d.message.questions.empty()) throw Error(Errc::ParseFailure, "abuf without a question");
  return d;
}

inline AtlasTls parse_tls(const nlohmann::json& r) {
  AtlasTls t;
  t.probe = probe_id(r);
  auto dst = address_field(r, "dst_addr");
  if (!dst) throw Error(Errc::ParseFailure, "TLS result without dst_addr");
  std::uint16_t port = 443;
  if (r.contains("dst_port")) {
    const auto& p = r.at("dst_port");
    port = static_cast<std::uint16_t>(p.is_string() ? std::stoi(p.get<std::string>()) : p.get<int>());
  }
  t.target = {*dst, port};
  t.family = dst->version();
  if (!r.contains("timestamp")) throw Error(Errc::ParseFailure, "TLS result without timestamp");
  t.time_s = r.at("timestamp").get<std::int64_t>();
  auto rtt = number_field(r, "ttc");
  if (!rtt) rtt = number_field(r, "rt");
  if (!rtt) throw Error(Errc::ParseFailure, "TLS result without ttc or rt");
  t.rtt_ms = *rtt;
  return t;
}

inline std::vector<nlohmann::json> records_of(const nlohmann::json& doc) {
  if (doc.is_array()) return doc.get<std::vector<nlohmann::json>>();
  if (doc.is_object()) return {doc};
  throw Error(Errc::ParseFailure, "Atlas results must be a JSON array");
}

struct Session {
  std::vector<AtlasDns> dns;
  campaign::MeasurementSet set;
};

}  // namespace detail

/// Builds measurement sets from parsed Atlas documents.
inline ImportResult import_atlas(const nlohmann::json& dns_doc, const nlohmann::json& tls_doc,
                                 const ImportOptions& opt = {}) {
  ImportResult out;
  using Key = std::tuple<std::string, std::string, IpAddress, IpVersion>;
  std::map<Key, std::vector<detail::AtlasDns>> groups;

  for (const auto& r : detail::records_of(dns_doc)) {
    std::string probe;
    try {
      probe = detail::probe_id(r);
    } catch (const std::exception& e) {
      ++out.skipped;
      out.warnings.push_back(std::string("skipped DNS record: ") + e.what());
      continue;
    }
    detail::each_dns_entry(r, [&](const nlohmann::json& holder, const nlohmann::json& result) {
      try {
        auto d = detail::parse_dns_entry(probe, r, holder, result);
        Key k{probe, dns::normalize_name(d.message.questions.front().name), d.resolver, d.family};
        groups[k].push_back(std::move(d));
      } catch (const std::exception& e) {
        ++out.skipped;
        out.warnings.push_back("skipped DNS result from probe " + probe + ": " + e.what());
      }
    });
  }

  std::vector<detail::Session> sessions;
  for (auto& [key, results] : groups) {
    const auto& [probe, qname, resolver, family] = key;
    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
    for (std::size_t i = 0; i < results.size();) {
      detail::Session s;
      s.dns.push_back(results[i]);
      std::size_t j = i + 1;
      while (j < results.size() && results[j].time_s - results[j - 1].time_s <= opt.session_gap.count())
        s.dns.push_back(results[j++]);
      i = j;

      auto& set = s.set;
      set.vantage_id = probe;
      set.website = qname;
      auto cdn = opt.website_cdns.find(qname);
      set.cdn = cdn == opt.website_cdns.end() ? "unknown" : cdn->second;
      auto label = opt.resolver_labels.find(resolver);
      set.resolver_label = label == opt.resolver_labels.end() ? resolver.to_string() : label->second;
      set.ip_version = family;
      set.created_at = {s.dns.front().time_s * 1'000'000, 0};
      for (std::size_t n = 0; n < s.dns.size(); ++n) {
        const auto& d = s.dns[n];
        DnsResult r;
        r.response.question =
            dns::DnsQuestion::to(d.message.questions.front().name, d.message.questions.front().type, Endpoint{resolver});
        r.response.rcode = d.message.rcode;
        r.response.answers = d.message.answers;
        r.response.latency_ms = d.rt_ms;
        r.response.sent_at = {d.time_s * 1'000'000, 0};
        r.prewarm = s.dns.size() == 4 && n == 0;
        set.dns_results.push_back(std::move(r));
      }
      try {
        set.edge = select_edge(set.dns_results, family, set.website, set.resolver_label);
      } catch (const Error&) {
      }
      sessions.push_back(std::move(s));
    }
  }

  for (const auto& r : detail::records_of(tls_doc)) {
    detail::AtlasTls t;
    try {
      t = detail::parse_tls(r);
    } catch (const std::exception& e) {
      ++out.skipped;
      out.warnings.push_back(std::string("skipped TLS result: ") + e.what());
      continue;
    }
    detail::Session* best = nullptr;
    std::int64_t best_distance = 0;
    for (auto& s : sessions) {
      if (s.set.vantage_id != t.probe || s.set.ip_version != t.family || !s.set.edge ||
          s.set.edge->address != t.target.address)
        continue;
      const auto lo = s.dns.front().time_s, hi = s.dns.back().time_s;
      const std::int64_t distance = t.time_s < lo ? lo - t.time_s : t.time_s > hi ? t.time_s - hi : 0;
      if (distance > opt.session_gap.count()) continue;
      if (!best || distance < best_distance) {
        best = &s;
        best_distance = distance;
      }
    }
    if (!best) {
      ++out.orphans;
      out.warnings.push_back("orphan TLS result from probe " + t.probe + " to " + t.target.address.to_string());
      continue;
    }
    HandshakeSample h;
    h.target = t.target;
    h.rtt_ms = t.rtt_ms;
    h.started_at = {t.time_s * 1'000'000, 0};
    best->set.handshakes.push_back(h);
  }

  for (auto& s : sessions) {
    std::stable_sort(s.set.handshakes.begin(), s.set.handshakes.end(),
                     [](const auto& a, const auto& b) { return a.started_at.wall_us < b.started_at.wall_us; });
    out.sets.push_back(std::move(s.set));
  }
  return out;
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseFailure, path + " is not valid JSON");
  return j;
}

inline ImportResult import_atlas_files(const std::string& dns_path, const std::string& tls_path,
                                       const ImportOptions& opt = {}) {
  return import_atlas(load_json(dns_path), load_json(tls_path), opt);
}

}  // namespace edgelat::atlas

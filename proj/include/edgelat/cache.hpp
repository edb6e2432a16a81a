#pragma once

// Cache hit/miss inference from response TTLs.

#include <compare>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgelat/dns/client.hpp"
#include "edgelat/stats.hpp"

namespace edgelat::cache {

enum class Verdict { Hit, Miss, Unknown };
enum class TtlQuirk { None, GoogleDecrement };
/// `Paper`: equal TTL is a hit, lower is a miss. `Inverted`: equal TTL is a
/// fresh fetch (miss), lower is a hit.
enum class Convention { Paper, Inverted };
enum class TtlSource { DirectQuery, StaticDefault };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Hit: return "hit";
    case Verdict::Miss: return "miss";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}
inline std::string to_string(TtlQuirk q) { return q == TtlQuirk::GoogleDecrement ? "google-decrement" : "none"; }
inline std::string to_string(TtlSource s) { return s == TtlSource::DirectQuery ? "direct" : "static"; }

inline std::optional<TtlQuirk> parse_quirk(std::string_view s) {
  if (s == "none" || s.empty()) return TtlQuirk::None;
  if (s == "google-decrement") return TtlQuirk::GoogleDecrement;
  return std::nullopt;
}
inline std::optional<Convention> parse_convention(std::string_view s) {
  if (s == "paper" || s == "default") return Convention::Paper;
  if (s == "inverted") return Convention::Inverted;
  return std::nullopt;
}

struct CacheVerdict {
  Verdict verdict = Verdict::Unknown;
  std::uint32_t response_ttl = 0;
  std::uint32_t authoritative_ttl = 0;
  TtlQuirk quirk_applied = TtlQuirk::None;

  friend bool operator==(const CacheVerdict&, const CacheVerdict&) = default;
};

/// Total over all TTL pairs. Unknown exactly when the response TTL exceeds
/// the authoritative one. With GoogleDecrement a response of auth-1 is the
/// fresh-fetch signature.
inline CacheVerdict classify(std::uint32_t response_ttl, std::uint32_t authoritative_ttl, TtlQuirk quirk,
                             Convention convention = Convention::Paper) {
  CacheVerdict v{Verdict::Unknown, response_ttl, authoritative_ttl, quirk};
  const auto resp = static_cast<std::int64_t>(response_ttl);
  const auto auth = static_cast<std::int64_t>(authoritative_ttl);
  if (resp > auth) return v;
  if (convention == Convention::Paper) {
    if (resp == auth) v.verdict = Verdict::Hit;
    else v.verdict = Verdict::Miss;  // covers auth-1 under GoogleDecrement too
  } else {
    const bool fresh = resp == auth || (quirk == TtlQuirk::GoogleDecrement && resp == auth - 1);
    v.verdict = fresh ? Verdict::Miss : Verdict::Hit;
  }
  return v;
}

/// CDN name -> TTL, used when the authoritative servers cannot be asked.
class TtlDefaults {
 public:
  /// Akamai 20 s, Fastly 30 s, Cloudflare-CDN 300 s, Edgecast 3600 s.
  static TtlDefaults builtin() {
    TtlDefaults d;
    d.table_ = {{"akamai", 20}, {"fastly", 30}, {"cloudflare-cdn", 300}, {"edgecast", 3600}};
    return d;
  }

  /// One `cdn_name <whitespace> ttl_seconds` per line; `#` starts a comment.
  static TtlDefaults parse(std::string_view text) {
    TtlDefaults d;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      std::string cdn;
      long long ttl = 0;
      if (!(ls >> cdn)) continue;
      std::string extra;
      if (!(ls >> ttl) || ttl <= 0 || ttl > 0x7FFFFFFF || (ls >> extra))
        throw Error(Errc::ParseFailure, "TTL defaults line " + std::to_string(lineno) + ": expected '<cdn> <ttl>'");
      d.table_[dns::lowercase(cdn)] = static_cast<std::uint32_t>(ttl);
    }
    return d;
  }

  static TtlDefaults load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::IoFailure, "cannot read TTL defaults '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  std::optional<std::uint32_t> find(std::string_view cdn) const {
    auto it = table_.find(dns::lowercase(cdn));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, std::uint32_t>& entries() const { return table_; }

 private:
  std::map<std::string, std::uint32_t> table_;
};

struct AuthoritativeTtl {
  std::string domain;
  std::string cdn;
  std::uint32_t ttl = 0;
  TtlSource source = TtlSource::StaticDefault;
  std::int64_t discovered_at_us = 0;
};

struct AuthorityLookup {
  dns::ResolveFn resolve = dns::network_resolver();
  Endpoint recursive{IpAddress::parse("8.8.8.8"), 53};
  std::uint16_t authority_port = 53;
  std::chrono::milliseconds timeout{5000};
};

namespace detail {

inline std::optional<std::uint32_t> query_authority(const std::string& domain, const AuthorityLookup& opt) {
  auto ask = [&](const std::string& name, dns::RecordType t, const Endpoint& server) {
    return opt.resolve(dns::DnsQuestion::to(name, t, server, opt.timeout));
  };
  const auto family_type = dns::address_type(opt.recursive.address.version());

  // Address records may sit behind CNAMEs; the TTL of interest is the one on
  // the final owner name.
  auto first = ask(domain, family_type, opt.recursive);
  const auto* rec = first.first_address_record();
  const std::string owner = rec ? rec->name : domain;
  // TODO: the zone walk stops at the first NS answer; a referral-following
  // walk from the root would also cover lame delegations.
  std::vector<std::string> servers;
  for (std::string zone = owner; !zone.empty();) {
    auto ns = ask(zone, dns::RecordType::NS, opt.recursive);
    for (const auto& rr : ns.answers)
      if (rr.type == dns::RecordType::NS && dns::names_equal(rr.name, zone))
        servers.push_back(std::get<dns::NameData>(rr.rdata).name);
    if (!servers.empty()) break;
    auto dot = zone.find('.');
    if (dot == std::string::npos) break;
    zone = zone.substr(dot + 1);
  }
  for (const auto& server : servers) {
    try {
      auto addr = ask(server, family_type, opt.recursive);
      const auto* a = addr.first_address();
      if (!a) continue;
      auto direct = ask(owner, family_type, {*a, opt.authority_port});
      for (const auto& rr : direct.answers)
        if (rr.type == family_type && dns::names_equal(rr.name, owner)) return rr.ttl;
    } catch (const Error&) {
      continue;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Asks one of the domain's authoritative servers for its address-record
/// TTL; falls back to the defaults table when that fails.
inline AuthoritativeTtl discover_authoritative_ttl(const std::string& domain, const std::string& cdn,
                                                   const TtlDefaults& defaults, const AuthorityLookup& lookup) {
  AuthoritativeTtl out{dns::normalize_name(domain), cdn, 0, TtlSource::DirectQuery, Timestamp::now().wall_us};
  std::optional<std::uint32_t> ttl;
  try {
    ttl = detail::query_authority(out.domain, lookup);
  } catch (const Error&) {
  }
  if (ttl && *ttl > 0) {
    out.ttl = *ttl;
    return out;
  }
  auto fallback = defaults.find(cdn);
  if (!fallback) throw Error(Errc::NoAuthority, "no authoritative TTL for " + domain + " and no default for " + cdn);
  out.ttl = *fallback;
  out.source = TtlSource::StaticDefault;
  return out;
}

struct HitRateKey {
  std::string cdn;
  std::string resolver;
  IpVersion ip_version = IpVersion::V4;
  friend auto operator<=>(const HitRateKey&, const HitRateKey&) = default;
};

struct ClassifiedPoint {
  HitRateKey key;
  Verdict verdict = Verdict::Unknown;
  double latency_ms = 0;
};

struct HitRateRow {
  std::size_t total = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t unknowns = 0;
  double hit_rate = 0;  // percent
  double miss_rate = 0;
  double unknown_rate = 0;
  std::optional<double> hit_latency;  // median ms; absent for an empty class
  std::optional<double> miss_latency;
  std::optional<double> unknown_latency;
};

/// Per-key verdict shares and per-verdict median latencies.
inline std::map<HitRateKey, HitRateRow> hit_rate_table(const std::vector<ClassifiedPoint>& points) {
  if (points.empty()) throw Error(Errc::EmptyInput, "hit-rate table over no responses");
  struct Acc {
    std::vector<double> lat[3];
  };
  std::map<HitRateKey, Acc> acc;
  for (const auto& p : points) acc[p.key].lat[static_cast<int>(p.verdict)].push_back(p.latency_ms);

  std::map<HitRateKey, HitRateRow> out;
  for (auto& [key, a] : acc) {
    HitRateRow row;
    row.hits = a.lat[0].size();
    row.misses = a.lat[1].size();
    row.unknowns = a.lat[2].size();
    row.total = row.hits + row.misses + row.unknowns;
    const double n = static_cast<double>(row.total);
    row.hit_rate = 100.0 * static_cast<double>(row.hits) / n;
    row.miss_rate = 100.0 * static_cast<double>(row.misses) / n;
    row.unknown_rate = 100.0 * static_cast<double>(row.unknowns) / n;
    auto med = [](std::vector<double>& v) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      return stats::median(std::move(v));
    };
    row.hit_latency = med(a.lat[0]);
    row.miss_latency = med(a.lat[1]);
    row.unknown_latency = med(a.lat[2]);
    out.emplace(key, row);
  }
  return out;
}

}  // namespace edgelat::cache

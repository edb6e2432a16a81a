#pragma once

// Which of the host's configured resolvers belong to its ISP: whoami egress
// discovery plus IP-to-ASN matching through the Team Cymru DNS interface.

#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgelat/dns/client.hpp"

namespace edgelat::identity {

using Asn = std::uint32_t;

struct LocalResolver {
  IpAddress address;
  bool is_private = false;
  IpVersion family = IpVersion::V4;

  static LocalResolver from(const IpAddress& a) { return {a, a.is_private(), a.version()}; }
};

/// `nameserver` lines of a resolv.conf, in order, without duplicates.
inline std::vector<LocalResolver> parse_resolv_conf(std::string_view text) {
  std::vector<LocalResolver> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.resize(c);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value) || key != "nameserver") continue;
    auto addr = IpAddress::try_parse(value);
    if (!addr) continue;
    if (std::none_of(out.begin(), out.end(), [&](const auto& r) { return r.address == *addr; }))
      out.push_back(LocalResolver::from(*addr));
  }
  return out;
}

inline std::vector<LocalResolver> enumerate_local_resolvers(const std::string& path = "/etc/resolv.conf") {
  std::ifstream f(path);
  if (!f) throw Error(Errc::NoConfig, "cannot read resolver configuration '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  auto out = parse_resolv_conf(ss.str());
  if (out.empty()) throw Error(Errc::NoConfig, "no nameserver entries in '" + path + "'");
  return out;
}

struct WhoamiOptions {
  dns::ResolveFn resolve = dns::network_resolver();
  std::string v4_name = "whoami.ipv4.akahelp.net";
  std::string v6_name = "whoami.ipv6.akahelp.net";
  std::optional<std::string> alternate;  // answers with the egress address as a bare TXT string
  std::chrono::milliseconds timeout{5000};
};

/// Egress address in a whoami TXT answer: a record `"ns" "<ip>"`, or a
/// single `ns=<ip>` string.
inline std::optional<IpAddress> parse_whoami_answer(const std::vector<dns::ResourceRecord>& answers,
                                                    bool accept_bare) {
  for (const auto& rr : answers) {
    const auto* txt = std::get_if<dns::TxtData>(&rr.rdata);
    if (!txt) continue;
    const auto& s = txt->strings;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == "ns" && i + 1 < s.size()) {
        if (auto a = IpAddress::try_parse(s[i + 1])) return a;
      } else if (s[i].starts_with("ns=")) {
        if (auto a = IpAddress::try_parse(s[i].substr(3))) return a;
      } else if (accept_bare) {
        if (auto a = IpAddress::try_parse(s[i])) return a;
      }
    }
  }
  return std::nullopt;
}

/// Address the resolver uses toward authoritative servers.
inline IpAddress whoami_egress(const IpAddress& resolver, IpVersion family, const WhoamiOptions& opt = {}) {
  auto ask = [&](const std::string& name, bool bare) -> IpAddress {
    dns::TimedDnsResponse r;
    try {
      r = opt.resolve(dns::DnsQuestion::to(name, dns::RecordType::TXT, {resolver, 53}, opt.timeout));
    } catch (const Error& e) {
      throw Error(Errc::NoAnswer, "whoami via " + resolver.to_string() + ": " + e.what());
    }
    if (r.rcode != 0 || r.answers.empty())
      throw Error(Errc::NoAnswer, "whoami via " + resolver.to_string() + ": rcode " + std::to_string(r.rcode));
    auto a = parse_whoami_answer(r.answers, bare);
    if (!a) throw Error(Errc::ParseFailure, "whoami answer for " + name + " has no \"ns\" address");
    return *a;
  };
  const std::string& primary = family == IpVersion::V4 ? opt.v4_name : opt.v6_name;
  try {
    return ask(primary, false);
  } catch (const Error& first) {
    if (!opt.alternate) throw;
    try {
      return ask(*opt.alternate, true);
    } catch (const Error&) {
      throw first;
    }
  }
}

/// Team Cymru origin query name: reversed octets under origin.asn.cymru.com
/// or reversed nibbles under origin6.asn.cymru.com.
inline std::string cymru_query_name(const IpAddress& ip) {
  std::string out;
  if (ip.is_v4()) {
    for (int i = 3; i >= 0; --i) out += std::to_string(ip[static_cast<std::size_t>(i)]) + ".";
    return out + "origin.asn.cymru.com";
  }
  static constexpr char kHex[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    const auto b = ip[static_cast<std::size_t>(i)];
    out += kHex[b & 0xF];
    out += '.';
    out += kHex[b >> 4];
    out += '.';
  }
  return out + "origin6.asn.cymru.com";
}

struct CymruOrigin {
  Asn asn = 0;
  std::string prefix;  // announced prefix, e.g. "208.67.222.0/24"; may be empty
};

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

/// `ASN[ ASN...] | prefix | country | registry | date`; the first ASN wins.
inline CymruOrigin parse_cymru_answer(std::string_view txt) {
  const auto bar = txt.find('|');
  std::istringstream asns{trim(txt.substr(0, bar))};
  std::string first;
  if (!(asns >> first)) throw Error(Errc::ParseFailure, "empty ASN field in '" + std::string(txt) + "'");
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(first, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != first.size() || v > 0xFFFFFFFFul)
    throw Error(Errc::ParseFailure, "bad ASN '" + first + "' in Cymru answer");
  CymruOrigin o{static_cast<Asn>(v), {}};
  if (bar != std::string_view::npos) {
    auto rest = txt.substr(bar + 1);
    o.prefix = trim(rest.substr(0, rest.find('|')));
  }
  return o;
}

/// Prefix-keyed ASN cache with a fixed entry lifetime. Safe for concurrent
/// use.
class AsnCache {
 public:
  using Clock = std::chrono::steady_clock;
  explicit AsnCache(std::chrono::seconds ttl = std::chrono::hours(24)) : ttl_(ttl) {}

  std::optional<Asn> find(const IpAddress& ip, Clock::time_point now = Clock::now()) const {
    std::lock_guard lock(mu_);
    std::optional<Asn> best;
    int best_len = -1;
    for (const auto& e : entries_) {
      if (now >= e.expires || e.network.version() != ip.version() || e.length <= best_len) continue;
      if (ip.in_prefix(e.network, e.length)) {
        best = e.asn;
        best_len = e.length;
      }
    }
    return best;
  }

  /// Caches `asn` for `prefix` ("a.b.c.d/len"); without a usable prefix the
  /// single address is cached.
  void insert(const IpAddress& ip, const std::string& prefix, Asn asn, Clock::time_point now = Clock::now()) {
    IpAddress net = ip;
    int len = ip.is_v4() ? 32 : 128;
    if (auto slash = prefix.find('/'); slash != std::string::npos) {
      auto p = IpAddress::try_parse(prefix.substr(0, slash));
      int l = -1;
      try {
        l = std::stoi(prefix.substr(slash + 1));
      } catch (const std::exception&) {
      }
      if (p && p->version() == ip.version() && l >= 0 && l <= len && ip.in_prefix(*p, l)) {
        net = *p;
        len = l;
      }
    }
    std::lock_guard lock(mu_);
    std::erase_if(entries_, [&](const auto& e) { return now >= e.expires || (e.network == net && e.length == len); });
    entries_.push_back({net, len, asn, now + ttl_});
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  struct Entry {
    IpAddress network;
    int length;
    Asn asn;
    Clock::time_point expires;
  };
  std::chrono::seconds ttl_;
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

struct AsnLookupOptions {
  dns::ResolveFn resolve = dns::network_resolver();
  Endpoint resolver{IpAddress::parse("8.8.8.8"), 53};
  std::chrono::milliseconds timeout{5000};
  AsnCache* cache = nullptr;
};

inline Asn asn_lookup(const IpAddress& ip, const AsnLookupOptions& opt = {}) {
  if (opt.cache)
    if (auto hit = opt.cache->find(ip)) return *hit;
  auto r = opt.resolve(dns::DnsQuestion::to(cymru_query_name(ip), dns::RecordType::TXT, opt.resolver, opt.timeout));
  if (r.rcode == 3) throw Error(Errc::NoMapping, "no origin ASN for " + ip.to_string());
  for (const auto& rr : r.answers) {
    const auto* txt = std::get_if<dns::TxtData>(&rr.rdata);
    if (!txt) continue;
    std::string joined;
    for (const auto& s : txt->strings) joined += s;
    auto origin = parse_cymru_answer(joined);
    if (opt.cache) opt.cache->insert(ip, origin.prefix, origin.asn);
    return origin.asn;
  }
  if (r.rcode != 0) throw Error(Errc::NoAnswer, "Cymru lookup for " + ip.to_string() + ": rcode " + std::to_string(r.rcode));
  throw Error(Errc::NoMapping, "no origin ASN for " + ip.to_string());
}

enum class IspVerdict { IspProvided, External, Indeterminate };

inline std::string to_string(IspVerdict v) {
  switch (v) {
    case IspVerdict::IspProvided: return "isp-provided";
    case IspVerdict::External: return "external";
    case IspVerdict::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

struct ResolverClassification {
  LocalResolver resolver;
  std::optional<Asn> vantage_asn;
  std::optional<Asn> resolver_asn;
  std::optional<IpAddress> egress_address;
  std::optional<Asn> egress_asn;
  IspVerdict verdict = IspVerdict::Indeterminate;
  std::string note;  // reason for Indeterminate
};

/// Same-AS rule. Missing either ASN is Indeterminate.
inline IspVerdict same_as_verdict(std::optional<Asn> subject, std::optional<Asn> vantage) {
  if (!subject || !vantage) return IspVerdict::Indeterminate;
  return *subject == *vantage ? IspVerdict::IspProvided : IspVerdict::External;
}

struct IdentityServices {
  std::function<Asn(const IpAddress&)> asn;
  std::function<IpAddress(const IpAddress& resolver, IpVersion family)> egress;

  static IdentityServices network(AsnLookupOptions asn_opt, WhoamiOptions who_opt) {
    return {[asn_opt](const IpAddress& ip) { return asn_lookup(ip, asn_opt); },
            [who_opt](const IpAddress& r, IpVersion f) { return whoami_egress(r, f, who_opt); }};
  }
};

/// Public resolvers are compared by their own ASN, private ones by the ASN
/// of their egress address. Lookup failures fold into Indeterminate.
inline ResolverClassification classify_resolver(const LocalResolver& resolver, const IpAddress& vantage_ip,
                                                 const IdentityServices& svc) {
  ResolverClassification c{resolver, {}, {}, {}, {}, IspVerdict::Indeterminate, {}};
  try {
    c.vantage_asn = svc.asn(vantage_ip);
  } catch (const std::exception& e) {
    c.note = std::string("vantage ASN: ") + e.what();
    return c;
  }
  try {
    if (resolver.is_private) {
      c.egress_address = svc.egress(resolver.address, resolver.family);
      c.egress_asn = svc.asn(*c.egress_address);
      c.verdict = same_as_verdict(c.egress_asn, c.vantage_asn);
    } else {
      c.resolver_asn = svc.asn(resolver.address);
      c.verdict = same_as_verdict(c.resolver_asn, c.vantage_asn);
    }
  } catch (const std::exception& e) {
    c.note = e.what();
    c.verdict = IspVerdict::Indeterminate;
  }
  return c;
}

/// At least one ISP-provided resolver in each address family.
inline bool is_isp_usable(const std::vector<ResolverClassification>& cs) {
  bool v4 = false, v6 = false;
  for (const auto& c : cs) {
    if (c.verdict != IspVerdict::IspProvided) continue;
    (c.resolver.family == IpVersion::V4 ? v4 : v6) = true;
  }
  return v4 && v6;
}

struct PublicAddressOptions {
  dns::ResolveFn resolve = dns::network_resolver();
  std::string name = "myip.opendns.com";
  Endpoint v4_resolver{IpAddress::parse("208.67.222.222"), 53};
  Endpoint v6_resolver{IpAddress::parse("2620:119:35::35"), 53};
  std::chrono::milliseconds timeout{5000};
};

/// The host's public address as seen by OpenDNS's myip service.
inline IpAddress discover_public_address(IpVersion family, const PublicAddressOptions& opt = {}) {
  const auto& server = family == IpVersion::V4 ? opt.v4_resolver : opt.v6_resolver;
  auto r = opt.resolve(dns::DnsQuestion::to(opt.name, dns::address_type(family), server, opt.timeout));
  if (const auto* a = r.first_address()) return *a;
  throw Error(Errc::NoAnswer, "no " + std::string(to_string(family)) + " address from " + opt.name);
}

}  // namespace edgelat::identity

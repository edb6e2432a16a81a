#pragma once

// Tool configuration: a JSON object whose keys are all optional.
//
//   resolvers        [{label, v4, v6}]        public resolver roster
//   include_isp      bool                     also measure the local ISP resolver
//   websites         path                     discovery output (cdn -> sites)
//   catalog          path                     CDN suffix catalog
//   ttl_defaults     path                     authoritative TTL table
//   domain_list      path                     ranked domain list for discovery
//   geo              path                     vantage -> continent map
//   quotas           {cdn: n}                 websites to select per CDN
//   thresholds       {cdn: n}                 complete websites required per CDN
//   quirks           {resolver: quirk}        TTL quirks, e.g. google-decrement
//   convention       paper | inverted         cache verdict convention
//   timeouts         {dns_ms, handshake_ms, page_ms}
//   measurement      {dns_repeats, prewarm_gap_ms, handshake_repeats, handshake_port}
//   dns_port         integer                  resolver port override
//   output_dir       path                     campaign directory root
//   vantage_id       string
//   fanout           integer
//   seed             integer
//   interval_s       integer                  recurrence interval
//   iterations       integer                  0 runs until interrupted

#include <filesystem>
#include <fstream>

#include "edgelat/analytics.hpp"
#include "edgelat/campaign.hpp"
#include "json.hpp"

namespace edgelat::config {

struct ToolConfig {
  std::vector<campaign::ResolverSpec> resolvers;
  bool include_isp = true;
  std::string websites_path;
  std::string catalog_path;
  std::string ttl_defaults_path;
  std::string domain_list_path;
  std::string geo_path;
  std::map<std::string, std::size_t> quotas;
  std::map<std::string, std::size_t> thresholds;
  std::map<std::string, cache::TtlQuirk> quirks;
  cache::Convention convention = cache::Convention::Paper;
  std::chrono::milliseconds dns_timeout{5000};
  std::chrono::milliseconds handshake_timeout{5000};
  std::chrono::milliseconds page_timeout{10000};
  int dns_repeats = 3;
  std::chrono::milliseconds prewarm_gap{15000};
  int handshake_repeats = 3;
  std::uint16_t handshake_port = 443;
  std::uint16_t dns_port = 53;
  std::string output_dir = "campaigns";
  std::string vantage_id = "local";
  std::size_t fanout = 8;
  std::uint64_t seed = 1;
  std::chrono::seconds interval{86400};
  std::size_t iterations = 0;

  void validate() const {
    for (const auto& r : resolvers)
      if (!r.v4.address.is_v4() || r.v6.address.is_v4())
        throw Error(Errc::InvalidArgument, "resolver " + r.label + " needs one IPv4 and one IPv6 address");
    if (fanout == 0) throw Error(Errc::InvalidArgument, "fanout must be positive");
  }

  /// The measurement protocol parameters, with no websites yet.
  campaign::MeasurementSpec spec() const {
    campaign::MeasurementSpec s;
    s.resolvers = resolvers;
    s.dns_repeats = dns_repeats;
    s.prewarm_gap = prewarm_gap;
    s.handshake_repeats = handshake_repeats;
    s.handshake_port = handshake_port;
    s.dns_timeout = dns_timeout;
    s.handshake_timeout = handshake_timeout;
    return s;
  }

  analytics::CacheRules cache_rules() const {
    analytics::CacheRules r;
    if (!ttl_defaults_path.empty()) r.ttl_by_cdn = cache::TtlDefaults::load(ttl_defaults_path);
    r.quirks = quirks;
    r.convention = convention;
    return r;
  }
};

/// Google, Cloudflare, OpenDNS and Quad9 on both families.
inline std::vector<campaign::ResolverSpec> default_roster() {
  auto r = [](std::string label, std::string_view v4, std::string_view v6) {
    return campaign::ResolverSpec{std::move(label), Endpoint{IpAddress::parse(v4)}, Endpoint{IpAddress::parse(v6)}};
  };
  return {r("Google", "8.8.8.8", "2001:4860:4860::8888"), r("Cloudflare", "1.1.1.1", "2606:4700:4700::1111"),
          r("OpenDNS", "208.67.222.222", "2620:119:35::35"), r("Quad9", "9.9.9.9", "2620:fe::fe")};
}

inline ToolConfig defaults() {
  ToolConfig c;
  c.resolvers = default_roster();
  c.quotas = {{"akamai", 50}, {"cloudflare-cdn", 5}, {"edgecast", 5}, {"fastly", 5}};
  c.thresholds = {{"akamai", 30}, {"cloudflare-cdn", 3}, {"edgecast", 3}, {"fastly", 3}};
  c.quirks = {{"Google", cache::TtlQuirk::GoogleDecrement}};
  return c;
}

namespace detail {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_ms(const nlohmann::json& j, const char* key, std::chrono::milliseconds& out) {
  if (j.contains(key)) out = std::chrono::milliseconds{j.at(key).get<std::int64_t>()};
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace detail

/// Reads a configuration object over the defaults. Relative paths are taken
/// relative to `base_dir`.
inline ToolConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw Error(Errc::ParseFailure, "configuration must be a JSON object");
  ToolConfig c = defaults();
  try {
    if (j.contains("resolvers")) {
      c.resolvers.clear();
      for (const auto& r : j.at("resolvers")) {
        auto v4 = IpAddress::try_parse(r.at("v4").get<std::string>());
        auto v6 = IpAddress::try_parse(r.at("v6").get<std::string>());
        const auto label = r.at("label").get<std::string>();
        if (!v4 || !v6) throw Error(Errc::InvalidArgument, "resolver " + label + " needs both family addresses");
        c.resolvers.push_back({label, Endpoint{*v4}, Endpoint{*v6}});
      }
    }
    detail::read(j, "include_isp", c.include_isp);
    detail::read(j, "websites", c.websites_path);
    detail::read(j, "catalog", c.catalog_path);
    detail::read(j, "ttl_defaults", c.ttl_defaults_path);
    detail::read(j, "domain_list", c.domain_list_path);
    detail::read(j, "geo", c.geo_path);
    if (j.contains("quotas")) c.quotas = j.at("quotas").get<std::map<std::string, std::size_t>>();
    if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::map<std::string, std::size_t>>();
    if (j.contains("quirks")) {
      c.quirks.clear();
      for (const auto& [label, q] : j.at("quirks").items()) {
        auto quirk = cache::parse_quirk(q.get<std::string>());
        if (!quirk) throw Error(Errc::InvalidArgument, "unknown TTL quirk '" + q.get<std::string>() + "'");
        c.quirks[label] = *quirk;
      }
    }
    if (j.contains("convention")) {
      auto conv = cache::parse_convention(j.at("convention").get<std::string>());
      if (!conv) throw Error(Errc::InvalidArgument, "unknown convention " + j.at("convention").dump());
      c.convention = *conv;
    }
    if (j.contains("timeouts")) {
      const auto& t = j.at("timeouts");
      detail::read_ms(t, "dns_ms", c.dns_timeout);
      detail::read_ms(t, "handshake_ms", c.handshake_timeout);
      detail::read_ms(t, "page_ms", c.page_timeout);
    }
    if (j.contains("measurement")) {
      const auto& m = j.at("measurement");
      detail::read(m, "dns_repeats", c.dns_repeats);
      detail::read_ms(m, "prewarm_gap_ms", c.prewarm_gap);
      detail::read(m, "handshake_repeats", c.handshake_repeats);
      detail::read(m, "handshake_port", c.handshake_port);
    }
    detail::read(j, "dns_port", c.dns_port);
    detail::read(j, "output_dir", c.output_dir);
    detail::read(j, "vantage_id", c.vantage_id);
    detail::read(j, "fanout", c.fanout);
    detail::read(j, "seed", c.seed);
    if (j.contains("interval_s")) c.interval = std::chrono::seconds{j.at("interval_s").get<std::int64_t>()};
    detail::read(j, "iterations", c.iterations);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("configuration: ") + e.what());
  }
  for (auto* p : {&c.websites_path, &c.catalog_path, &c.ttl_defaults_path, &c.domain_list_path, &c.geo_path,
                  &c.output_dir})
    *p = detail::resolve_path(*p, base_dir);
  for (auto& r : c.resolvers) r.v4.port = r.v6.port = c.dns_port;
  c.validate();
  return c;
}

inline ToolConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::NoConfig, "cannot open configuration " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseFailure, path + " is not valid JSON");
  return parse(j, std::filesystem::path(path).parent_path());
}

}  // namespace edgelat::config

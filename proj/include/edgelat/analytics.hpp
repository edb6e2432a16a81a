#pragma once

// From raw measurement sets to per-vantage latency points, and from points
// to the aggregate views: CDFs, regional medians, IPv6 penalty, hit rates,
// address diversity and subset validation.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "edgelat/cache.hpp"
#include "edgelat/campaign.hpp"
#include "edgelat/stats.hpp"

namespace edgelat::analytics {

using campaign::MeasurementSet;

enum class Metric { Dns, Mapping };

inline std::string to_string(Metric m) { return m == Metric::Dns ? "dns" : "mapping"; }
inline std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "dns") return Metric::Dns;
  if (s == "mapping") return Metric::Mapping;
  return std::nullopt;
}

// Continents in the order regional tables list them.
inline const std::vector<std::string>& continents() {
  static const std::vector<std::string> k{"Africa", "Asia", "Europe", "Oceania", "N. America", "S. America"};
  return k;
}
inline constexpr const char* kUnassigned = "unassigned";
inline constexpr const char* kGlobal = "Global";

/// Canonical continent name for common spellings; anything else is
/// unassigned.
inline std::string canonical_region(std::string_view s) {
  std::string k;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) k += dns::ascii_lower(c);
  if (k == "africa" || k == "af") return "Africa";
  if (k == "asia" || k == "as") return "Asia";
  if (k == "europe" || k == "eu") return "Europe";
  if (k == "oceania" || k == "oc") return "Oceania";
  if (k == "namerica" || k == "northamerica" || k == "na") return "N. America";
  if (k == "samerica" || k == "southamerica" || k == "sa") return "S. America";
  if (k == "global") return kGlobal;
  return kUnassigned;
}

inline int region_rank(const std::string& r) {
  if (r == kGlobal) return -1;
  const auto& c = continents();
  auto it = std::find(c.begin(), c.end(), r);
  return it == c.end() ? static_cast<int>(c.size()) : static_cast<int>(it - c.begin());
}

using GeoMap = std::map<std::string, std::string>;  // vantage -> continent

/// `vantage_id <whitespace> continent` per line; `#` comments.
inline GeoMap parse_geo(std::string_view text) {
  GeoMap g;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string vantage, rest, word;
    if (!(ls >> vantage)) continue;
    while (ls >> word) rest += (rest.empty() ? "" : " ") + word;
    g[vantage] = canonical_region(rest);
  }
  return g;
}

struct LatencyPoint {
  std::string vantage_id;
  std::string cdn;
  std::string resolver_label;
  IpVersion ip_version = IpVersion::V4;
  Metric metric = Metric::Dns;
  double value = 0;
  std::optional<std::string> region;
};

/// The three most recent DNS results by send timestamp, newest first.
inline std::vector<const DnsResult*> latest_three(const MeasurementSet& set) {
  if (set.dns_results.size() < 3)
    throw Error(Errc::TooFewResults, "set for " + set.website + " via " + set.resolver_label + " has " +
                                         std::to_string(set.dns_results.size()) + " DNS results");
  std::vector<const DnsResult*> r;
  for (const auto& d : set.dns_results) r.push_back(&d);
  std::stable_sort(r.begin(), r.end(),
                   [](const DnsResult* a, const DnsResult* b) { return earlier(b->response.sent_at, a->response.sent_at); });
  r.resize(3);
  return r;
}

/// Median latency of the three latest-timestamped DNS results.
inline double per_website_median(const MeasurementSet& set) {
  std::vector<double> v;
  for (const auto* d : latest_three(set)) v.push_back(d->response.latency_ms);
  return stats::median(std::move(v));
}

inline double per_cdn_median(std::vector<double> website_medians) {
  if (website_medians.empty()) throw Error(Errc::EmptyInput, "no website medians");
  return stats::median(std::move(website_medians));
}

struct PointKey {
  std::string vantage_id;
  std::string cdn;
  std::string resolver_label;
  IpVersion ip_version;
  friend auto operator<=>(const PointKey&, const PointKey&) = default;
};

/// One DNS and one mapping point per (vantage, cdn, resolver, family):
/// the median over websites of each website's value. Sets that cannot
/// yield a value are skipped.
inline std::vector<LatencyPoint> aggregate(const std::vector<MeasurementSet>& sets, const GeoMap& geo = {}) {
  std::map<PointKey, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (const auto& s : sets) {
    auto& [dns_v, map_v] = acc[{s.vantage_id, s.cdn, s.resolver_label, s.ip_version}];
    if (s.dns_results.size() >= 3) dns_v.push_back(per_website_median(s));
    if (std::any_of(s.handshakes.begin(), s.handshakes.end(), [](const auto& h) { return h.success(); }))
      map_v.push_back(mapping_latency(s.handshakes));
  }
  std::vector<LatencyPoint> out;
  for (auto& [k, v] : acc) {
    std::optional<std::string> region;
    if (auto it = geo.find(k.vantage_id); it != geo.end()) region = it->second;
    if (!v.first.empty())
      out.push_back({k.vantage_id, k.cdn, k.resolver_label, k.ip_version, Metric::Dns, per_cdn_median(v.first), region});
    if (!v.second.empty())
      out.push_back(
          {k.vantage_id, k.cdn, k.resolver_label, k.ip_version, Metric::Mapping, per_cdn_median(v.second), region});
  }
  return out;
}

inline constexpr const char* kAllCdns = "all";

/// Adds, per (vantage, resolver, family, metric), an "all" point: the mean
/// of that vantage's per-CDN points, so every CDN weighs the same.
inline std::vector<LatencyPoint> with_all_cdns(std::vector<LatencyPoint> points) {
  std::map<std::tuple<std::string, std::string, IpVersion, Metric>, std::vector<const LatencyPoint*>> groups;
  for (const auto& p : points)
    if (p.cdn != kAllCdns) groups[{p.vantage_id, p.resolver_label, p.ip_version, p.metric}].push_back(&p);
  std::vector<LatencyPoint> extra;
  for (const auto& [k, ps] : groups) {
    std::vector<double> v;
    for (const auto* p : ps) v.push_back(p->value);
    auto all = *ps.front();
    all.cdn = kAllCdns;
    all.value = stats::mean(v);
    extra.push_back(std::move(all));
  }
  points.insert(points.end(), extra.begin(), extra.end());
  return points;
}

struct PointFilter {
  std::optional<std::string> cdn;
  std::optional<std::string> resolver;
  std::optional<IpVersion> ip_version;
  std::optional<std::string> region;
  std::optional<Metric> metric;

  bool matches(const LatencyPoint& p) const {
    if (cdn && !names_match(*cdn, p.cdn)) return false;
    if (resolver && !names_match(*resolver, p.resolver_label)) return false;
    if (ip_version && *ip_version != p.ip_version) return false;
    if (metric && *metric != p.metric) return false;
    if (region && canonical_region(*region) != p.region.value_or(kUnassigned)) return false;
    return true;
  }

  static bool names_match(std::string_view a, std::string_view b) { return dns::lowercase(a) == dns::lowercase(b); }
};

inline std::vector<LatencyPoint> filter(const std::vector<LatencyPoint>& points, const PointFilter& f) {
  std::vector<LatencyPoint> out;
  std::copy_if(points.begin(), points.end(), std::back_inserter(out), [&](const auto& p) { return f.matches(p); });
  return out;
}

inline std::string series_key(const LatencyPoint& p) {
  return p.cdn + "/" + p.resolver_label + "/" + std::string(to_string(p.ip_version)) + "/" + to_string(p.metric);
}

/// Empirical CDF per group.
inline std::map<std::string, std::vector<stats::CdfPoint>> distribution(
    const std::vector<LatencyPoint>& points,
    const std::function<std::string(const LatencyPoint&)>& key = series_key) {
  if (points.empty()) throw Error(Errc::EmptyInput, "distribution over no points");
  std::map<std::string, std::vector<double>> groups;
  for (const auto& p : points) groups[key(p)].push_back(p.value);
  std::map<std::string, std::vector<stats::CdfPoint>> out;
  for (auto& [k, v] : groups) out.emplace(k, stats::ecdf(std::move(v)));
  return out;
}

struct CellKey {
  std::string region;
  std::string cdn;
  std::string resolver;
  IpVersion ip_version;
  Metric metric;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct Cell {
  double median = 0;
  double mean = 0;
  std::size_t points = 0;
};

struct RegionalTable {
  std::map<CellKey, Cell> cells;                  // includes the "Global" region
  std::map<std::string, std::size_t> vantages;    // per region, plus "Global"
};

/// Median over vantages per (region, cdn, resolver, family, metric), with
/// a "Global" row over everyone. Vantages missing from `geo` go to
/// "unassigned".
inline RegionalTable regional_breakdown(const std::vector<LatencyPoint>& points, const GeoMap& geo) {
  std::map<CellKey, std::vector<double>> acc;
  std::map<std::string, std::set<std::string>> who;
  for (const auto& p : points) {
    auto it = geo.find(p.vantage_id);
    const std::string region = it != geo.end() ? it->second : p.region.value_or(kUnassigned);
    for (const auto& r : std::set<std::string>{region, kGlobal}) {
      acc[{r, p.cdn, p.resolver_label, p.ip_version, p.metric}].push_back(p.value);
      who[r].insert(p.vantage_id);
    }
  }
  RegionalTable t;
  for (auto& [k, v] : acc) t.cells[k] = {stats::median(v), stats::mean(v), v.size()};
  for (const auto& [r, s] : who) t.vantages[r] = s.size();
  return t;
}

/// Global medians only (one row per cdn, resolver, family, metric).
inline std::map<CellKey, Cell> global_medians(const std::vector<LatencyPoint>& points) {
  auto t = regional_breakdown(points, {});
  std::erase_if(t.cells, [](const auto& kv) { return kv.first.region != kGlobal; });
  return t.cells;
}

inline constexpr double kHappyEyeballsMs = 250.0;

struct PenaltyRow {
  std::string region;
  std::string cdn;
  std::string resolver;
  Metric metric;
  double v4 = 0;
  double v6 = 0;
  double delta = 0;  // v6 - v4
  bool exceeds = false;
};

struct PenaltyReport {
  std::vector<PenaltyRow> rows;
  std::vector<std::string> warnings;  // unpaired keys
};

/// v6 minus v4 median per (region, cdn, resolver, metric); flags deltas at
/// or above `threshold_ms`.
inline PenaltyReport ipv6_penalty(const RegionalTable& table, double threshold_ms = kHappyEyeballsMs) {
  std::map<std::tuple<std::string, std::string, std::string, Metric>, std::pair<std::optional<double>, std::optional<double>>> pairs;
  for (const auto& [k, c] : table.cells) {
    auto& slot = pairs[{k.region, k.cdn, k.resolver, k.metric}];
    (k.ip_version == IpVersion::V4 ? slot.first : slot.second) = c.median;
  }
  PenaltyReport rep;
  for (const auto& [k, p] : pairs) {
    const auto& [region, cdn, resolver, metric] = k;
    if (!p.first || !p.second) {
      rep.warnings.push_back(std::string(to_string(Errc::UnpairedKey)) + ": " + region + "/" + cdn + "/" + resolver + "/" +
                             to_string(metric) + " has only " + (p.first ? "IPv4" : "IPv6"));
      continue;
    }
    const double delta = *p.second - *p.first;
    rep.rows.push_back({region, cdn, resolver, metric, *p.first, *p.second, delta, delta >= threshold_ms});
  }
  return rep;
}

inline PenaltyReport ipv6_penalty(const std::vector<LatencyPoint>& points, const GeoMap& geo,
                                  double threshold_ms = kHappyEyeballsMs) {
  return ipv6_penalty(regional_breakdown(points, geo), threshold_ms);
}

inline constexpr std::size_t kAnycastMaxAddresses = 4;

struct DiversityKey {
  std::string website;
  std::string resolver;
  IpVersion ip_version;
  friend auto operator<=>(const DiversityKey&, const DiversityKey&) = default;
};

struct DiversityReport {
  std::size_t unique = 0;
  std::map<std::string, std::size_t> frequency;   // address -> vantages
  std::map<std::string, std::string> per_vantage;  // vantage -> address
  std::map<std::string, double> purity;            // region -> modal-address share
  std::string pattern;
};

struct AssignmentObservation {
  std::string vantage_id;
  EdgeAssignment edge;
};

/// Per (website, resolver, family): distinct edge addresses, how many
/// vantages got each, and per region the share of the region's most common
/// address. A vantage seen several times counts with its last assignment.
inline std::map<DiversityKey, DiversityReport> address_diversity(const std::vector<AssignmentObservation>& obs,
                                                                 const GeoMap& geo,
                                                                 std::size_t anycast_max = kAnycastMaxAddresses) {
  std::map<DiversityKey, DiversityReport> out;
  for (const auto& o : obs)
    out[{o.edge.website, o.edge.resolver_label, o.edge.ip_version}].per_vantage[o.vantage_id] =
        o.edge.address.to_string();
  for (auto& [key, rep] : out) {
    std::map<std::string, std::map<std::string, std::size_t>> by_region;
    for (const auto& [vantage, addr] : rep.per_vantage) {
      ++rep.frequency[addr];
      auto it = geo.find(vantage);
      ++by_region[it == geo.end() ? kUnassigned : it->second][addr];
    }
    rep.unique = rep.frequency.size();
    for (const auto& [region, counts] : by_region) {
      std::size_t total = 0, modal = 0;
      for (const auto& [_, n] : counts) {
        total += n;
        modal = std::max(modal, n);
      }
      rep.purity[region] = static_cast<double>(modal) / static_cast<double>(total);
    }
    rep.pattern = rep.unique <= anycast_max
                      ? "anycast-like: " + std::to_string(rep.unique) + " address(es) serve every vantage"
                      : "non-anycast: " + std::to_string(rep.unique) + " distinct addresses";
  }
  return out;
}

inline std::vector<AssignmentObservation> observations(const std::vector<MeasurementSet>& sets) {
  std::vector<AssignmentObservation> out;
  for (const auto& s : sets)
    if (s.edge) out.push_back({s.vantage_id, *s.edge});
  return out;
}

struct SubsetComparison {
  std::vector<double> full;
  std::vector<double> random_subset;
  std::vector<double> common_subset;
  stats::KsResult ks_random;
  stats::KsResult ks_common;
};

/// Compares per-vantage points computed from all of a CDN's websites with
/// points from `subset_size` websites, chosen at random per vantage or as
/// the websites most vantages have. `sets` should already be filtered to
/// complete pairs.
inline SubsetComparison subset_validation(const std::vector<MeasurementSet>& sets, const std::string& cdn,
                                          std::size_t subset_size, Metric metric, std::uint64_t seed = 1) {
  std::map<std::string, std::set<std::string>> sites_of;  // vantage -> websites
  std::map<std::string, std::size_t> popularity;
  std::vector<const MeasurementSet*> mine;
  for (const auto& s : sets)
    if (s.cdn == cdn) {
      mine.push_back(&s);
      if (sites_of[s.vantage_id].insert(s.website).second) ++popularity[s.website];
    }
  std::vector<std::string> by_pop;
  for (const auto& [w, _] : popularity) by_pop.push_back(w);
  std::stable_sort(by_pop.begin(), by_pop.end(), [&](const auto& a, const auto& b) { return popularity[a] > popularity[b]; });

  std::mt19937_64 rng(seed);
  std::map<std::string, std::set<std::string>> random_pick, common_pick;
  for (const auto& [v, ws] : sites_of) {
    std::vector<std::string> list(ws.begin(), ws.end());
    std::shuffle(list.begin(), list.end(), rng);
    list.resize(std::min(subset_size, list.size()));
    random_pick[v] = {list.begin(), list.end()};
    for (const auto& w : by_pop)
      if (ws.count(w) && common_pick[v].size() < subset_size) common_pick[v].insert(w);
  }
  auto points_for = [&](const std::map<std::string, std::set<std::string>>* pick) {
    std::vector<MeasurementSet> chosen;
    for (const auto* s : mine)
      if (!pick || pick->at(s->vantage_id).count(s->website)) chosen.push_back(*s);
    std::vector<double> v;
    for (const auto& p : aggregate(chosen))
      if (p.metric == metric) v.push_back(p.value);
    return v;
  };
  SubsetComparison c;
  c.full = points_for(nullptr);
  c.random_subset = points_for(&random_pick);
  c.common_subset = points_for(&common_pick);
  if (c.full.empty()) throw Error(Errc::EmptyInput, "no " + to_string(metric) + " points for " + cdn);
  c.ks_random = stats::ks_two_sample(c.full, c.random_subset);
  c.ks_common = stats::ks_two_sample(c.full, c.common_subset);
  return c;
}

struct CacheRules {
  std::map<std::string, std::uint32_t> ttl_by_website;  // from discovery; wins over the CDN table
  cache::TtlDefaults ttl_by_cdn = cache::TtlDefaults::builtin();
  std::map<std::string, cache::TtlQuirk> quirks;  // resolver label -> quirk
  cache::Convention convention = cache::Convention::Paper;
};

/// Classifies each of a set's latest three responses by its first address
/// record's TTL; the latency comes from the same response.
inline std::vector<cache::ClassifiedPoint> classify_sets(const std::vector<MeasurementSet>& sets, const CacheRules& rules,
                                                         std::vector<std::string>* warnings = nullptr) {
  std::vector<cache::ClassifiedPoint> out;
  std::set<std::string> warned;
  for (const auto& s : sets) {
    std::optional<std::uint32_t> auth;
    if (auto it = rules.ttl_by_website.find(s.website); it != rules.ttl_by_website.end()) auth = it->second;
    else auth = rules.ttl_by_cdn.find(s.cdn);
    if (!auth) {
      if (warnings && warned.insert(s.cdn).second) warnings->push_back("no authoritative TTL for CDN " + s.cdn);
      continue;
    }
    auto q = rules.quirks.find(s.resolver_label);
    const auto quirk = q == rules.quirks.end() ? cache::TtlQuirk::None : q->second;
    if (s.dns_results.size() < 3) continue;
    for (const auto* d : latest_three(s)) {
      const auto* rec = d->response.first_address_record();
      if (!rec) continue;
      out.push_back({{s.cdn, s.resolver_label, s.ip_version},
                     cache::classify(rec->ttl, *auth, quirk, rules.convention).verdict,
                     d->response.latency_ms});
    }
  }
  return out;
}

}  // namespace edgelat::analytics

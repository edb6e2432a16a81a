#pragma once

// Text, CSV and JSON renderings of the analytics views. Output is a pure
// function of the input: map-ordered keys, fixed two-decimal numbers.

#include <cstdio>
#include <sstream>

#include "edgelat/analytics.hpp"
#include "json.hpp"

namespace edgelat::report {

using namespace analytics;

enum class Format { Text, Csv, Json };

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "text") return Format::Text;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  return std::nullopt;
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed2(const std::optional<double>& v) { return v ? fixed2(*v) : "N/A"; }

namespace detail {

inline std::string join(const std::vector<std::string>& cells, Format f) {
  std::string out;
  const char* sep = f == Format::Csv ? "," : " | ";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    if (f == Format::Csv && cells[i].find_first_of(",\"") != std::string::npos) {
      out += '"';
      for (char c : cells[i]) out += c == '"' ? std::string("\"\"") : std::string(1, c);
      out += '"';
    } else {
      out += cells[i];
    }
  }
  return out + "\n";
}

inline std::vector<std::string> ordered_regions(const RegionalTable& t) {
  std::vector<std::string> r;
  for (const auto& [region, _] : t.vantages) r.push_back(region);
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return region_rank(a) < region_rank(b); });
  return r;
}

}  // namespace detail

/// Resolver labels present in `t`, in `preferred` order first, then sorted.
inline std::vector<std::string> resolver_order(const RegionalTable& t, const std::vector<std::string>& preferred) {
  std::set<std::string> present;
  for (const auto& [k, _] : t.cells) present.insert(k.resolver);
  std::vector<std::string> out;
  for (const auto& p : preferred)
    if (present.erase(p)) out.push_back(p);
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

/// One CDN and metric: rows are regions ("Asia (212 Probes)"), columns are
/// resolver x family medians.
inline std::string regional_table(const RegionalTable& t, const std::string& cdn, Metric metric,
                                  const std::vector<std::string>& resolvers_preferred, Format f,
                                  const std::vector<IpVersion>& families = {IpVersion::V4, IpVersion::V6}) {
  const auto resolvers = resolver_order(t, resolvers_preferred);
  const auto regions = detail::ordered_regions(t);
  auto cell = [&](const std::string& region, const std::string& resolver, IpVersion v) -> std::optional<double> {
    auto it = t.cells.find({region, cdn, resolver, v, metric});
    if (it == t.cells.end()) return std::nullopt;
    return it->second.median;
  };
  auto has_row = [&](const std::string& region) {
    for (const auto& r : resolvers)
      for (auto v : families)
        if (cell(region, r, v)) return true;
    return false;
  };

  if (f == Format::Json) {
    nlohmann::ordered_json j;
    j["cdn"] = cdn;
    j["metric"] = to_string(metric);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& region : regions) {
      if (!has_row(region)) continue;
      nlohmann::ordered_json row;
      row["region"] = region;
      row["probes"] = t.vantages.at(region);
      for (const auto& r : resolvers)
        for (auto v : families) {
          auto c = cell(region, r, v);
          row[r][std::string(to_string(v))] = c ? nlohmann::ordered_json(std::stod(fixed2(*c))) : nlohmann::ordered_json();
        }
      j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
  }

  std::string out;
  if (f == Format::Text)
    out += "Median " + std::string(metric == Metric::Dns ? "DNS" : "mapping") + " latencies (ms) for " + cdn +
           " by region\n";
  std::vector<std::string> head{"Region"};
  for (const auto& r : resolvers)
    for (auto v : families) head.push_back(r + (v == IpVersion::V4 ? " IPv4" : " IPv6"));
  out += detail::join(head, f);
  for (const auto& region : regions) {
    if (!has_row(region)) continue;
    std::vector<std::string> row{region + " (" + std::to_string(t.vantages.at(region)) + " Probes)"};
    for (const auto& r : resolvers)
      for (auto v : families) row.push_back(fixed2(cell(region, r, v)));
    out += detail::join(row, f);
  }
  return out;
}

/// CDN x resolver rows; hit, miss and unknown rate and median latency per
/// family.
inline std::string hit_rate_table(const std::map<cache::HitRateKey, cache::HitRateRow>& rows, Format f) {
  std::map<std::pair<std::string, std::string>, std::map<IpVersion, const cache::HitRateRow*>> grid;
  for (const auto& [k, r] : rows) grid[{k.cdn, k.resolver}][k.ip_version] = &r;

  if (f == Format::Json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& [k, fam] : grid)
      for (const auto& [v, r] : fam) {
        auto lat = [](const std::optional<double>& x) {
          return x ? nlohmann::ordered_json(std::stod(fixed2(*x))) : nlohmann::ordered_json();
        };
        j.push_back({{"cdn", k.first}, {"resolver", k.second}, {"ip_version", std::string(to_string(v))}, {"responses", r->total},
                     {"hit_rate", std::stod(fixed2(r->hit_rate))}, {"hit_latency", lat(r->hit_latency)},
                     {"miss_rate", std::stod(fixed2(r->miss_rate))}, {"miss_latency", lat(r->miss_latency)},
                     {"unknown_rate", std::stod(fixed2(r->unknown_rate))}, {"unknown_latency", lat(r->unknown_latency)}});
      }
    return j.dump(2) + "\n";
  }

  std::string out;
  if (f == Format::Text) out += "DNS cache hits and misses (rate %, median latency ms)\n";
  std::vector<std::string> head{"CDN", "Resolver"};
  for (auto cls : {"Hit", "Miss", "Unknown"})
    for (auto v : {"IPv4", "IPv6"}) {
      head.push_back(std::string(cls) + " " + v + " rate");
      head.push_back(std::string(cls) + " " + v + " latency");
    }
  out += detail::join(head, f);
  for (const auto& [k, fam] : grid) {
    std::vector<std::string> row{k.first, k.second};
    for (int cls = 0; cls < 3; ++cls)
      for (auto v : {IpVersion::V4, IpVersion::V6}) {
        auto it = fam.find(v);
        if (it == fam.end()) {
          row.push_back("N/A");
          row.push_back("N/A");
          continue;
        }
        const auto* r = it->second;
        const double rate[] = {r->hit_rate, r->miss_rate, r->unknown_rate};
        const std::optional<double> lat[] = {r->hit_latency, r->miss_latency, r->unknown_latency};
        row.push_back(fixed2(rate[cls]));
        row.push_back(fixed2(lat[cls]));
      }
    out += detail::join(row, f);
  }
  return out;
}

inline std::string penalty_table(const PenaltyReport& rep, double threshold_ms, Format f) {
  std::vector<PenaltyRow> rows = rep.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tuple(a.cdn, to_string(a.metric), region_rank(a.region), a.region, a.resolver) <
           std::tuple(b.cdn, to_string(b.metric), region_rank(b.region), b.region, b.resolver);
  });
  if (f == Format::Json) {
    nlohmann::ordered_json j;
    j["threshold_ms"] = threshold_ms;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"region", r.region}, {"cdn", r.cdn}, {"resolver", r.resolver},
                           {"metric", to_string(r.metric)}, {"v4", std::stod(fixed2(r.v4))},
                           {"v6", std::stod(fixed2(r.v6))}, {"delta", std::stod(fixed2(r.delta))},
                           {"exceeds_threshold", r.exceeds}});
    j["warnings"] = rep.warnings;
    return j.dump(2) + "\n";
  }
  std::string out;
  if (f == Format::Text) out += "IPv6 penalty (v6 - v4 median, ms; threshold " + fixed2(threshold_ms) + ")\n";
  out += detail::join({"CDN", "Metric", "Region", "Resolver", "IPv4", "IPv6", "Delta", "Exceeds"}, f);
  for (const auto& r : rows)
    out += detail::join({r.cdn, to_string(r.metric), r.region, r.resolver, fixed2(r.v4), fixed2(r.v6), fixed2(r.delta),
                         r.exceeds ? "yes" : "no"},
                        f);
  return out;
}

inline std::string diversity_table(const std::map<DiversityKey, DiversityReport>& reps, Format f) {
  if (f == Format::Json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& [k, r] : reps) {
      nlohmann::ordered_json purity = nlohmann::ordered_json::object();
      for (const auto& [region, p] : r.purity) purity[region] = std::stod(fixed2(p));
      j.push_back({{"website", k.website}, {"resolver", k.resolver}, {"ip_version", std::string(to_string(k.ip_version))},
                   {"unique", r.unique}, {"frequency", r.frequency}, {"purity", purity}, {"pattern", r.pattern}});
    }
    return j.dump(2) + "\n";
  }
  std::string out;
  if (f == Format::Text) out += "Edge address diversity\n";
  out += detail::join({"Website", "Resolver", "Family", "Unique", "Purity by region", "Pattern"}, f);
  for (const auto& [k, r] : reps) {
    std::string purity;
    for (const auto& [region, p] : r.purity) purity += (purity.empty() ? "" : "; ") + region + "=" + fixed2(p);
    out += detail::join({k.website, k.resolver, std::string(to_string(k.ip_version)), std::to_string(r.unique), purity, r.pattern},
                        f);
  }
  return out;
}

/// Two-column `value,fraction` CSV per series.
inline std::map<std::string, std::string> cdf_csv(const std::map<std::string, std::vector<stats::CdfPoint>>& series) {
  std::map<std::string, std::string> out;
  for (const auto& [k, pts] : series) {
    std::string s = "value,fraction\n";
    char buf[96];
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof buf, "%.4f,%.6f\n", p.value, p.fraction);
      s += buf;
    }
    out.emplace(k, std::move(s));
  }
  return out;
}

/// Global medians (and means) per CDN, resolver, family and metric.
inline std::string summary_table(const std::map<CellKey, Cell>& cells, Format f) {
  if (f == Format::Json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& [k, c] : cells)
      j.push_back({{"cdn", k.cdn}, {"resolver", k.resolver}, {"ip_version", std::string(to_string(k.ip_version))},
                   {"metric", to_string(k.metric)}, {"median", std::stod(fixed2(c.median))},
                   {"mean", std::stod(fixed2(c.mean))}, {"vantages", c.points}});
    return j.dump(2) + "\n";
  }
  std::string out;
  if (f == Format::Text) out += "Median latencies across vantage points (ms)\n";
  out += detail::join({"CDN", "Resolver", "Family", "Metric", "Median", "Mean", "Vantages"}, f);
  for (const auto& [k, c] : cells)
    out += detail::join({k.cdn, k.resolver, std::string(to_string(k.ip_version)), to_string(k.metric), fixed2(c.median),
                         fixed2(c.mean), std::to_string(c.points)},
                        f);
  return out;
}

}  // namespace edgelat::report

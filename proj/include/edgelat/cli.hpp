#pragma once

// The `edgelat` command line. `run` is callable in-process with injected
// network seams; exit status is 0 on success, 1 on partial failure and 2
// on a usage error.

#include <filesystem>
#include <iostream>
#include <regex>

#include "CLI11.hpp"
#include "edgelat/atlas.hpp"
#include "edgelat/config.hpp"
#include "edgelat/discovery.hpp"
#include "edgelat/report.hpp"
#include "edgelat/resolver_identity.hpp"
#include "edgelat/store.hpp"

namespace edgelat::cli {

inline constexpr int kOk = 0;
inline constexpr int kPartial = 1;
inline constexpr int kUsage = 2;

struct Services {
  campaign::ProbeServices probe;
  std::function<std::optional<std::string>(const std::string& domain, std::chrono::milliseconds timeout)> fetch_page;
  std::optional<identity::IdentityServices> identity;              // empty: live lookups through probe.resolve
  std::function<IpAddress(IpVersion)> public_address;              // empty: live lookup through probe.resolve
  std::string resolv_conf = "/etc/resolv.conf";
  std::function<Timestamp()> now = [] { return Timestamp::now(); };
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw Error(Errc::IoFailure, "cannot write " + path);
}

inline config::ToolConfig load_config(const std::string& path) {
  return path.empty() ? config::defaults() : config::load(path);
}

inline std::vector<campaign::Website> load_websites(const std::string& path) {
  if (path.empty()) throw Error(Errc::InvalidArgument, "no website list: set \"websites\" in the configuration");
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseFailure, path + " is not valid JSON");
  std::vector<campaign::Website> out;
  for (auto& [cdn, name] : discovery::websites_from_json(j)) out.push_back({cdn, name});
  return out;
}

inline identity::IdentityServices identity_services(const Services& svc, const config::ToolConfig& cfg) {
  if (svc.identity) return *svc.identity;
  identity::AsnLookupOptions asn;
  asn.resolve = svc.probe.resolve;
  asn.timeout = cfg.dns_timeout;
  identity::WhoamiOptions who;
  who.resolve = svc.probe.resolve;
  who.timeout = cfg.dns_timeout;
  return identity::IdentityServices::network(asn, who);
}

inline IpAddress public_address(const Services& svc, const config::ToolConfig& cfg, IpVersion v) {
  if (svc.public_address) return svc.public_address(v);
  identity::PublicAddressOptions opt;
  opt.resolve = svc.probe.resolve;
  opt.timeout = cfg.dns_timeout;
  return identity::discover_public_address(v, opt);
}

struct IspDetection {
  std::vector<identity::ResolverClassification> classifications;
  std::optional<campaign::ResolverSpec> resolver;  // both families ISP-provided
  std::vector<std::string> notices;
};

inline IspDetection detect_isp(const Services& svc, const config::ToolConfig& cfg) {
  IspDetection d;
  std::vector<identity::LocalResolver> locals;
  try {
    locals = identity::enumerate_local_resolvers(svc.resolv_conf);
  } catch (const Error& e) {
    d.notices.push_back(std::string("no local resolvers: ") + e.what());
    return d;
  }
  IpAddress vantage;
  try {
    vantage = public_address(svc, cfg, IpVersion::V4);
  } catch (const std::exception& e) {
    d.notices.push_back(std::string("public address unknown: ") + e.what());
    return d;
  }
  const auto ids = identity_services(svc, cfg);
  for (const auto& r : locals) d.classifications.push_back(identity::classify_resolver(r, vantage, ids));
  std::optional<Endpoint> v4, v6;
  for (const auto& c : d.classifications) {
    if (c.verdict != identity::IspVerdict::IspProvided) continue;
    auto& slot = c.resolver.family == IpVersion::V4 ? v4 : v6;
    if (!slot) slot = Endpoint{c.resolver.address, cfg.dns_port};
  }
  if (v4 && v6) d.resolver = campaign::ResolverSpec{campaign::kIspLabel, *v4, *v6};
  else d.notices.push_back("ISP resolver not usable in both families; excluded from comparison");
  return d;
}

inline std::vector<std::string> preferred_resolvers(const config::ToolConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& r : cfg.resolvers) out.push_back(r.label);
  out.push_back(campaign::kIspLabel);
  return out;
}

inline std::vector<store::CampaignRecord> to_records(const std::string& id, store::Provenance p,
                                                     const campaign::MeasurementSpec& spec,
                                                     std::vector<campaign::MeasurementSet> sets) {
  std::vector<store::CampaignRecord> out;
  out.reserve(sets.size());
  for (auto& s : sets) out.push_back({store::kSchemaVersion, id, p, spec, std::move(s)});
  return out;
}

inline std::optional<IpVersion> parse_family(std::string_view s) {
  const auto l = dns::lowercase(s);
  if (l == "v4" || l == "4" || l == "ipv4") return IpVersion::V4;
  if (l == "v6" || l == "6" || l == "ipv6") return IpVersion::V6;
  return std::nullopt;
}

struct Paths {
  std::vector<std::string> files;
  std::string dir;
  std::string month;
};

/// Campaign files named directly, plus every `*.jsonl` in campaign
/// directories under `dir` whose name starts with `month`.
inline std::vector<std::string> campaign_files(const Paths& p) {
  std::vector<std::string> out = p.files;
  if (!p.dir.empty()) {
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(p.dir))
      if (e.is_directory() && e.path().filename().string().starts_with(p.month)) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(d))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back(f.string());
    }
  }
  return out;
}

struct Loaded {
  std::vector<store::CampaignRecord> records;
  bool partial = false;
};

inline Loaded load_records(const Paths& p, std::ostream& err) {
  Loaded l;
  for (const auto& f : campaign_files(p)) {
    auto r = store::read_records(f);
    if (r.error) {
      err << "warning: " << r.error->what() << "\n";
      l.partial = true;
    }
    for (auto& rec : r.records) {
      if (p.dir.empty() && !p.month.empty() && !utc_stamp(rec.set.created_at.wall_us).starts_with(p.month)) continue;
      l.records.push_back(std::move(rec));
    }
  }
  return l;
}

inline std::vector<campaign::MeasurementSet> sets_of(const std::vector<store::CampaignRecord>& rs) {
  std::vector<campaign::MeasurementSet> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(r.set);
  return out;
}

inline std::string file_safe(std::string s) {
  for (auto& c : s)
    if (c == '/' || c == ' ') c = '_';
  return s;
}

}  // namespace detail

/// Options shared by `analyze` and `report`.
struct QueryOptions {
  detail::Paths paths;
  std::string config;
  std::string geo;
  std::string cdn, resolver, ip_version, region, metric;
  std::string format = "text";
  bool no_filter = false;
};

inline void add_query_options(CLI::App* cmd, QueryOptions& q) {
  cmd->add_option("--in", q.paths.files, "Campaign files (JSON lines)");
  cmd->add_option("--dir", q.paths.dir, "Root of campaign directories");
  cmd->add_option("--month", q.paths.month, "Select campaigns by month, YYYY-MM")
      ->check([](const std::string& s) {
        return std::regex_match(s, std::regex(R"(\d{4}-\d{2})")) ? std::string() : std::string("expected YYYY-MM");
      });
  cmd->add_option("--config", q.config, "Configuration file");
  cmd->add_option("--geo", q.geo, "Vantage to continent map");
  cmd->add_option("--cdn", q.cdn, "CDN, or 'all' for every CDN weighted equally");
  cmd->add_option("--resolver", q.resolver, "Resolver label");
  cmd->add_option("--ip-version", q.ip_version, "v4 or v6")->check([](const std::string& s) {
    return detail::parse_family(s) ? std::string() : std::string("expected v4 or v6");
  });
  cmd->add_option("--region", q.region, "Continent");
  cmd->add_option("--metric", q.metric, "dns or mapping")->check(CLI::IsMember({"dns", "mapping"}));
  cmd->add_option("--format", q.format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  cmd->add_flag("--no-filter", q.no_filter, "Skip the completeness filter");
}

struct Query {
  config::ToolConfig cfg;
  analytics::GeoMap geo;
  std::vector<campaign::MeasurementSet> sets;
  analytics::PointFilter filter;
  report::Format format = report::Format::Text;
  bool partial = false;
};

inline Query prepare_query(const QueryOptions& q, std::ostream& err) {
  Query out;
  out.cfg = detail::load_config(q.config);
  const auto geo_path = q.geo.empty() ? out.cfg.geo_path : q.geo;
  if (!geo_path.empty()) out.geo = analytics::parse_geo(detail::read_file(geo_path));
  auto loaded = detail::load_records(q.paths, err);
  out.partial = loaded.partial;
  out.sets = detail::sets_of(loaded.records);
  if (!q.no_filter) {
    campaign::CompletenessOptions co;
    co.thresholds = out.cfg.thresholds;
    co.handshake_repeats = out.cfg.handshake_repeats;
    out.sets = campaign::completeness_filter(out.sets, co).retained;
  }
  if (!q.cdn.empty()) out.filter.cdn = q.cdn;
  if (!q.resolver.empty()) out.filter.resolver = q.resolver;
  if (!q.ip_version.empty()) out.filter.ip_version = detail::parse_family(q.ip_version);
  if (!q.region.empty()) out.filter.region = q.region;
  if (!q.metric.empty()) out.filter.metric = analytics::parse_metric(q.metric);
  out.format = *report::parse_format(q.format);
  return out;
}

inline std::vector<analytics::LatencyPoint> query_points(const Query& q) {
  auto points = analytics::aggregate(q.sets, q.geo);
  if (q.filter.cdn && analytics::PointFilter::names_match(*q.filter.cdn, analytics::kAllCdns))
    points = analytics::with_all_cdns(std::move(points));
  return analytics::filter(points, q.filter);
}

inline int cmd_analyze(const QueryOptions& opt, std::ostream& out, std::ostream& err) {
  const auto q = prepare_query(opt, err);
  const auto points = query_points(q);
  auto table = analytics::regional_breakdown(points, q.geo);
  if (q.filter.region) {
    const auto keep = analytics::canonical_region(*q.filter.region);
    std::erase_if(table.cells, [&](const auto& kv) { return kv.first.region != keep; });
    std::erase_if(table.vantages, [&](const auto& kv) { return kv.first != keep; });
  }
  std::vector<IpVersion> families{IpVersion::V4, IpVersion::V6};
  if (q.filter.ip_version) families = {*q.filter.ip_version};
  std::set<std::pair<std::string, analytics::Metric>> views;
  for (const auto& [k, _] : table.cells) views.insert({k.cdn, k.metric});

  auto json = nlohmann::ordered_json::array();
  std::string text;
  for (const auto& [cdn, metric] : views) {
    const auto t = report::regional_table(table, cdn, metric, detail::preferred_resolvers(q.cfg), q.format, families);
    if (q.format == report::Format::Json) json.push_back(nlohmann::ordered_json::parse(t));
    else text += (text.empty() ? "" : "\n") + t;
  }
  out << (q.format == report::Format::Json ? json.dump(2) + "\n" : text);
  return q.partial ? kPartial : kOk;
}

struct ReportOptions {
  QueryOptions query;
  std::string kind = "summary";
  std::string out_dir;
  double threshold_ms = analytics::kHappyEyeballsMs;
  std::size_t max_addresses = analytics::kAnycastMaxAddresses;
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  const auto q = prepare_query(opt.query, err);
  int status = q.partial ? kPartial : kOk;
  if (opt.kind == "summary") {
    out << report::summary_table(analytics::global_medians(query_points(q)), q.format);
  } else if (opt.kind == "cdf") {
    const auto points = query_points(q);
    if (points.empty()) return status;
    const auto files = report::cdf_csv(analytics::distribution(points));
    for (const auto& [key, csv] : files) {
      if (opt.out_dir.empty()) {
        out << "# " << key << "\n" << csv;
      } else {
        const auto path = (std::filesystem::path(opt.out_dir) / (detail::file_safe(key) + ".csv")).string();
        detail::write_file(path, csv);
        out << path << "\n";
      }
    }
  } else if (opt.kind == "cache") {
    std::vector<std::string> warnings;
    auto classified = analytics::classify_sets(q.sets, q.cfg.cache_rules(), &warnings);
    std::erase_if(classified, [&](const cache::ClassifiedPoint& p) {
      return (q.filter.cdn && !analytics::PointFilter::names_match(*q.filter.cdn, p.key.cdn)) ||
             (q.filter.resolver && !analytics::PointFilter::names_match(*q.filter.resolver, p.key.resolver)) ||
             (q.filter.ip_version && *q.filter.ip_version != p.key.ip_version);
    });
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    out << report::hit_rate_table(cache::hit_rate_table(classified), q.format);
  } else if (opt.kind == "penalty") {
    auto f = q.filter;
    f.ip_version.reset();
    auto points = analytics::aggregate(q.sets, q.geo);
    if (f.cdn && analytics::PointFilter::names_match(*f.cdn, analytics::kAllCdns))
      points = analytics::with_all_cdns(std::move(points));
    const auto rep = analytics::ipv6_penalty(analytics::filter(points, f), q.geo, opt.threshold_ms);
    out << report::penalty_table(rep, opt.threshold_ms, q.format);
  } else if (opt.kind == "diversity") {
    auto reps = analytics::address_diversity(analytics::observations(q.sets), q.geo, opt.max_addresses);
    std::erase_if(reps, [&](const auto& kv) {
      return (q.filter.resolver && !analytics::PointFilter::names_match(*q.filter.resolver, kv.first.resolver)) ||
             (q.filter.ip_version && *q.filter.ip_version != kv.first.ip_version);
    });
    out << report::diversity_table(reps, q.format);
  }
  return status;
}

inline int cmd_discover(const config::ToolConfig& cfg, const std::string& list_path, const std::string& out_path,
                        bool no_pages, const Services& svc, std::ostream& out, std::ostream& err) {
  if (cfg.catalog_path.empty()) throw Error(Errc::InvalidArgument, "no CDN catalog: set \"catalog\" in the configuration");
  const auto catalog = discovery::CdnCatalog::load(cfg.catalog_path);
  const auto list_file = list_path.empty() ? cfg.domain_list_path : list_path;
  if (list_file.empty()) throw Error(Errc::InvalidArgument, "no domain list: pass --list");
  const auto list = discovery::parse_ranked_list(detail::read_file(list_file));
  std::vector<discovery::ResolverEndpoints> resolvers;
  for (const auto& r : cfg.resolvers) resolvers.push_back({r.label, r.v4, r.v6});
  discovery::ScanOptions opt;
  opt.resolve = svc.probe.resolve;
  opt.timeout = cfg.dns_timeout;
  opt.fanout = cfg.fanout;
  if (!no_pages && svc.fetch_page)
    opt.fetch_page = [f = svc.fetch_page, t = cfg.page_timeout](const std::string& d) { return f(d, t); };
  const auto result = discovery::scan_domain_list(list, catalog, cfg.quotas, resolvers, opt);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  const auto doc = discovery::to_json(result).dump(2) + "\n";
  const auto target = out_path.empty() ? cfg.websites_path : out_path;
  if (target.empty()) {
    out << doc;
  } else {
    detail::write_file(target, doc);
    out << "wrote " << target << "\n";
  }
  for (const auto& [cdn, sites] : result.sites) out << cdn << ": " << sites.size() << " websites\n";
  for (const auto& cdn : result.unmet) err << "quota not met for " << cdn << "\n";
  return result.quota_unmet() ? kPartial : kOk;
}

inline int cmd_detect_isp(const config::ToolConfig& cfg, const Services& svc, std::ostream& out, std::ostream& err) {
  const auto d = detail::detect_isp(svc, cfg);
  for (const auto& c : d.classifications) {
    out << c.resolver.address.to_string() << " " << (c.resolver.is_private ? "private" : "public");
    if (c.egress_address) out << " egress " << c.egress_address->to_string();
    if (auto asn = c.resolver.is_private ? c.egress_asn : c.resolver_asn) out << " AS" << *asn;
    if (c.vantage_asn) out << " vantage AS" << *c.vantage_asn;
    out << " " << identity::to_string(c.verdict);
    if (!c.note.empty()) out << " (" << c.note << ")";
    out << "\n";
  }
  for (const auto& n : d.notices) err << n << "\n";
  out << "ISP resolver " << (d.resolver ? "usable" : "not usable") << "\n";
  return d.resolver ? kOk : kPartial;
}

struct MeasureOutcome {
  std::string path;
  std::size_t sets = 0;
  bool partial = false;
};

inline MeasureOutcome measure_once(const config::ToolConfig& cfg, const std::string& websites_path,
                                   const std::string& out_path, std::uint64_t seed, const Services& svc,
                                   std::ostream& err) {
  auto spec = cfg.spec();
  spec.websites = detail::load_websites(websites_path.empty() ? cfg.websites_path : websites_path);
  if (spec.websites.empty()) throw Error(Errc::InvalidArgument, "website list is empty");
  if (cfg.include_isp) {
    auto d = detail::detect_isp(svc, cfg);
    for (const auto& n : d.notices) err << n << "\n";
    if (d.resolver) spec.resolvers.push_back(*d.resolver);
  }
  campaign::CampaignOptions co;
  co.vantage_id = cfg.vantage_id;
  co.fanout = cfg.fanout;
  co.seed = seed;
  auto result = campaign::run_campaign(spec, svc.probe, co);
  for (const auto& n : result.notices) err << n << "\n";

  const auto id = utc_stamp(svc.now().wall_us);
  const auto path = out_path.empty() ? (std::filesystem::path(cfg.output_dir) / id / "campaign.jsonl").string() : out_path;
  if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  MeasureOutcome m{path, result.sets.size(), !result.dropped_resolvers.empty()};
  for (const auto& s : result.sets)
    if (!campaign::is_usable(s, spec.handshake_repeats)) m.partial = true;
  store::write_records(path, detail::to_records(id, store::Provenance::Native, spec, std::move(result.sets)));
  return m;
}

inline int cmd_fill_in(const std::string& in_path, const std::string& out_path, const std::string& config_path,
                       const Services& svc, std::ostream& out, std::ostream& err) {
  const auto cfg = detail::load_config(config_path);
  auto read = store::read_records(in_path);
  bool partial = false;
  if (read.error) {
    err << "warning: " << read.error->what() << "\n";
    partial = true;
  }
  if (read.records.empty()) {
    out << "no records\n";
    return partial ? kPartial : kOk;
  }
  const auto spec = read.records.front().spec;
  auto sets = detail::sets_of(read.records);
  const auto rep = campaign::fill_in(sets, spec, svc.probe, cfg.fanout);
  for (std::size_t i = 0; i < sets.size(); ++i) read.records[i].set = std::move(sets[i]);
  const auto target = out_path.empty() ? in_path : out_path;
  store::write_records(target, read.records);
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  out << "retried " << rep.retried << ", replaced " << rep.replaced << ", failed twice " << rep.failed_twice << "\n";
  return partial || rep.failed_twice > 0 || !rep.warnings.empty() ? kPartial : kOk;
}

inline int cmd_import_atlas(const std::string& dns_path, const std::string& tls_path, const std::string& out_path,
                            const std::string& config_path, const std::string& websites_path, std::string campaign_id,
                            const Services& svc, std::ostream& out, std::ostream& err) {
  const auto cfg = detail::load_config(config_path);
  atlas::ImportOptions opt;
  for (const auto& r : cfg.resolvers) {
    opt.resolver_labels[r.v4.address] = r.label;
    opt.resolver_labels[r.v6.address] = r.label;
  }
  auto spec = cfg.spec();
  const auto wpath = websites_path.empty() ? cfg.websites_path : websites_path;
  if (!wpath.empty()) {
    spec.websites = detail::load_websites(wpath);
    for (const auto& w : spec.websites) opt.website_cdns[dns::normalize_name(w.name)] = w.cdn;
  }
  auto result = atlas::import_atlas_files(dns_path, tls_path, opt);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  if (campaign_id.empty()) campaign_id = "atlas-" + utc_stamp(svc.now().wall_us);
  const auto n = result.sets.size();
  store::write_records(out_path, detail::to_records(campaign_id, store::Provenance::AtlasImport, spec, std::move(result.sets)));
  out << "imported " << n << " sets (skipped " << result.skipped << ", orphans " << result.orphans << ") into "
      << out_path << "\n";
  return result.skipped || result.orphans ? kPartial : kOk;
}

/// Runs one command line; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Services& svc = {}) {
  CLI::App app{"DNS resolution and CDN mapping latency measurements", "edgelat"};
  app.require_subcommand(1);

  std::string config_path;
  auto* discover = app.add_subcommand("discover", "Select CDN-accelerated dual-stack websites from a ranked list");
  std::string list_path, discover_out;
  bool no_pages = false;
  discover->add_option("--config", config_path, "Configuration file");
  discover->add_option("--list", list_path, "Ranked domain list (CSV)");
  discover->add_option("--out", discover_out, "Output website file");
  discover->add_flag("--no-pages", no_pages, "Do not fetch root pages for embedded domains");

  auto* detect = app.add_subcommand("detect-isp", "Classify local resolvers as ISP-provided or external");
  detect->add_option("--config", config_path, "Configuration file");
  std::string resolv_conf = svc.resolv_conf;
  detect->add_option("--resolv-conf", resolv_conf, "Resolver configuration file");

  std::string websites_path, out_path;
  auto* measure = app.add_subcommand("measure", "Run one measurement campaign");
  measure->add_option("--config", config_path, "Configuration file");
  measure->add_option("--websites", websites_path, "Website file written by discover");
  measure->add_option("--out", out_path, "Campaign file (default: <output_dir>/<timestamp>/campaign.jsonl)");

  std::optional<std::size_t> iterations;
  auto* schedule = app.add_subcommand("schedule", "Run campaigns every configured interval");
  schedule->add_option("--config", config_path, "Configuration file")->required();
  schedule->add_option("--websites", websites_path, "Website file written by discover");
  schedule->add_option("--iterations", iterations, "Number of campaigns (0: until interrupted)");

  std::string in_path;
  auto* fill = app.add_subcommand("fill-in", "Re-run unusable measurement sets once");
  fill->add_option("--in", in_path, "Campaign file")->required();
  fill->add_option("--out", out_path, "Output file (default: rewrite the input)");
  fill->add_option("--config", config_path, "Configuration file");

  QueryOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze", "Regional median tables over stored campaigns");
  add_query_options(analyze, analyze_opt);

  ReportOptions report_opt;
  auto* rep = app.add_subcommand("report", "CDF, cache, penalty, diversity and summary reports");
  add_query_options(rep, report_opt.query);
  rep->add_option("--kind", report_opt.kind, "summary, cdf, cache, penalty or diversity")
      ->check(CLI::IsMember({"summary", "cdf", "cache", "penalty", "diversity"}));
  rep->add_option("--out-dir", report_opt.out_dir, "Directory for CDF files");
  rep->add_option("--threshold-ms", report_opt.threshold_ms, "IPv6 penalty flag threshold");
  rep->add_option("--max-addresses", report_opt.max_addresses, "Anycast-like address count limit");

  std::string dns_path, tls_path, campaign_id;
  auto* import = app.add_subcommand("import-atlas", "Convert RIPE Atlas DNS and sslcert results");
  import->add_option("--dns", dns_path, "DNS results (JSON)")->required();
  import->add_option("--tls", tls_path, "sslcert results (JSON)")->required();
  import->add_option("--out", out_path, "Campaign file to write")->required();
  import->add_option("--config", config_path, "Configuration file");
  import->add_option("--websites", websites_path, "Website file mapping names to CDNs");
  import->add_option("--campaign-id", campaign_id, "Campaign identifier");

  std::vector<std::string> argv_store{"edgelat"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUsage;
  }

  try {
    if (*discover) return cmd_discover(detail::load_config(config_path), list_path, discover_out, no_pages, svc, out, err);
    if (*detect) {
      auto local = svc;
      local.resolv_conf = resolv_conf;
      return cmd_detect_isp(detail::load_config(config_path), local, out, err);
    }
    if (*measure) {
      const auto cfg = detail::load_config(config_path);
      const auto m = measure_once(cfg, websites_path, out_path, cfg.seed, svc, err);
      out << "wrote " << m.sets << " measurement sets to " << m.path << "\n";
      return m.partial ? kPartial : kOk;
    }
    if (*schedule) {
      const auto cfg = detail::load_config(config_path);
      bool partial = false;
      campaign::run_recurrent(
          std::chrono::duration_cast<std::chrono::milliseconds>(cfg.interval), iterations.value_or(cfg.iterations),
          [&](std::size_t i) {
            try {
              const auto m = measure_once(cfg, websites_path, {}, cfg.seed + i, svc, err);
              out << "campaign " << i + 1 << ": wrote " << m.sets << " measurement sets to " << m.path << "\n";
              partial = partial || m.partial;
            } catch (const std::exception& e) {
              err << "campaign " << i + 1 << " failed: " << e.what() << "\n";
              partial = true;
            }
            return true;
          },
          svc.probe.sleep);
      return partial ? kPartial : kOk;
    }
    if (*fill) return cmd_fill_in(in_path, out_path, config_path, svc, out, err);
    if (*analyze) return cmd_analyze(analyze_opt, out, err);
    if (*rep) return cmd_report(report_opt, out, err);
    if (*import)
      return cmd_import_atlas(dns_path, tls_path, out_path, config_path, websites_path, campaign_id, svc, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kPartial;
  }
  return kUsage;
}

}  // namespace edgelat::cli

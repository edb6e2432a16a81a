#pragma once

// The measurement protocol: prewarm query, gap, back-to-back follow-ups,
// handshake probes; plus the usable-set, completeness and fill-in rules.

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "edgelat/mapping.hpp"

namespace edgelat::campaign {

inline constexpr const char* kIspLabel = "ISP";

struct ResolverSpec {
  std::string label;
  Endpoint v4;
  Endpoint v6;

  const Endpoint& endpoint(IpVersion v) const { return v == IpVersion::V4 ? v4 : v6; }

  friend bool operator==(const ResolverSpec&, const ResolverSpec&) = default;
};

struct Website {
  std::string cdn;
  std::string name;  // terminal CNAME

  friend bool operator==(const Website&, const Website&) = default;
};

struct MeasurementSpec {
  std::vector<Website> websites;
  std::vector<ResolverSpec> resolvers;
  int dns_repeats = 3;
  std::chrono::milliseconds prewarm_gap{15000};
  int handshake_repeats = 3;
  std::uint16_t handshake_port = 443;
  std::chrono::milliseconds dns_timeout{5000};
  std::chrono::milliseconds handshake_timeout{5000};

  void validate() const {
    if (dns_repeats < 2) throw Error(Errc::InvalidArgument, "dns_repeats must be at least 2");
    if (handshake_repeats < 1) throw Error(Errc::InvalidArgument, "handshake_repeats must be at least 1");
    if (prewarm_gap.count() < 0) throw Error(Errc::InvalidArgument, "negative prewarm gap");
    for (const auto& r : resolvers)
      if (!r.v4.address.is_v4() || r.v6.address.is_v4())
        throw Error(Errc::InvalidArgument, "resolver " + r.label + " needs one IPv4 and one IPv6 address");
  }

  const ResolverSpec* resolver(std::string_view label) const {
    for (const auto& r : resolvers)
      if (r.label == label) return &r;
    return nullptr;
  }

  friend bool operator==(const MeasurementSpec&, const MeasurementSpec&) = default;
};

struct MeasurementSet {
  std::string vantage_id;
  std::string website;
  std::string cdn;
  std::string resolver_label;
  IpVersion ip_version = IpVersion::V4;
  std::vector<DnsResult> dns_results;
  std::vector<HandshakeSample> handshakes;  // successful probes only
  std::optional<EdgeAssignment> edge;
  Timestamp created_at;
  int attempt = 1;
  bool failed_twice = false;

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;
};

/// Seams for everything that touches the network or the clock.
struct ProbeServices {
  dns::ResolveFn resolve = dns::network_resolver();
  std::function<HandshakeSample(const Endpoint&, std::chrono::milliseconds)> handshake =
      [](const Endpoint& ep, std::chrono::milliseconds t) { return measure_handshake(ep, t); };
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// One prewarm, `prewarm_gap`, `dns_repeats` serial follow-ups, then
/// `handshake_repeats` serial probes to the selected edge. Failed pieces are
/// left out of the set.
inline MeasurementSet run_measurement_set(const MeasurementSpec& spec, const Website& site, const ResolverSpec& resolver,
                                          IpVersion version, const ProbeServices& svc,
                                          const std::string& vantage_id = "local") {
  MeasurementSet set;
  set.vantage_id = vantage_id;
  set.website = dns::normalize_name(site.name);
  set.cdn = site.cdn;
  set.resolver_label = resolver.label;
  set.ip_version = version;
  set.created_at = Timestamp::now();

  const auto q = dns::DnsQuestion::to(set.website, dns::address_type(version), resolver.endpoint(version),
                                      spec.dns_timeout);
  auto attempt = [&](bool prewarm) {
    try {
      set.dns_results.push_back({svc.resolve(q), prewarm});
    } catch (const Error&) {
    }
  };
  attempt(true);
  svc.sleep(spec.prewarm_gap);
  for (int i = 0; i < spec.dns_repeats; ++i) attempt(false);

  try {
    set.edge = select_edge(set.dns_results, version, set.website, resolver.label);
  } catch (const Error&) {
    return set;
  }
  const Endpoint target{set.edge->address, spec.handshake_port};
  for (int i = 0; i < spec.handshake_repeats; ++i) {
    auto s = svc.handshake(target, spec.handshake_timeout);
    if (s.success()) set.handshakes.push_back(std::move(s));
  }
  return set;
}

/// At least three DNS results and every handshake probe.
inline bool is_usable(const MeasurementSet& set, int handshake_repeats = 3) {
  return set.dns_results.size() >= 3 && static_cast<int>(set.handshakes.size()) >= handshake_repeats;
}

struct VantageWebsite {
  std::string vantage_id;
  std::string website;
  friend auto operator<=>(const VantageWebsite&, const VantageWebsite&) = default;
};

struct CompletenessResult {
  std::vector<MeasurementSet> retained;  // usable sets of complete pairs at retained vantages
  std::set<VantageWebsite> complete_pairs;
  std::set<std::string> retained_vantages;
  std::set<std::string> dropped_vantages;
  std::map<std::string, std::map<std::string, std::size_t>> complete_counts;  // vantage -> cdn -> websites
};

struct CompletenessOptions {
  std::map<std::string, std::size_t> thresholds;  // cdn -> minimum complete websites
  std::vector<std::string> required_resolvers;    // empty: every non-ISP label seen
  int handshake_repeats = 3;
};

/// A (vantage, website) pair is complete when every required resolver has
/// a usable set in both families. A vantage stays only when each CDN has
/// enough complete websites; CDNs without a threshold need one.
inline CompletenessResult completeness_filter(const std::vector<MeasurementSet>& sets, const CompletenessOptions& opt) {
  std::set<std::string> required(opt.required_resolvers.begin(), opt.required_resolvers.end());
  if (required.empty())
    for (const auto& s : sets)
      if (s.resolver_label != kIspLabel) required.insert(s.resolver_label);

  std::set<std::string> cdns;
  for (const auto& [cdn, _] : opt.thresholds) cdns.insert(cdn);
  std::map<VantageWebsite, std::string> pair_cdn;
  std::map<VantageWebsite, std::set<std::pair<std::string, IpVersion>>> usable;
  std::set<std::string> vantages;
  for (const auto& s : sets) {
    if (!required.count(s.resolver_label)) continue;
    VantageWebsite key{s.vantage_id, s.website};
    vantages.insert(s.vantage_id);
    cdns.insert(s.cdn);
    pair_cdn.emplace(key, s.cdn);
    if (is_usable(s, opt.handshake_repeats)) usable[key].insert({s.resolver_label, s.ip_version});
  }

  CompletenessResult out;
  const std::size_t needed = required.size() * 2;
  for (const auto& [key, cdn] : pair_cdn) {
    if (usable[key].size() != needed) continue;
    out.complete_pairs.insert(key);
    ++out.complete_counts[key.vantage_id][cdn];
  }
  for (const auto& v : vantages) {
    bool ok = true;
    for (const auto& cdn : cdns) {
      auto t = opt.thresholds.find(cdn);
      const std::size_t min = t == opt.thresholds.end() ? 1 : t->second;
      if (out.complete_counts[v][cdn] < min) ok = false;
    }
    (ok ? out.retained_vantages : out.dropped_vantages).insert(v);
  }
  std::erase_if(out.complete_pairs, [&](const auto& p) { return !out.retained_vantages.count(p.vantage_id); });
  for (const auto& s : sets)
    if (required.count(s.resolver_label) && out.complete_pairs.count({s.vantage_id, s.website}) &&
        is_usable(s, opt.handshake_repeats))
      out.retained.push_back(s);
  return out;
}

namespace detail {

/// Runs fn(0..n-1) on up to `fanout` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t fanout, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(fanout, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct FillInReport {
  std::size_t retried = 0;
  std::size_t replaced = 0;
  std::size_t failed_twice = 0;
  std::vector<std::string> warnings;
};

/// One fill-in round: every unusable set not already retried is re-run in
/// full. A usable retry replaces the original wholesale; otherwise the
/// original stays, marked failed-twice.
inline FillInReport fill_in(std::vector<MeasurementSet>& sets, const MeasurementSpec& spec, const ProbeServices& svc,
                            std::size_t fanout = 8) {
  FillInReport rep;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& s = sets[i];
    if (is_usable(s, spec.handshake_repeats) || s.failed_twice || s.attempt > 1) continue;
    if (!spec.resolver(s.resolver_label)) {
      rep.warnings.push_back("no resolver '" + s.resolver_label + "' in spec; " + s.website + " not retried");
      continue;
    }
    todo.push_back(i);
  }
  std::vector<MeasurementSet> retries(todo.size());
  detail::parallel_for(todo.size(), fanout, [&](std::size_t k) {
    const auto& old = sets[todo[k]];
    retries[k] = run_measurement_set(spec, {old.cdn, old.website}, *spec.resolver(old.resolver_label), old.ip_version,
                                     svc, old.vantage_id);
    retries[k].attempt = old.attempt + 1;
  });
  for (std::size_t k = 0; k < todo.size(); ++k) {
    ++rep.retried;
    auto& slot = sets[todo[k]];
    if (is_usable(retries[k], spec.handshake_repeats)) {
      slot = std::move(retries[k]);
      ++rep.replaced;
    } else {
      slot.failed_twice = true;
      ++rep.failed_twice;
    }
  }
  return rep;
}

struct CampaignOptions {
  std::string vantage_id = "local";
  std::size_t fanout = 8;
  std::uint64_t seed = 0;
  bool check_reachability = true;
};

struct CampaignResult {
  std::vector<MeasurementSet> sets;
  std::vector<std::string> dropped_resolvers;
  std::vector<std::string> notices;
};

/// Resolvers that answer at all, in both families. A timeout or network
/// error means the path is blocked; any reply, even an error rcode, counts.
inline std::vector<std::string> unreachable_resolvers(const MeasurementSpec& spec, const ProbeServices& svc) {
  std::vector<std::string> out;
  const std::string probe = spec.websites.empty() ? "example.com" : spec.websites.front().name;
  for (const auto& r : spec.resolvers) {
    for (auto v : {IpVersion::V4, IpVersion::V6}) {
      try {
        svc.resolve(dns::DnsQuestion::to(probe, dns::address_type(v), r.endpoint(v), spec.dns_timeout));
      } catch (const Error&) {
        out.push_back(r.label);
        break;
      }
    }
  }
  return out;
}

/// All (website, resolver, family) sets. Website order is shuffled per
/// resolver from `seed`.
inline CampaignResult run_campaign(MeasurementSpec spec, const ProbeServices& svc, const CampaignOptions& opt = {}) {
  spec.validate();
  CampaignResult out;
  if (opt.check_reachability) {
    out.dropped_resolvers = unreachable_resolvers(spec, svc);
    for (const auto& label : out.dropped_resolvers)
      out.notices.push_back("resolver " + label + " unreachable from this vantage point; excluded from comparison");
    std::erase_if(spec.resolvers, [&](const auto& r) {
      return std::find(out.dropped_resolvers.begin(), out.dropped_resolvers.end(), r.label) !=
             out.dropped_resolvers.end();
    });
  }
  struct Task {
    const Website* site;
    const ResolverSpec* resolver;
    IpVersion version;
  };
  std::vector<Task> tasks;
  std::mt19937_64 rng(opt.seed);
  for (const auto& r : spec.resolvers) {
    std::vector<const Website*> order;
    for (const auto& w : spec.websites) order.push_back(&w);
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto* w : order)
      for (auto v : {IpVersion::V4, IpVersion::V6}) tasks.push_back({w, &r, v});
  }
  out.sets.resize(tasks.size());
  detail::parallel_for(tasks.size(), opt.fanout, [&](std::size_t i) {
    out.sets[i] = run_measurement_set(spec, *tasks[i].site, *tasks[i].resolver, tasks[i].version, svc, opt.vantage_id);
  });
  return out;
}

/// Calls `body(i)` every `interval`, `iterations` times (0: forever), or
/// until `body` returns false.
inline std::size_t run_recurrent(std::chrono::milliseconds interval, std::size_t iterations,
                                 const std::function<bool(std::size_t)>& body,
                                 const std::function<void(std::chrono::milliseconds)>& sleep = ProbeServices{}.sleep) {
  std::size_t i = 0;
  for (; iterations == 0 || i < iterations; ++i) {
    const auto start = std::chrono::steady_clock::now();
    if (!body(i)) return i + 1;
    if (iterations != 0 && i + 1 == iterations) return i + 1;
    auto spent = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (spent < interval) sleep(interval - spent);
  }
  return i;
}

}  // namespace edgelat::campaign

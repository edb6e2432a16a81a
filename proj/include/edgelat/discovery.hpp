#pragma once

// Website selection: walk a popularity-ranked domain list, follow CNAME
// chains, and keep the first dual-stack names that land on a known CDN.

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edgelat/dns/client.hpp"
#include "json.hpp"

namespace edgelat::discovery {

/// CDN identifier -> dot-anchored, lowercase name suffixes.
class CdnCatalog {
 public:
  void add(std::string cdn, std::string suffix) {
    cdn = dns::lowercase(cdn);
    suffix = dns::lowercase(dns::normalize_name(suffix));
    if (suffix.empty() || suffix == ".") throw Error(Errc::InvalidArgument, "empty suffix for " + cdn);
    if (suffix.front() != '.') suffix.insert(suffix.begin(), '.');
    auto [it, inserted] = owner_.emplace(suffix, cdn);
    if (!inserted && it->second != cdn)
      throw Error(Errc::InvalidArgument, "suffix " + suffix + " listed under both " + it->second + " and " + cdn);
    if (inserted) entries_[cdn].push_back(suffix);
  }

  /// One `cdn_name <whitespace> suffix` per line; `#` comments.
  static CdnCatalog parse(std::string_view text) {
    CdnCatalog c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      std::string cdn, suffix, extra;
      if (!(ls >> cdn)) continue;
      if (!(ls >> suffix) || (ls >> extra))
        throw Error(Errc::ParseFailure, "catalog line " + std::to_string(lineno) + ": expected '<cdn> <suffix>'");
      c.add(cdn, suffix);
    }
    return c;
  }

  static CdnCatalog load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::IoFailure, "cannot read catalog '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  /// The CDN whose suffix `name` ends with, if exactly one CDN matches.
  std::optional<std::string> match(std::string_view name) const {
    const std::string n = "." + dns::lowercase(dns::normalize_name(name));
    std::optional<std::string> found;
    for (const auto& [suffix, cdn] : owner_) {
      if (n.size() > suffix.size() && n.ends_with(suffix)) {
        if (found && *found != cdn) return std::nullopt;
        found = cdn;
      }
    }
    return found;
  }

  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }
  std::vector<std::string> cdns() const {
    std::vector<std::string> out;
    for (const auto& [cdn, _] : entries_) out.push_back(cdn);
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
  std::map<std::string, std::string> owner_;
};

/// Queries `name` for A records and returns the CNAME chain from `name` to
/// the terminal name, following owner -> target links in the answer section.
inline std::vector<std::string> follow_cname_chain(const std::string& name, const Endpoint& resolver,
                                                   const dns::ResolveFn& resolve,
                                                   std::chrono::milliseconds timeout = std::chrono::milliseconds{5000},
                                                   std::size_t max_length = 16) {
  auto resp = resolve(dns::DnsQuestion::to(name, dns::RecordType::A, resolver, timeout));
  std::vector<std::string> chain{dns::normalize_name(name)};
  while (true) {
    const dns::ResourceRecord* next = nullptr;
    for (const auto& rr : resp.answers)
      if (rr.type == dns::RecordType::CNAME && dns::names_equal(rr.name, chain.back())) {
        next = &rr;
        break;
      }
    if (!next) return chain;
    const auto& target = std::get<dns::NameData>(next->rdata).name;
    for (const auto& seen : chain)
      if (dns::names_equal(seen, target)) throw Error(Errc::ChainLoop, "CNAME loop at " + target);
    chain.push_back(target);
    if (chain.size() > max_length)
      throw Error(Errc::ChainLoop, "CNAME chain from " + name + " longer than " + std::to_string(max_length));
  }
}

namespace detail {

inline bool istarts_with(std::string_view s, std::size_t at, std::string_view prefix) {
  if (s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (dns::ascii_lower(s[at + i]) != prefix[i]) return false;
  return true;
}

inline bool host_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

}  // namespace detail

/// Hostnames referenced by absolute or protocol-relative URLs in link and
/// resource attributes, deduplicated, in document order.
inline std::vector<std::string> extract_embedded_domains(std::string_view body) {
  static constexpr std::string_view kAttrs[] = {"href", "src", "srcset", "data-src", "action", "poster"};
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i > 0 && !(std::isspace(static_cast<unsigned char>(body[i - 1])) || body[i - 1] == '"' || body[i - 1] == '\''))
      continue;
    for (auto attr : kAttrs) {
      if (!detail::istarts_with(body, i, attr)) continue;
      std::size_t j = i + attr.size();
      while (j < body.size() && std::isspace(static_cast<unsigned char>(body[j]))) ++j;
      if (j >= body.size() || body[j] != '=') continue;
      ++j;
      while (j < body.size() && std::isspace(static_cast<unsigned char>(body[j]))) ++j;
      if (j < body.size() && (body[j] == '"' || body[j] == '\'')) ++j;
      if (detail::istarts_with(body, j, "https://")) j += 8;
      else if (detail::istarts_with(body, j, "http://")) j += 7;
      else if (detail::istarts_with(body, j, "//")) j += 2;
      else continue;
      std::size_t k = j;
      while (k < body.size() && detail::host_char(body[k])) ++k;
      std::string host = dns::lowercase(dns::normalize_name(body.substr(j, k - j)));
      if (host.find('.') == std::string::npos || host.front() == '.') continue;
      if (seen.insert(host).second) out.push_back(host);
      break;
    }
  }
  return out;
}

struct RankedDomain {
  std::size_t rank = 0;
  std::string domain;
};

/// Majestic Million layout: rank in column 1, domain in column 3; a
/// non-numeric first row is taken as the header. Two-column `rank,domain`
/// files are accepted too.
inline std::vector<RankedDomain> parse_ranked_list(std::string_view csv) {
  std::vector<RankedDomain> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() < 2) continue;
    std::size_t rank = 0;
    try {
      std::size_t used = 0;
      rank = std::stoul(cols[0], &used);
      if (used != cols[0].size()) continue;
    } catch (const std::exception&) {
      continue;  // header or junk row
    }
    out.push_back({rank, dns::lowercase(dns::normalize_name(cols.size() >= 3 ? cols[2] : cols[1]))});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

struct ResolverEndpoints {
  std::string label;
  Endpoint v4;
  Endpoint v6;
};

struct DualStackCheck {
  std::string resolver;
  bool a_ok = false;
  bool aaaa_ok = false;
};

struct CandidateSite {
  std::size_t rank = 0;
  std::string site_domain;
  std::string terminal_cname;
  std::string cdn;
  std::vector<DualStackCheck> dual_stack;

  bool dual_stack_ok() const {
    return !dual_stack.empty() &&
           std::all_of(dual_stack.begin(), dual_stack.end(), [](const auto& c) { return c.a_ok && c.aaaa_ok; });
  }
};

using PageFetchFn = std::function<std::optional<std::string>(const std::string& domain)>;

struct ScanOptions {
  dns::ResolveFn resolve = dns::network_resolver();
  PageFetchFn fetch_page;  // empty: embedded domains are not examined
  std::chrono::milliseconds timeout{5000};
  std::size_t max_chain = 16;
  std::size_t fanout = 8;
};

struct ScanResult {
  std::map<std::string, std::vector<CandidateSite>> sites;
  std::vector<std::string> unmet;  // CDNs whose quota was not filled
  std::vector<std::string> warnings;
  bool quota_unmet() const { return !unmet.empty(); }
};

namespace detail {

// All catalog matches for one site, in the order they were encountered,
// each with its dual-stack verdict.
inline std::vector<CandidateSite> evaluate_site(const RankedDomain& site, const CdnCatalog& catalog,
                                                const std::set<std::string>& wanted,
                                                const std::vector<ResolverEndpoints>& resolvers,
                                                const ScanOptions& opt, std::vector<std::string>& warnings) {
  std::vector<std::string> names{site.domain};
  if (opt.fetch_page) {
    if (auto body = opt.fetch_page(site.domain)) {
      for (auto& h : extract_embedded_domains(*body))
        if (!dns::names_equal(h, site.domain)) names.push_back(std::move(h));
    }
  }
  std::vector<CandidateSite> found;
  std::set<std::string> tried;
  for (const auto& name : names) {
    std::vector<std::string> chain;
    try {
      chain = follow_cname_chain(name, resolvers.front().v4, opt.resolve, opt.timeout, opt.max_chain);
    } catch (const Error& e) {
      warnings.push_back(name + ": " + e.what());
      continue;
    }
    for (const auto& link : chain) {
      auto cdn = catalog.match(link);
      if (!cdn || !wanted.count(*cdn)) continue;
      if (!tried.insert(dns::lowercase(link)).second) break;
      CandidateSite c{site.rank, site.domain, link, *cdn, {}};
      for (const auto& r : resolvers) {
        DualStackCheck check{r.label};
        auto has_address = [&](dns::RecordType t, const Endpoint& ep) {
          try {
            auto resp = opt.resolve(dns::DnsQuestion::to(link, t, ep, opt.timeout));
            return resp.rcode == 0 && resp.first_address() != nullptr;
          } catch (const Error&) {
            return false;
          }
        };
        check.a_ok = has_address(dns::RecordType::A, r.v4);
        check.aaaa_ok = has_address(dns::RecordType::AAAA, r.v6);
        c.dual_stack.push_back(check);
      }
      found.push_back(std::move(c));
      break;  // first catalog name along this chain
    }
  }
  return found;
}

}  // namespace detail

/// Walks `list` in rank order and returns, per CDN, up to `quotas[cdn]`
/// sites whose first valid terminal CNAME resolves dual-stack through every
/// resolver. Sites are evaluated concurrently in windows of `fanout`, but
/// accepted strictly by rank.
inline ScanResult scan_domain_list(const std::vector<RankedDomain>& list, const CdnCatalog& catalog,
                                   const std::map<std::string, std::size_t>& quotas,
                                   const std::vector<ResolverEndpoints>& resolvers, const ScanOptions& opt = {}) {
  if (resolvers.empty()) throw Error(Errc::InvalidArgument, "scan needs at least one resolver");
  ScanResult result;
  std::map<std::string, std::size_t> remaining;
  for (const auto& [cdn, q] : quotas)
    if (q > 0) remaining[cdn] = q;

  auto open_cdns = [&] {
    std::set<std::string> s;
    for (const auto& [cdn, left] : remaining)
      if (left > 0) s.insert(cdn);
    return s;
  };

  const std::size_t window = std::max<std::size_t>(1, opt.fanout);
  for (std::size_t start = 0; start < list.size(); start += window) {
    const auto wanted = open_cdns();
    if (wanted.empty()) break;
    const std::size_t end = std::min(list.size(), start + window);
    std::vector<std::vector<std::string>> warn(end - start);
    std::vector<std::future<std::vector<CandidateSite>>> futs;
    for (std::size_t i = start; i < end; ++i)
      futs.push_back(std::async(std::launch::async, [&, i] {
        return detail::evaluate_site(list[i], catalog, wanted, resolvers, opt, warn[i - start]);
      }));
    for (std::size_t i = start; i < end; ++i) {
      auto candidates = futs[i - start].get();
      for (auto& w : warn[i - start]) result.warnings.push_back(std::move(w));
      for (auto& c : candidates) {
        auto it = remaining.find(c.cdn);
        if (it == remaining.end() || it->second == 0 || !c.dual_stack_ok()) continue;
        --it->second;
        result.sites[c.cdn].push_back(std::move(c));
        break;  // one website per site
      }
    }
  }
  for (const auto& [cdn, left] : remaining)
    if (left > 0) {
      result.unmet.push_back(cdn);
      result.warnings.push_back("quota for " + cdn + " unmet: " + std::to_string(left) + " short");
    }
  return result;
}

inline nlohmann::ordered_json to_json(const ScanResult& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [cdn, sites] : r.sites) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : sites) {
      nlohmann::ordered_json checks = nlohmann::ordered_json::array();
      for (const auto& c : s.dual_stack)
        checks.push_back({{"resolver", c.resolver}, {"a", c.a_ok}, {"aaaa", c.aaaa_ok}});
      arr.push_back({{"rank", s.rank}, {"site", s.site_domain}, {"cname", s.terminal_cname}, {"dual_stack", checks}});
    }
    j[cdn] = arr;
  }
  return j;
}

/// (cdn, website) pairs from a document written by `to_json`.
inline std::vector<std::pair<std::string, std::string>> websites_from_json(const nlohmann::json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [cdn, arr] : j.items())
    for (const auto& s : arr) out.emplace_back(cdn, s.at("cname").get<std::string>());
  return out;
}

}  // namespace edgelat::discovery

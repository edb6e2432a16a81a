#pragma once

// Random campaign records covering every optional field and rdata kind.

#include <random>

#include "edgelat/store.hpp"
#include "support/generators.hpp"

namespace edgelat::testing {

inline IpAddress random_address(std::mt19937_64& rng, IpVersion v) {
  if (v == IpVersion::V4) {
    std::array<std::uint8_t, 4> b;
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return IpAddress::v4(b);
  }
  std::array<std::uint8_t, 16> b;
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return IpAddress::v6(b);
}

inline IpVersion random_family(std::mt19937_64& rng) { return rng() % 2 ? IpVersion::V4 : IpVersion::V6; }

inline Timestamp random_timestamp(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> wall(0, 4'000'000'000'000'000);
  return {wall(rng), rng() % 3 == 0 ? 0 : static_cast<std::int64_t>(rng() >> 2)};
}

inline std::string random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(rng() % (max_len + 1), '\0');
  for (auto& c : s) c = static_cast<char>(rng());
  return s;
}

inline dns::ResourceRecord random_rr(std::mt19937_64& rng) {
  dns::ResourceRecord rr;
  rr.name = random_hostname(rng);
  rr.ttl = static_cast<std::uint32_t>(rng());
  rr.rclass = rng() % 10 == 0 ? static_cast<std::uint16_t>(rng()) : dns::kClassIn;
  switch (rng() % 6) {
    case 0: rr.type = dns::RecordType::A; rr.rdata = random_address(rng, IpVersion::V4); break;
    case 1: rr.type = dns::RecordType::AAAA; rr.rdata = random_address(rng, IpVersion::V6); break;
    case 2: rr.type = dns::RecordType::CNAME; rr.rdata = dns::NameData{random_hostname(rng)}; break;
    case 3: {
      rr.type = dns::RecordType::TXT;
      dns::TxtData t;
      for (std::size_t i = rng() % 4; i > 0; --i) t.strings.push_back(rng() % 2 ? random_label(rng) : random_bytes(rng, 40));
      rr.rdata = t;
      break;
    }
    case 4: {
      rr.type = static_cast<dns::RecordType>(100 + rng() % 900);
      auto b = random_bytes(rng, 32);
      rr.rdata = dns::OpaqueData{std::vector<std::uint8_t>(b.begin(), b.end())};
      break;
    }
    default: rr.type = dns::RecordType::NS; rr.rdata = dns::NameData{random_hostname(rng)};
  }
  return rr;
}

inline double random_ms(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 5000.0)(rng); }

inline campaign::MeasurementSpec random_spec(std::mt19937_64& rng) {
  campaign::MeasurementSpec s;
  for (std::size_t i = rng() % 4; i > 0; --i) s.websites.push_back({random_label(rng, 10), random_hostname(rng)});
  for (std::size_t i = 1 + rng() % 3; i > 0; --i)
    s.resolvers.push_back({random_label(rng, 8), Endpoint{random_address(rng, IpVersion::V4), 53},
                           Endpoint{random_address(rng, IpVersion::V6), static_cast<std::uint16_t>(rng())}});
  s.dns_repeats = 2 + static_cast<int>(rng() % 5);
  s.prewarm_gap = std::chrono::milliseconds{static_cast<std::int64_t>(rng() % 100000)};
  s.handshake_repeats = 1 + static_cast<int>(rng() % 5);
  s.handshake_port = static_cast<std::uint16_t>(rng());
  s.dns_timeout = std::chrono::milliseconds{static_cast<std::int64_t>(rng() % 10000)};
  s.handshake_timeout = std::chrono::milliseconds{static_cast<std::int64_t>(rng() % 10000)};
  return s;
}

inline campaign::MeasurementSet random_set(std::mt19937_64& rng) {
  campaign::MeasurementSet s;
  s.vantage_id = rng() % 5 == 0 ? "probe-\xc3\xbc" + std::to_string(rng() % 100) : std::to_string(rng() % 100000);
  s.website = random_hostname(rng);
  s.cdn = random_label(rng, 12);
  s.resolver_label = random_label(rng, 10);
  s.ip_version = random_family(rng);
  for (std::size_t i = rng() % 5; i > 0; --i) {
    DnsResult r;
    r.prewarm = rng() % 4 == 0;
    r.response.question = dns::DnsQuestion::to(random_hostname(rng), random_qtype(rng),
                                               Endpoint{random_address(rng, random_family(rng)), 53},
                                               std::chrono::milliseconds{static_cast<std::int64_t>(rng() % 10000)});
    r.response.question.edns = rng() % 2;
    r.response.rcode = static_cast<int>(rng() % 16);
    for (std::size_t k = rng() % 4; k > 0; --k) r.response.answers.push_back(random_rr(rng));
    r.response.latency_ms = random_ms(rng);
    r.response.sent_at = random_timestamp(rng);
    r.response.truncated_retried = rng() % 7 == 0;
    s.dns_results.push_back(std::move(r));
  }
  for (std::size_t i = rng() % 4; i > 0; --i) {
    HandshakeSample h;
    h.target = {random_address(rng, s.ip_version), static_cast<std::uint16_t>(rng())};
    if (rng() % 5 == 0) h.error = static_cast<HandshakeError>(rng() % 3);
    else h.rtt_ms = random_ms(rng);
    h.started_at = random_timestamp(rng);
    s.handshakes.push_back(h);
  }
  if (rng() % 3)
    s.edge = EdgeAssignment{s.website, s.resolver_label, s.ip_version, random_address(rng, s.ip_version),
                            static_cast<std::size_t>(rng() % 4)};
  s.created_at = random_timestamp(rng);
  s.attempt = 1 + static_cast<int>(rng() % 2);
  s.failed_twice = rng() % 6 == 0;
  return s;
}

inline store::CampaignRecord random_record(std::mt19937_64& rng) {
  store::CampaignRecord r;
  r.campaign_id = "2022-0" + std::to_string(1 + rng() % 9) + "-01T000000Z";
  r.provenance = rng() % 2 ? store::Provenance::Native : store::Provenance::AtlasImport;
  r.spec = random_spec(rng);
  r.set = random_set(rng);
  return r;
}

}  // namespace edgelat::testing

#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "edgelat/dns/client.hpp"
#include "edgelat/stats.hpp"

namespace edgelat {

/// The edge server a resolver steered this vantage point to.
struct EdgeAssignment {
  std::string website;
  std::string resolver_label;
  IpVersion ip_version = IpVersion::V4;
  IpAddress address;
  std::size_t source_response = 0;  // index into the set's DNS results

  friend bool operator==(const EdgeAssignment&, const EdgeAssignment&) = default;
};

enum class HandshakeError { Timeout, Refused, Unreachable };

inline std::string to_string(HandshakeError e) {
  switch (e) {
    case HandshakeError::Timeout: return "timeout";
    case HandshakeError::Refused: return "refused";
    case HandshakeError::Unreachable: return "unreachable";
  }
  return "unreachable";
}

inline std::optional<HandshakeError> parse_handshake_error(std::string_view s) {
  if (s == "timeout") return HandshakeError::Timeout;
  if (s == "refused") return HandshakeError::Refused;
  if (s == "unreachable") return HandshakeError::Unreachable;
  return std::nullopt;
}

struct HandshakeSample {
  Endpoint target{IpAddress{}, 443};
  std::optional<double> rtt_ms;  // present iff the connection was established
  std::optional<HandshakeError> error;
  Timestamp started_at;

  bool success() const { return rtt_ms.has_value(); }

  friend bool operator==(const HandshakeSample&, const HandshakeSample&) = default;
};

/// One DNS result within a measurement set, with its role in the protocol.
struct DnsResult {
  dns::TimedDnsResponse response;
  bool prewarm = false;

  friend bool operator==(const DnsResult&, const DnsResult&) = default;
};

/// Picks the first address record (wire order) of the earliest non-prewarm
/// response that has one. Storage order of `results` does not matter.
inline EdgeAssignment select_edge(const std::vector<DnsResult>& results, IpVersion version,
                                  const std::string& website = {}, const std::string& resolver_label = {}) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < results.size(); ++i)
    if (!results[i].prewarm) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return earlier(results[a].response.sent_at, results[b].response.sent_at);
  });
  const auto want = dns::address_type(version);
  for (std::size_t idx : order) {
    for (const auto& rr : results[idx].response.answers) {
      const auto* addr = rr.address();
      if (rr.type == want && addr && addr->version() == version)
        return {website, resolver_label, version, *addr, idx};
    }
  }
  throw Error(Errc::NoAddress, "no non-prewarm response carries an " + dns::to_string(want) + " record");
}

/// Times a TCP connect on the monotonic clock, from connect() to completion
/// (a stand-in for SYN -> SYN/ACK), then closes. Failures are folded into
/// the sample.
inline HandshakeSample measure_handshake(const Endpoint& target, std::chrono::milliseconds timeout) {
  using Clock = std::chrono::steady_clock;
  HandshakeSample s;
  s.target = target;
  s.started_at = Timestamp::now();
  int fd = ::socket(target.address.is_v4() ? AF_INET : AF_INET6, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd < 0) {
    s.error = HandshakeError::Unreachable;
    return s;
  }
  dns::detail::Socket guard(fd);
  linger lg{1, 0};  // close with RST, leave no TIME_WAIT behind
  ::setsockopt(fd, SOL_SOCKET, SO_LINGER, &lg, sizeof lg);
  socklen_t len = 0;
  auto sa = to_sockaddr(target, len);

  const auto start = Clock::now();
  const auto deadline = start + timeout;
  auto classify = [](int err) {
    if (err == ECONNREFUSED) return HandshakeError::Refused;
    if (err == ETIMEDOUT) return HandshakeError::Timeout;
    return HandshakeError::Unreachable;
  };
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), len) != 0) {
    if (errno != EINPROGRESS) {
      s.error = classify(errno);
      return s;
    }
    if (!dns::detail::wait_for(fd, POLLOUT, deadline)) {
      s.error = HandshakeError::Timeout;
      return s;
    }
  }
  const auto done = Clock::now();
  int err = 0;
  socklen_t elen = sizeof err;
  ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
  if (err != 0) {
    s.error = classify(err);
    return s;
  }
  s.rtt_ms = elapsed_ms(start, done);
  return s;
}

/// Median RTT of the successful samples.
inline double mapping_latency(const std::vector<HandshakeSample>& samples) {
  std::vector<double> rtts;
  for (const auto& s : samples)
    if (s.rtt_ms) rtts.push_back(*s.rtt_ms);
  if (rtts.empty()) throw Error(Errc::NoSuccess, "no successful handshake sample");
  return stats::median(std::move(rtts));
}

}  // namespace edgelat

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <mutex>
#include <random>
#include <vector>

#include "edgelat/clock.hpp"
#include "edgelat/dns/wire.hpp"

namespace edgelat::dns {

struct TimedDnsResponse {
  DnsQuestion question;
  int rcode = 0;
  std::vector<ResourceRecord> answers;
  double latency_ms = 0.0;
  Timestamp sent_at;
  bool truncated_retried = false;

  friend bool operator==(const TimedDnsResponse&, const TimedDnsResponse&) = default;

  /// First address record of the family the question asked for, in wire order.
  const IpAddress* first_address() const {
    for (const auto& rr : answers)
      if (rr.type == question.qtype) {
        if (const auto* a = rr.address()) return a;
      }
    return nullptr;
  }
  const ResourceRecord* first_address_record() const {
    for (const auto& rr : answers)
      if (rr.type == question.qtype && rr.address()) return &rr;
    return nullptr;
  }
};

/// Process-wide transaction-id generator. Seeded from the OS unless
/// `seed()` is called.
class TxidSource {
 public:
  static TxidSource& instance() {
    static TxidSource s;
    return s;
  }
  void seed(std::uint64_t value) {
    std::lock_guard lock(mu_);
    rng_.seed(value);
  }
  std::uint16_t next() {
    std::lock_guard lock(mu_);
    return static_cast<std::uint16_t>(rng_() & 0xFFFF);
  }

 private:
  TxidSource() : rng_(std::random_device{}()) {}
  std::mutex mu_;
  std::mt19937_64 rng_;
};

namespace detail {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
};

inline Errc errno_to_errc(int err) {
  switch (err) {
    case ETIMEDOUT: return Errc::Timeout;
    default: return Errc::NetworkUnreachable;
  }
}

inline Socket open_socket(const Endpoint& ep, int type) {
  int fd = ::socket(ep.address.is_v4() ? AF_INET : AF_INET6, type | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
  if (fd < 0) throw Error(Errc::NetworkUnreachable, std::string("socket: ") + std::strerror(errno));
  return Socket(fd);
}

using Clock = std::chrono::steady_clock;

/// Waits for `events` on `fd` until `deadline`. Returns false on timeout.
inline bool wait_for(int fd, short events, Clock::time_point deadline) {
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left < 0) left = 0;
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, static_cast<int>(left));
    if (rc > 0) return true;
    if (rc == 0) {
      if (Clock::now() >= deadline) return false;
      continue;
    }
    if (errno != EINTR) throw Error(Errc::NetworkUnreachable, std::string("poll: ") + std::strerror(errno));
  }
}

inline bool answers_question(const DecodedMessage& msg, std::uint16_t txid, const DnsQuestion& q) {
  if (msg.id != txid || !msg.flags.qr) return false;
  if (msg.questions.empty()) return true;  // some servers omit the echo on errors
  const auto& echo = msg.questions.front();
  return echo.type == q.qtype && names_equal(echo.name, q.qname);
}

inline void connect_with_deadline(const Socket& s, const Endpoint& ep, Clock::time_point deadline) {
  socklen_t len = 0;
  auto sa = to_sockaddr(ep, len);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), len) == 0) return;
  if (errno != EINPROGRESS) throw Error(errno_to_errc(errno), std::string("connect: ") + std::strerror(errno));
  if (!wait_for(s.fd(), POLLOUT, deadline)) throw Error(Errc::Timeout, "TCP connect to " + ep.address.to_string());
  int err = 0;
  socklen_t elen = sizeof err;
  ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &elen);
  if (err != 0) throw Error(errno_to_errc(err), std::string("connect: ") + std::strerror(err));
}

inline void read_exact(const Socket& s, std::uint8_t* buf, std::size_t n, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    if (!wait_for(s.fd(), POLLIN, deadline)) throw Error(Errc::Timeout, "TCP read");
    ssize_t r = ::recv(s.fd(), buf + got, n - got, 0);
    if (r == 0) throw Error(Errc::Malformed, "TCP stream closed mid-message");
    if (r < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw Error(Errc::NetworkUnreachable, std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
}

inline void write_all(const Socket& s, const std::vector<std::uint8_t>& data, Clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t r = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EAGAIN || errno == EINTR) {
        if (!wait_for(s.fd(), POLLOUT, deadline)) throw Error(Errc::Timeout, "TCP write");
        continue;
      }
      throw Error(Errc::NetworkUnreachable, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(r);
  }
}

inline DecodedMessage tcp_exchange(const DnsQuestion& q, std::uint16_t txid, Clock::time_point deadline) {
  auto s = open_socket(q.resolver, SOCK_STREAM);
  connect_with_deadline(s, q.resolver, deadline);
  auto query = encode_query(q, txid, q.edns);
  std::vector<std::uint8_t> framed;
  framed.reserve(query.size() + 2);
  dns::detail::put16(framed, static_cast<std::uint16_t>(query.size()));
  framed.insert(framed.end(), query.begin(), query.end());
  write_all(s, framed, deadline);
  while (true) {
    std::uint8_t lenbuf[2];
    read_exact(s, lenbuf, 2, deadline);
    std::vector<std::uint8_t> body(static_cast<std::size_t>((lenbuf[0] << 8) | lenbuf[1]));
    read_exact(s, body.data(), body.size(), deadline);
    auto msg = decode_response(body);
    if (answers_question(msg, txid, q)) return msg;
  }
}

}  // namespace detail

/// Rejects questions that cannot be sent: bad names, or a transport family
/// that disagrees with the resolver address.
inline void validate(const DnsQuestion& q) {
  if (q.transport != q.resolver.address.version())
    throw Error(Errc::AddressFamilyMismatch, "question for " + std::string(to_string(q.transport)) +
                                                 " transport addressed to " + q.resolver.address.to_string());
  validate_name(q.qname);
}

/// Sends one query over UDP and times it on the monotonic clock. A truncated
/// reply triggers one TCP retry of the same question; the reported latency
/// then spans both attempts. No retransmission happens within a call.
inline TimedDnsResponse resolve_once(const DnsQuestion& q) {
  validate(q);
  using detail::Clock;
  const std::uint16_t txid = TxidSource::instance().next();
  auto query = encode_query(q, txid, q.edns);

  auto sock = detail::open_socket(q.resolver, SOCK_DGRAM);
  socklen_t len = 0;
  auto sa = to_sockaddr(q.resolver, len);
  if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&sa), len) != 0)
    throw Error(Errc::NetworkUnreachable, "connect " + q.resolver.address.to_string() + ": " + std::strerror(errno));

  TimedDnsResponse out;
  out.question = q;
  out.sent_at = Timestamp::now();
  const auto start = Clock::now();
  const auto deadline = start + q.timeout;
  if (::send(sock.fd(), query.data(), query.size(), 0) < 0)
    throw Error(Errc::NetworkUnreachable, "send to " + q.resolver.address.to_string() + ": " + std::strerror(errno));

  std::vector<std::uint8_t> buf(65535);
  while (true) {
    if (!detail::wait_for(sock.fd(), POLLIN, deadline))
      throw Error(Errc::Timeout, "no reply from " + q.resolver.address.to_string() + " within " +
                                     std::to_string(q.timeout.count()) + " ms");
    ssize_t n = ::recv(sock.fd(), buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw Error(Errc::NetworkUnreachable, "recv from " + q.resolver.address.to_string() + ": " + std::strerror(errno));
    }
    auto bytes = std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n));
    if (bytes.size() < 2 || dns::detail::get16(bytes, 0) != txid) continue;  // stray or spoofed
    auto msg = decode_response(bytes);
    if (!detail::answers_question(msg, txid, q)) continue;
    if (msg.flags.tc) {
      msg = detail::tcp_exchange(q, txid, deadline);
      out.truncated_retried = true;
    }
    out.latency_ms = elapsed_ms(start, Clock::now());
    out.rcode = msg.rcode;
    out.answers = std::move(msg.answers);
    return out;
  }
}

/// Anything that can answer a question the way `resolve_once` does. Higher
/// layers take one of these so they can run against in-process fakes.
using ResolveFn = std::function<TimedDnsResponse(const DnsQuestion&)>;

inline ResolveFn network_resolver() { return [](const DnsQuestion& q) { return resolve_once(q); }; }

}  // namespace edgelat::dns

#pragma once

// Userspace TCP "edge server" on a TUN interface. Answers every SYN sent to
// one of its addresses with a SYN/ACK after a fixed delay, so a kernel
// connect() observes a handshake RTT of exactly that delay plus stack
// overhead. Addresses marked as blackholed never answer.
//
// Needs CAP_NET_ADMIN and /dev/net/tun; `available()` reports whether the
// interface could be brought up.

#include <arpa/inet.h>
#include <fcntl.h>
#include <linux/if.h>
#include <linux/if_tun.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/ioctl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <mutex>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "edgelat/ip.hpp"

namespace edgelat::testing {

class TunResponder {
 public:
  /// Interface `name` gets 10.<octet>.0.1/24 and fd00:<octet>::1/64; edge
  /// hosts live at .2 and above.
  TunResponder(std::string name, int octet, std::chrono::milliseconds delay)
      : name_(std::move(name)), octet_(octet), delay_(delay) {
    if (!setup()) {
      teardown();
      return;
    }
    ok_ = true;
    loop_ = std::thread([this] { run(); });
  }

  ~TunResponder() {
    stop_ = true;
    if (loop_.joinable()) loop_.join();
    teardown();
  }

  TunResponder(const TunResponder&) = delete;
  TunResponder& operator=(const TunResponder&) = delete;

  bool available() const { return ok_; }
  const std::string& error() const { return error_; }

  IpAddress edge_v4(int host) const {
    return IpAddress::v4({10, static_cast<std::uint8_t>(octet_), 0, static_cast<std::uint8_t>(host)});
  }
  IpAddress edge_v6(int host) const {
    std::array<std::uint8_t, 16> b{};
    b[0] = 0xfd;
    b[1] = 0x00;
    b[2] = 0x00;
    b[3] = static_cast<std::uint8_t>(octet_);
    b[15] = static_cast<std::uint8_t>(host);
    return IpAddress::v6(b);
  }

  void blackhole(const IpAddress& a) {
    std::lock_guard lock(mu_);
    blackholed_.insert(a);
  }
  std::size_t syns_seen() const { return syns_.load(); }

 private:
  struct Pending {
    std::chrono::steady_clock::time_point due;
    std::vector<std::uint8_t> packet;
    bool operator>(const Pending& o) const { return due > o.due; }
  };

  bool fail(const std::string& what) {
    error_ = what + ": " + std::strerror(errno);
    return false;
  }

  bool setup() {
    fd_ = ::open("/dev/net/tun", O_RDWR | O_CLOEXEC);
    if (fd_ < 0) return fail("open /dev/net/tun");
    ifreq ifr{};
    ifr.ifr_flags = IFF_TUN | IFF_NO_PI;
    std::strncpy(ifr.ifr_name, name_.c_str(), IFNAMSIZ - 1);
    if (::ioctl(fd_, TUNSETIFF, &ifr) < 0) return fail("TUNSETIFF");

    int s4 = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (s4 < 0) return fail("socket");
    auto set_v4 = [&](unsigned long req, std::array<std::uint8_t, 4> addr) {
      ifreq r{};
      std::strncpy(r.ifr_name, name_.c_str(), IFNAMSIZ - 1);
      auto* sa = reinterpret_cast<sockaddr_in*>(&r.ifr_addr);
      sa->sin_family = AF_INET;
      std::memcpy(&sa->sin_addr, addr.data(), 4);
      return ::ioctl(s4, req, &r) == 0;
    };
    bool ok = set_v4(SIOCSIFADDR, {10, static_cast<std::uint8_t>(octet_), 0, 1}) &&
              set_v4(SIOCSIFNETMASK, {255, 255, 255, 0});
    if (!ok) {
      ::close(s4);
      return fail("assign IPv4 address");
    }
    {
      std::ofstream dad("/proc/sys/net/ipv6/conf/" + name_ + "/accept_dad");
      if (dad) dad << "0";
    }
    ifreq up{};
    std::strncpy(up.ifr_name, name_.c_str(), IFNAMSIZ - 1);
    up.ifr_flags = IFF_UP | IFF_RUNNING;
    if (::ioctl(s4, SIOCSIFFLAGS, &up) < 0) {
      ::close(s4);
      return fail("bring interface up");
    }
    ifreq idx{};
    std::strncpy(idx.ifr_name, name_.c_str(), IFNAMSIZ - 1);
    ::ioctl(s4, SIOCGIFINDEX, &idx);
    ::close(s4);

    int s6 = ::socket(AF_INET6, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (s6 < 0) return fail("socket6");
    struct {
      in6_addr addr;
      std::uint32_t prefixlen;
      int ifindex;
    } req6{};
    auto local6 = edge_v6(1);
    std::memcpy(&req6.addr, local6.data(), 16);
    req6.prefixlen = 64;
    req6.ifindex = idx.ifr_ifindex;
    bool ok6 = ::ioctl(s6, SIOCSIFADDR, &req6) == 0;
    ::close(s6);
    if (!ok6) return fail("assign IPv6 address");
    return true;
  }

  void teardown() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  static std::uint32_t sum16(const std::uint8_t* p, std::size_t n, std::uint32_t acc = 0) {
    for (std::size_t i = 0; i + 1 < n; i += 2) acc += static_cast<std::uint32_t>((p[i] << 8) | p[i + 1]);
    if (n & 1) acc += static_cast<std::uint32_t>(p[n - 1] << 8);
    return acc;
  }
  static std::uint16_t fold(std::uint32_t acc) {
    while (acc >> 16) acc = (acc & 0xFFFF) + (acc >> 16);
    return static_cast<std::uint16_t>(~acc & 0xFFFF);
  }

  // Builds a bare TCP segment (20-byte header) answering `in_tcp`.
  static std::vector<std::uint8_t> tcp_reply(const std::uint8_t* in_tcp, std::uint8_t flags, std::uint32_t seq,
                                             std::uint32_t ack) {
    std::vector<std::uint8_t> t(20, 0);
    std::memcpy(&t[0], in_tcp + 2, 2);  // swap ports
    std::memcpy(&t[2], in_tcp + 0, 2);
    auto put32 = [&](std::size_t at, std::uint32_t v) {
      t[at] = static_cast<std::uint8_t>(v >> 24);
      t[at + 1] = static_cast<std::uint8_t>(v >> 16);
      t[at + 2] = static_cast<std::uint8_t>(v >> 8);
      t[at + 3] = static_cast<std::uint8_t>(v);
    };
    put32(4, seq);
    put32(8, ack);
    t[12] = 5 << 4;
    t[13] = flags;
    t[14] = 0xFF;
    t[15] = 0xFF;
    return t;
  }

  std::vector<std::uint8_t> respond(const std::uint8_t* pkt, std::size_t n) {
    if (n < 1) return {};
    const int ver = pkt[0] >> 4;
    std::size_t ihl = 0;
    IpAddress dst;
    if (ver == 4) {
      if (n < 20 || pkt[9] != IPPROTO_TCP) return {};
      ihl = static_cast<std::size_t>(pkt[0] & 0x0F) * 4;
      dst = IpAddress::v4({pkt[16], pkt[17], pkt[18], pkt[19]});
    } else if (ver == 6) {
      if (n < 40 || pkt[6] != IPPROTO_TCP) return {};
      ihl = 40;
      std::array<std::uint8_t, 16> b{};
      std::memcpy(b.data(), pkt + 24, 16);
      dst = IpAddress::v6(b);
    } else {
      return {};
    }
    if (n < ihl + 20) return {};
    const std::uint8_t* tcp = pkt + ihl;
    const std::uint8_t flags = tcp[13];
    const std::uint32_t seq =
        (static_cast<std::uint32_t>(tcp[4]) << 24) | (tcp[5] << 16) | (tcp[6] << 8) | static_cast<std::uint32_t>(tcp[7]);
    const std::uint32_t ack =
        (static_cast<std::uint32_t>(tcp[8]) << 24) | (tcp[9] << 16) | (tcp[10] << 8) | static_cast<std::uint32_t>(tcp[11]);
    constexpr std::uint8_t FIN = 0x01, SYN = 0x02, RST = 0x04, ACK = 0x10;
    {
      std::lock_guard lock(mu_);
      if (blackholed_.count(dst)) return {};
    }
    std::vector<std::uint8_t> seg;
    if ((flags & SYN) && !(flags & ACK)) {
      ++syns_;
      seg = tcp_reply(tcp, SYN | ACK, 0x10000000u, seq + 1);
    } else if (flags & FIN) {
      seg = tcp_reply(tcp, RST, ack, 0);
    } else {
      return {};
    }

    std::vector<std::uint8_t> out;
    if (ver == 4) {
      out.assign(20, 0);
      out[0] = 0x45;
      const auto total = static_cast<std::uint16_t>(20 + seg.size());
      out[2] = static_cast<std::uint8_t>(total >> 8);
      out[3] = static_cast<std::uint8_t>(total);
      out[8] = 64;
      out[9] = IPPROTO_TCP;
      std::memcpy(&out[12], pkt + 16, 4);
      std::memcpy(&out[16], pkt + 12, 4);
      auto hc = fold(sum16(out.data(), 20));
      out[10] = static_cast<std::uint8_t>(hc >> 8);
      out[11] = static_cast<std::uint8_t>(hc);
      std::uint32_t acc = sum16(&out[12], 8);
      acc += IPPROTO_TCP + static_cast<std::uint32_t>(seg.size());
      auto tc = fold(sum16(seg.data(), seg.size(), acc));
      seg[16] = static_cast<std::uint8_t>(tc >> 8);
      seg[17] = static_cast<std::uint8_t>(tc);
    } else {
      out.assign(40, 0);
      out[0] = 0x60;
      out[4] = static_cast<std::uint8_t>(seg.size() >> 8);
      out[5] = static_cast<std::uint8_t>(seg.size());
      out[6] = IPPROTO_TCP;
      out[7] = 64;
      std::memcpy(&out[8], pkt + 24, 16);
      std::memcpy(&out[24], pkt + 8, 16);
      std::uint32_t acc = sum16(&out[8], 32);
      acc += IPPROTO_TCP + static_cast<std::uint32_t>(seg.size());
      auto tc = fold(sum16(seg.data(), seg.size(), acc));
      seg[16] = static_cast<std::uint8_t>(tc >> 8);
      seg[17] = static_cast<std::uint8_t>(tc);
    }
    out.insert(out.end(), seg.begin(), seg.end());
    if (flags & SYN) return out;
    // RSTs for stray FINs go out immediately.
    [[maybe_unused]] auto w = ::write(fd_, out.data(), out.size());
    return {};
  }

  void run() {
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> due;
    std::vector<std::uint8_t> buf(65536);
    while (!stop_) {
      auto now = std::chrono::steady_clock::now();
      while (!due.empty() && due.top().due <= now) {
        const auto& p = due.top().packet;
        [[maybe_unused]] auto w = ::write(fd_, p.data(), p.size());
        due.pop();
      }
      int wait_ms = 5;
      if (!due.empty()) {
        auto left = std::chrono::duration_cast<std::chrono::microseconds>(due.top().due - now).count();
        wait_ms = static_cast<int>(std::clamp<long long>(left / 1000, 0, 5));
      }
      pollfd pf{fd_, POLLIN, 0};
      if (::poll(&pf, 1, wait_ms) <= 0) continue;
      ssize_t n = ::read(fd_, buf.data(), buf.size());
      if (n <= 0) continue;
      auto reply = respond(buf.data(), static_cast<std::size_t>(n));
      if (!reply.empty()) due.push({std::chrono::steady_clock::now() + delay_, std::move(reply)});
    }
  }

  std::string name_;
  int octet_;
  std::chrono::milliseconds delay_;
  int fd_ = -1;
  bool ok_ = false;
  std::string error_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> syns_{0};
  std::mutex mu_;
  std::set<IpAddress> blackholed_;
  std::thread loop_;
};

}  // namespace edgelat::testing

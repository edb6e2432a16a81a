#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

#include "edgelat/error.hpp"

namespace edgelat {

enum class IpVersion : std::uint8_t { V4, V6 };

constexpr std::string_view to_string(IpVersion v) noexcept { return v == IpVersion::V4 ? "v4" : "v6"; }

inline std::optional<IpVersion> parse_ip_version(std::string_view s) {
  if (s == "v4" || s == "V4" || s == "4" || s == "ipv4") return IpVersion::V4;
  if (s == "v6" || s == "V6" || s == "6" || s == "ipv6") return IpVersion::V6;
  return std::nullopt;
}

/// An IPv4 or IPv6 address held in network byte order.
class IpAddress {
 public:
  IpAddress() = default;

  static IpAddress v4(std::array<std::uint8_t, 4> octets) {
    IpAddress a;
    a.version_ = IpVersion::V4;
    std::copy(octets.begin(), octets.end(), a.bytes_.begin());
    return a;
  }

  static IpAddress v6(const std::array<std::uint8_t, 16>& bytes) {
    IpAddress a;
    a.version_ = IpVersion::V6;
    a.bytes_ = bytes;
    return a;
  }

  static std::optional<IpAddress> try_parse(std::string_view text) {
    std::string s(text);
    if (auto pct = s.find('%'); pct != std::string::npos) s.resize(pct);  // drop v6 zone id
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    IpAddress a;
    in_addr v4{};
    if (inet_pton(AF_INET, s.c_str(), &v4) == 1) {
      a.version_ = IpVersion::V4;
      std::memcpy(a.bytes_.data(), &v4, 4);
      return a;
    }
    in6_addr v6{};
    if (inet_pton(AF_INET6, s.c_str(), &v6) == 1) {
      a.version_ = IpVersion::V6;
      std::memcpy(a.bytes_.data(), &v6, 16);
      return a;
    }
    return std::nullopt;
  }

  static IpAddress parse(std::string_view text) {
    auto a = try_parse(text);
    if (!a) throw Error(Errc::InvalidArgument, "not an IP address: '" + std::string(text) + "'");
    return *a;
  }

  IpVersion version() const noexcept { return version_; }
  bool is_v4() const noexcept { return version_ == IpVersion::V4; }
  std::size_t size() const noexcept { return is_v4() ? 4 : 16; }
  const std::uint8_t* data() const noexcept { return bytes_.data(); }
  std::uint8_t operator[](std::size_t i) const noexcept { return bytes_[i]; }

  std::string to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(is_v4() ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
    return buf;
  }

  /// RFC 1918, ULA, link-local, and loopback ranges.
  bool is_private() const noexcept {
    const auto& b = bytes_;
    if (is_v4()) {
      return b[0] == 10 || (b[0] == 172 && (b[1] & 0xF0) == 16) || (b[0] == 192 && b[1] == 168) ||
             (b[0] == 169 && b[1] == 254) || b[0] == 127;
    }
    bool loopback = b[15] == 1;
    for (int i = 0; i < 15 && loopback; ++i) loopback = b[i] == 0;
    return (b[0] & 0xFE) == 0xFC || (b[0] == 0xFE && (b[1] & 0xC0) == 0x80) || loopback;
  }

  /// True when the first `prefix_len` bits equal those of `network`.
  bool in_prefix(const IpAddress& network, int prefix_len) const noexcept {
    if (network.version_ != version_ || prefix_len < 0 || prefix_len > static_cast<int>(size()) * 8) return false;
    int full = prefix_len / 8;
    if (std::memcmp(bytes_.data(), network.bytes_.data(), full) != 0) return false;
    int rest = prefix_len % 8;
    if (rest == 0) return true;
    std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - rest));
    return (bytes_[full] & mask) == (network.bytes_[full] & mask);
  }

  friend bool operator==(const IpAddress&, const IpAddress&) = default;
  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

 private:
  IpVersion version_ = IpVersion::V4;
  std::array<std::uint8_t, 16> bytes_{};
};

struct Endpoint {
  IpAddress address;
  std::uint16_t port = 53;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

inline sockaddr_storage to_sockaddr(const Endpoint& ep, socklen_t& len) {
  sockaddr_storage ss{};
  if (ep.address.is_v4()) {
    auto* sa = reinterpret_cast<sockaddr_in*>(&ss);
    sa->sin_family = AF_INET;
    sa->sin_port = htons(ep.port);
    std::memcpy(&sa->sin_addr, ep.address.data(), 4);
    len = sizeof(sockaddr_in);
  } else {
    auto* sa = reinterpret_cast<sockaddr_in6*>(&ss);
    sa->sin6_family = AF_INET6;
    sa->sin6_port = htons(ep.port);
    std::memcpy(&sa->sin6_addr, ep.address.data(), 16);
    len = sizeof(sockaddr_in6);
  }
  return ss;
}

}  // namespace edgelat

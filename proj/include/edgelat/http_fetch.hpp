#pragma once

// Single bounded fetch of a site's root document.

#ifdef EDGELAT_WITH_HTTPS
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#endif
#include "httplib.h"

#include <optional>
#include <string>

namespace edgelat::http {

inline constexpr std::size_t kMaxBodyBytes = 1 << 20;

struct FetchOptions {
  std::chrono::milliseconds timeout{5000};
  std::size_t max_body = kMaxBodyBytes;
  int port = 0;  // 0: scheme default
};

namespace detail {

template <class C>
std::optional<std::string> get_root(C& cli, const FetchOptions& opt) {
  const auto secs = static_cast<time_t>(opt.timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((opt.timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_follow_location(true);
  std::string body;
  bool capped = false;
  auto res = cli.Get("/", [&](const char* data, std::size_t len) {
    const std::size_t room = opt.max_body - body.size();
    body.append(data, std::min(room, len));
    if (len >= room) {
      capped = true;
      return false;
    }
    return true;
  });
  if (capped) return body;
  if (!res || res->status >= 400) return std::nullopt;
  return body;
}

}  // namespace detail

/// Root document of `domain`, HTTPS first when built with TLS support, then
/// plain HTTP. Bodies beyond `max_body` are cut.
inline std::optional<std::string> fetch_root(const std::string& domain, const FetchOptions& opt = {}) {
  try {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    {
      httplib::SSLClient cli(domain, opt.port ? opt.port : 443);
      if (auto b = detail::get_root(cli, opt)) return b;
    }
#endif
    httplib::Client cli(domain, opt.port ? opt.port : 80);
    return detail::get_root(cli, opt);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace edgelat::http

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <ctime>
#include <string>

namespace edgelat {

/// A reading of both clocks at one instant. Ordering within a process uses
/// the monotonic component; imported data only carries wall time, in which
/// case `mono_ns` is zero and ordering falls back to wall time.
struct Timestamp {
  std::int64_t wall_us = 0;
  std::int64_t mono_ns = 0;

  static Timestamp now() {
    using namespace std::chrono;
    return {duration_cast<microseconds>(system_clock::now().time_since_epoch()).count(),
            duration_cast<nanoseconds>(steady_clock::now().time_since_epoch()).count()};
  }

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

inline bool earlier(const Timestamp& a, const Timestamp& b) noexcept {
  if (a.mono_ns != 0 && b.mono_ns != 0) return a.mono_ns < b.mono_ns;
  return a.wall_us < b.wall_us;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point from, std::chrono::steady_clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

/// `YYYY-MM-DDTHHMMSSZ`, the prefix used for campaign directory names.
inline std::string utc_stamp(std::int64_t wall_us) {
  std::time_t secs = static_cast<std::time_t>(wall_us / 1'000'000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace edgelat

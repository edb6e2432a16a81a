#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "edgelat/error.hpp"

namespace edgelat::stats {

/// Median; even-length input gives the mean of the two middle values.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "median of an empty sample");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "mean of an empty sample");
  double s = 0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

struct CdfPoint {
  double value;
  double fraction;  // share of the sample <= value
  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Empirical CDF evaluated at each distinct sample value.
inline std::vector<CdfPoint> ecdf(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptyInput, "ECDF of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<CdfPoint> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  out.back().fraction = 1.0;
  return out;
}

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
};

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
/// Summation stops once a term drops below 1e-12; if that never happens
/// (lambda near zero) the value is taken at its upper saturation of 1.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr int kMaxTerms = 100000;
  const double a2 = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= kMaxTerms; ++k) {
    const double term = 2.0 * std::exp(a2 * k * k);
    sum += sign * term;
    if (term < 1e-12) return std::clamp(sum, 0.0, 1.0);
    sign = -sign;
  }
  return 1.0;
}

namespace detail {

// Sup-distance between the ECDFs of two sorted samples, exact under ties.
inline double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace detail

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptyInput, "K-S test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return detail::ks_distance_sorted(a, b);
}

/// Two-sample K-S test with the asymptotic p-value and the usual
/// small-sample correction lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  KsResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  r.d_statistic = ks_distance(std::move(a), std::move(b));
  const double ne = static_cast<double>(r.n1) * static_cast<double>(r.n2) / static_cast<double>(r.n1 + r.n2);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * r.d_statistic);
  return r;
}

inline constexpr std::size_t kExactKsMaxPerSample = 12;

/// Exact permutation p-value: the share of all relabelings of the pooled
/// sample whose D is at least the observed one. Limited to 12 per sample.
inline KsResult ks_two_sample_exact(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptyInput, "K-S test needs two non-empty samples");
  if (a.size() > kExactKsMaxPerSample || b.size() > kExactKsMaxPerSample)
    throw Error(Errc::InvalidArgument, "exact K-S limited to 12 observations per sample");
  KsResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  r.exact = true;
  r.d_statistic = ks_distance(a, b);

  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const unsigned total = static_cast<unsigned>(pooled.size());
  const unsigned k = static_cast<unsigned>(r.n1);
  std::vector<double> xa, xb;
  xa.reserve(r.n1);
  xb.reserve(r.n2);
  std::uint64_t hits = 0, count = 0;
  const std::uint32_t limit = 1u << total;
  for (std::uint32_t mask = (1u << k) - 1; mask < limit;) {
    xa.clear();
    xb.clear();
    for (unsigned i = 0; i < total; ++i) ((mask >> i) & 1u ? xa : xb).push_back(pooled[i]);
    if (detail::ks_distance_sorted(xa, xb) >= r.d_statistic - 1e-12) ++hits;
    ++count;
    const std::uint32_t c = mask & (~mask + 1);  // next combination (Gosper)
    const std::uint32_t rr = mask + c;
    mask = (((rr ^ mask) >> 2) / c) | rr;
  }
  r.p_value = static_cast<double>(hits) / static_cast<double>(count);
  return r;
}

}  // namespace edgelat::stats

#include <catch_amalgamated.hpp>

#include <random>

#include "edgelat/stats.hpp"

using namespace edgelat;
using namespace edgelat::stats;
using Catch::Approx;

namespace {

// Independent oracle: full sort, pick the middle.
double sort_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// Independent oracle: evaluate both ECDFs at every pooled point by counting.
double brute_d(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  auto cdf = [](const std::vector<double>& s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
           static_cast<double>(s.size());
  };
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
  return d;
}

}  // namespace

TEST_CASE("median", "[stats]") {
  CHECK(median({12.0, 11.5, 30.0}) == 12.0);
  CHECK(median({7.0}) == 7.0);
  CHECK(median({10.0, 20.0}) == 15.0);
  CHECK_THROWS_AS(median({}), Error);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 500);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> v(1 + rng() % 41);
    for (auto& x : v) x = (rng() % 4 == 0) ? std::round(u(rng)) : u(rng);
    REQUIRE(median(v) == sort_median(v));
  }
}

TEST_CASE("empirical CDF", "[stats]") {
  CHECK(ecdf({1, 2, 3, 4}) == std::vector<CdfPoint>{{1, 0.25}, {2, 0.5}, {3, 0.75}, {4, 1.0}});
  CHECK(ecdf({9}) == std::vector<CdfPoint>{{9, 1.0}});
  auto ties = ecdf({2, 2, 4});
  REQUIRE(ties.size() == 2);
  CHECK(ties[0].value == 2);
  CHECK(ties[0].fraction == Approx(2.0 / 3.0));
  CHECK(ties[1] == CdfPoint{4, 1.0});
  CHECK_THROWS_AS(ecdf({}), Error);
}

TEST_CASE("K-S statistic on hand-enumerated samples", "[stats][ks]") {
  auto same = ks_two_sample({3, 1, 2}, {1, 2, 3});
  CHECK(same.d_statistic == 0.0);
  CHECK(same.p_value == 1.0);

  CHECK(ks_two_sample({1, 2, 3, 4}, {5, 6, 7, 8}).d_statistic == 1.0);
  // ECDF steps: x=1 (.5,0) x=2 (.5,.5) x=3 (1,.5) x=4 (1,1) -> max gap 0.5
  CHECK(ks_two_sample({1, 3}, {2, 4}).d_statistic == 0.5);
  CHECK_THROWS_AS(ks_two_sample({}, {1}), Error);
}

TEST_CASE("K-S p-value behaviour", "[stats][ks]") {
  std::vector<double> lo, hi;
  for (int i = 0; i < 20; ++i) {
    lo.push_back(i);
    hi.push_back(100 + i);
  }
  auto sep = ks_two_sample(lo, hi);
  CHECK(sep.d_statistic == 1.0);
  CHECK(sep.p_value < 1e-6);

  std::vector<double> a8(lo.begin(), lo.begin() + 8), b8(hi.begin(), hi.begin() + 8);
  CHECK(ks_two_sample(a8, b8).p_value < 0.01);

  // Q(1) = 2(e^-2 - e^-8 + e^-18 - ...) = 0.2699996...
  CHECK(kolmogorov_q(1.0) == Approx(0.26999967).epsilon(1e-7));
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1e-4) == Approx(1.0));
}

TEST_CASE("K-S symmetry, monotone invariance, brute-force agreement", "[stats][ks][property]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(20, 5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(1 + rng() % 30), b(1 + rng() % 30);
    for (auto& x : a) x = std::round(g(rng) * 4) / 4;
    for (auto& x : b) x = std::round((g(rng) + 2) * 4) / 4;
    auto ab = ks_two_sample(a, b);
    auto ba = ks_two_sample(b, a);
    REQUIRE(ab.d_statistic == ba.d_statistic);
    REQUIRE(ab.p_value == ba.p_value);
    REQUIRE(ab.d_statistic == Approx(brute_d(a, b)).margin(1e-12));
    std::vector<double> ta, tb;
    for (double x : a) ta.push_back(std::exp(x / 10) + 3 * x);
    for (double x : b) tb.push_back(std::exp(x / 10) + 3 * x);
    REQUIRE(ks_two_sample(ta, tb).d_statistic == ab.d_statistic);
    REQUIRE(ab.p_value >= 0.0);
    REQUIRE(ab.p_value <= 1.0);
  }
}

TEST_CASE("exact permutation K-S", "[stats][ks]") {
  // Of the C(6,3) = 20 relabelings only the two fully separated ones reach D = 1.
  auto r = ks_two_sample_exact({1, 2, 3}, {4, 5, 6});
  CHECK(r.exact);
  CHECK(r.d_statistic == 1.0);
  CHECK(r.p_value == Approx(0.1));
  CHECK(ks_two_sample_exact({1, 2}, {1, 2}).p_value == 1.0);
  CHECK_THROWS_AS(ks_two_sample_exact(std::vector<double>(13, 1.0), {1.0}), Error);
}

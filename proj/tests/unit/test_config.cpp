#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "edgelat/config.hpp"

using namespace edgelat;
using namespace edgelat::config;

TEST_CASE("defaults carry the public resolver roster", "[config]") {
  const auto c = defaults();
  REQUIRE(c.resolvers.size() == 4);
  auto find = [&](const std::string& label) {
    for (const auto& r : c.resolvers)
      if (r.label == label) return r;
    FAIL("missing " + label);
    return campaign::ResolverSpec{};
  };
  CHECK(find("Google").v4.address.to_string() == "8.8.8.8");
  CHECK(find("Google").v6.address.to_string() == "2001:4860:4860::8888");
  CHECK(find("Cloudflare").v4.address.to_string() == "1.1.1.1");
  CHECK(find("Cloudflare").v6.address.to_string() == "2606:4700:4700::1111");
  CHECK(find("OpenDNS").v4.address.to_string() == "208.67.222.222");
  CHECK(find("OpenDNS").v6.address.to_string() == "2620:119:35::35");
  CHECK(find("Quad9").v4.address.to_string() == "9.9.9.9");
  CHECK(find("Quad9").v6.address.to_string() == "2620:fe::fe");
  for (const auto& r : c.resolvers) {
    CHECK(r.v4.address.is_v4());
    CHECK_FALSE(r.v6.address.is_v4());
  }
  CHECK(c.quotas.at("akamai") == 50);
  CHECK(c.quotas.at("fastly") == 5);
  CHECK(c.thresholds.at("akamai") == 30);
  CHECK(c.thresholds.at("edgecast") == 3);
  CHECK(c.quirks.at("Google") == cache::TtlQuirk::GoogleDecrement);
  CHECK_NOTHROW(c.spec().validate());
}

TEST_CASE("JSON overrides and relative paths", "[config]") {
  auto j = nlohmann::json::parse(R"({
    "resolvers": [{"label": "Lab", "v4": "127.0.0.1", "v6": "::1"}],
    "include_isp": false,
    "catalog": "data/catalog.txt",
    "output_dir": "/abs/out",
    "thresholds": {"akamai": 2},
    "quirks": {},
    "convention": "inverted",
    "timeouts": {"dns_ms": 1500},
    "measurement": {"prewarm_gap_ms": 10, "handshake_port": 8443},
    "dns_port": 5353,
    "fanout": 2,
    "seed": 9,
    "interval_s": 60,
    "iterations": 3
  })");
  const auto c = parse(j, "/etc/edgelat");
  REQUIRE(c.resolvers.size() == 1);
  CHECK(c.resolvers[0].v4.port == 5353);
  CHECK(c.resolvers[0].v6.port == 5353);
  CHECK_FALSE(c.include_isp);
  CHECK(c.catalog_path == "/etc/edgelat/data/catalog.txt");
  CHECK(c.output_dir == "/abs/out");
  CHECK(c.thresholds == std::map<std::string, std::size_t>{{"akamai", 2}});
  CHECK(c.quotas.at("akamai") == 50);
  CHECK(c.quirks.empty());
  CHECK(c.convention == cache::Convention::Inverted);
  CHECK(c.dns_timeout == std::chrono::milliseconds{1500});
  CHECK(c.handshake_timeout == std::chrono::milliseconds{5000});
  CHECK(c.prewarm_gap == std::chrono::milliseconds{10});
  CHECK(c.handshake_port == 8443);
  CHECK(c.spec().handshake_port == 8443);
  CHECK(c.fanout == 2);
  CHECK(c.seed == 9);
  CHECK(c.interval == std::chrono::seconds{60});
  CHECK(c.iterations == 3);
}

TEST_CASE("every roster entry needs both families", "[config]") {
  auto missing = nlohmann::json::parse(R"({"resolvers": [{"label": "X", "v4": "192.0.2.1"}]})");
  CHECK_THROWS_AS(parse(missing), Error);
  auto swapped = nlohmann::json::parse(R"({"resolvers": [{"label": "X", "v4": "::1", "v6": "192.0.2.1"}]})");
  CHECK_THROWS_AS(parse(swapped), Error);
  auto bad = nlohmann::json::parse(R"({"resolvers": [{"label": "X", "v4": "nope", "v6": "::1"}]})");
  CHECK_THROWS_AS(parse(bad), Error);
}

TEST_CASE("bad values are rejected", "[config]") {
  CHECK_THROWS_AS(parse(nlohmann::json::parse(R"({"quirks": {"Google": "odd"}})")), Error);
  CHECK_THROWS_AS(parse(nlohmann::json::parse(R"({"convention": "sideways"})")), Error);
  CHECK_THROWS_AS(parse(nlohmann::json::parse(R"({"fanout": "many"})")), Error);
  CHECK_THROWS_AS(parse(nlohmann::json::parse(R"([1, 2])")), Error);
  try {
    load("/nonexistent/config.json");
    FAIL("expected NoConfig");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoConfig);
  }
}

TEST_CASE("the shipped sample configuration loads", "[config]") {
  const auto root = std::filesystem::path(EDGELAT_SOURCE_DIR);
  const auto c = load((root / "samples" / "config.json").string());
  CHECK(c.resolvers.size() == 4);
  CHECK(std::filesystem::exists(c.catalog_path));
  CHECK(std::filesystem::exists(c.ttl_defaults_path));
  const auto rules = c.cache_rules();
  CHECK(rules.ttl_by_cdn.find("akamai") == 20u);
  CHECK(rules.ttl_by_cdn.find("edgecast") == 3600u);
}

#include <catch_amalgamated.hpp>

#include <future>

#include "edgelat/dns/client.hpp"
#include "support/mock_dns.hpp"

using namespace edgelat;
using namespace edgelat::dns;
using namespace std::chrono_literals;
using testing::MockDnsServer;
using testing::MockReply;
using testing::MockRequest;

namespace {

MockReply answer_a(const MockRequest& req, std::chrono::milliseconds delay = 0ms) {
  auto b = testing::reply_to(req);
  if (req.qtype() == RecordType::A) b.answer(make_a(req.qname(), 20, "192.0.2.1"));
  if (req.qtype() == RecordType::AAAA) b.answer(make_aaaa(req.qname(), 20, "2001:db8::1"));
  return {b.build(), delay};
}

}  // namespace

TEST_CASE("latency reflects an injected 30 ms resolver delay", "[client]") {
  MockDnsServer server([](const MockRequest& r) { return answer_a(r, 30ms); });
  for (auto ep : {server.v4(), server.v6()}) {
    auto resp = resolve_once(DnsQuestion::to("www.example.test", address_type(ep.address.version()), ep, 2000ms));
    CHECK(resp.rcode == 0);
    REQUIRE(resp.first_address() != nullptr);
    CHECK(resp.latency_ms >= 30.0);
    CHECK(resp.latency_ms <= 35.0);
    CHECK_FALSE(resp.truncated_retried);
    CHECK(resp.sent_at.wall_us > 0);
  }
}

TEST_CASE("silent resolver times out at the configured deadline", "[client]") {
  MockDnsServer server([](const MockRequest&) { return MockReply::none(); });
  auto start = std::chrono::steady_clock::now();
  try {
    resolve_once(DnsQuestion::to("x.test", RecordType::A, server.v4(), 1000ms));
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Timeout);
  }
  auto waited = elapsed_ms(start, std::chrono::steady_clock::now());
  CHECK(waited >= 1000.0);
  CHECK(waited < 1100.0);
}

TEST_CASE("replies with a foreign transaction id are ignored", "[client]") {
  MockDnsServer server([](const MockRequest& r) {
    auto reply = answer_a(r);
    reply.bytes[1] ^= 0x01;
    return reply;
  });
  try {
    resolve_once(DnsQuestion::to("x.test", RecordType::A, server.v4(), 300ms));
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Timeout);
  }
}

TEST_CASE("truncated UDP reply is retried over TCP", "[client]") {
  MockDnsServer server([](const MockRequest& r) {
    if (!r.tcp) return MockReply{testing::reply_to(r).truncated().build(), 5ms};
    auto b = testing::reply_to(r);
    for (int i = 1; i <= 3; ++i) b.answer(make_a(r.qname(), 20, "192.0.2." + std::to_string(i)));
    return MockReply{b.build(), 5ms};
  });
  auto resp = resolve_once(DnsQuestion::to("big.test", RecordType::A, server.v4(), 2000ms));
  CHECK(resp.truncated_retried);
  REQUIRE(resp.answers.size() == 3);
  CHECK(*resp.answers[2].address() == IpAddress::parse("192.0.2.3"));
  CHECK(resp.latency_ms >= 10.0);  // both attempts are covered
}

TEST_CASE("undecodable reply with matching id is Malformed", "[client]") {
  MockDnsServer server([](const MockRequest& r) {
    auto reply = answer_a(r);
    reply.bytes.resize(reply.bytes.size() - 3);
    return reply;
  });
  try {
    resolve_once(DnsQuestion::to("x.test", RecordType::A, server.v4(), 500ms));
    FAIL("expected Malformed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Malformed);
  }
}

TEST_CASE("family mismatch is rejected before any packet is sent", "[client]") {
  MockDnsServer server([](const MockRequest& r) { return answer_a(r); });
  auto q = DnsQuestion::to("x.test", RecordType::AAAA, server.v4(), 500ms);
  q.transport = IpVersion::V6;
  try {
    resolve_once(q);
    FAIL("expected AddressFamilyMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AddressFamilyMismatch);
  }
  CHECK(server.requests() == 0);
}

TEST_CASE("concurrent queries stay independent", "[client]") {
  MockDnsServer server([](const MockRequest& r) { return answer_a(r, 20ms); });
  std::vector<std::future<TimedDnsResponse>> futs;
  for (int i = 0; i < 16; ++i)
    futs.push_back(std::async(std::launch::async, [&, i] {
      return resolve_once(DnsQuestion::to("n" + std::to_string(i) + ".test", RecordType::A, server.v4(), 2000ms));
    }));
  for (int i = 0; i < 16; ++i) {
    auto r = futs[static_cast<std::size_t>(i)].get();
    CHECK(r.question.qname == "n" + std::to_string(i) + ".test");
    CHECK(r.latency_ms < 2000.0);
  }
}

#include <catch_amalgamated.hpp>

#include <random>

#include "edgelat/dns/wire.hpp"
#include "support/generators.hpp"

using namespace edgelat;
using namespace edgelat::dns;

namespace {

DnsQuestion question(std::string name, RecordType t = RecordType::A) {
  return DnsQuestion::to(std::move(name), t, {IpAddress::parse("127.0.0.1"), 53});
}

// Query bytes with QR flipped on, so they parse as a (question-only) response.
std::vector<std::uint8_t> as_response(std::vector<std::uint8_t> query) {
  query[2] |= 0x80;
  return query;
}

// Hand-encoded per RFC 1035 4.1: header, then 7"example"3"com"0, A, IN.
const std::vector<std::uint8_t> kExampleComQuery = {
    0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  //
    0x07, 'e',  'x',  'a',  'm',  'p',  'l',  'e',  0x03, 'c',  'o',  'm',  0x00,  //
    0x00, 0x01, 0x00, 0x01};

// Response to example.com/A whose single answer owner is the pointer C0 0C.
const std::vector<std::uint8_t> kCompressedAnswer = {
    0xBE, 0xEF, 0x81, 0x80, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,        //
    0x07, 'e',  'x',  'a',  'm',  'p',  'l',  'e',  0x03, 'c',  'o',  'm',  0x00,  //
    0x00, 0x01, 0x00, 0x01,                                                        //
    0xC0, 0x0C, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x01, 0x2C, 0x00, 0x04,        //
    192,  0,    2,    1};

}  // namespace

TEST_CASE("encode_query matches the hand-encoded RFC 1035 message", "[wire]") {
  auto bytes = encode_query(question("example.com"), 0x1234, false);
  REQUIRE(bytes.size() == 29);
  CHECK(bytes == kExampleComQuery);
  CHECK(bytes[0] == 0x12);
  CHECK(bytes[1] == 0x34);
  CHECK(bytes[2] == 0x01);

  SECTION("trailing dot is accepted and ignored") {
    CHECK(encode_query(question("example.com."), 0x1234, false) == kExampleComQuery);
  }
}

TEST_CASE("EDNS0 OPT advertises a 1232-octet payload", "[wire]") {
  auto bytes = encode_query(question("example.com"), 0x1234, true);
  REQUIRE(bytes.size() == 29 + 11);
  CHECK(bytes[11] == 1);  // ARCOUNT
  const std::vector<std::uint8_t> opt(bytes.begin() + 29, bytes.end());
  CHECK(opt == std::vector<std::uint8_t>{0x00, 0x00, 0x29, 0x04, 0xD0, 0, 0, 0, 0, 0x00, 0x00});
}

TEST_CASE("name validation", "[wire]") {
  const std::string l63(63, 'a');
  const std::string l64(64, 'a');
  CHECK_NOTHROW(encode_query(question(l63 + ".com"), 1, false));
  auto code_of = [](const std::string& name) {
    try {
      encode_query(question(name), 1, false);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  CHECK(code_of(l64 + ".com") == Errc::InvalidName);
  CHECK(code_of("a..b") == Errc::InvalidName);
  CHECK(code_of(".leading") == Errc::InvalidName);
  // 4 x 63-octet labels + length bytes + root = 257 octets.
  CHECK(code_of(l63 + "." + l63 + "." + l63 + "." + l63) == Errc::InvalidName);
}

TEST_CASE("decoding a query echo reproduces the question", "[wire]") {
  auto msg = decode_response(as_response(encode_query(question("www.example.org", RecordType::AAAA), 7, true)));
  CHECK(msg.id == 7);
  CHECK(msg.flags.qr);
  CHECK(msg.flags.rd);
  REQUIRE(msg.questions.size() == 1);
  CHECK(msg.questions[0] == QuestionEcho{"www.example.org", RecordType::AAAA, kClassIn});
}

TEST_CASE("compression pointer to the question name", "[wire]") {
  auto msg = decode_response(kCompressedAnswer);
  CHECK(msg.rcode == 0);
  REQUIRE(msg.answers.size() == 1);
  CHECK(msg.answers[0].name == "example.com");
  CHECK(msg.answers[0].ttl == 300);
  CHECK(*msg.answers[0].address() == IpAddress::parse("192.0.2.1"));
}

TEST_CASE("malformed inputs", "[wire]") {
  auto code_of = [](std::vector<std::uint8_t> m) {
    try {
      decode_response(m);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };

  SECTION("five octets") { CHECK(code_of({1, 2, 3, 4, 5}) == Errc::Malformed); }

  SECTION("pointer to itself") {
    auto m = kCompressedAnswer;
    m[29] = 0xC0;
    m[30] = 29;
    CHECK(code_of(m) == Errc::Malformed);
  }

  SECTION("two pointers referencing each other") {
    std::vector<std::uint8_t> m = {0, 1, 0x81, 0x80, 0, 1, 0, 0, 0, 0, 0, 0,  //
                                   0xC0, 14, 0xC0, 12, 0, 1, 0, 1};
    CHECK(code_of(m) == Errc::Malformed);
  }

  SECTION("pointer beyond the message") {
    auto m = kCompressedAnswer;
    m[30] = 0xF0;
    CHECK(code_of(m) == Errc::Malformed);
  }

  SECTION("truncated rdata") {
    auto m = kCompressedAnswer;
    m.pop_back();
    CHECK(code_of(m) == Errc::Malformed);
  }

  SECTION("answer count larger than present") {
    auto m = kCompressedAnswer;
    m[7] = 2;
    CHECK(code_of(m) == Errc::Malformed);
  }
}

TEST_CASE("answers keep wire order; unknown types stay opaque", "[wire]") {
  auto bytes = MessageBuilder(9)
                   .question("x.test", RecordType::A)
                   .answer(make_cname("x.test", 60, "y.test"))
                   .answer(make_a("y.test", 20, "192.0.2.7"))
                   .answer(make_a("y.test", 20, "192.0.2.3"))
                   .answer({"y.test", static_cast<RecordType>(99), kClassIn, 5, OpaqueData{{1, 2, 3}}})
                   .build();
  auto msg = decode_response(bytes);
  REQUIRE(msg.answers.size() == 4);
  CHECK(msg.answers[0].type == RecordType::CNAME);
  CHECK(std::get<NameData>(msg.answers[0].rdata).name == "y.test");
  CHECK(*msg.answers[1].address() == IpAddress::parse("192.0.2.7"));
  CHECK(*msg.answers[2].address() == IpAddress::parse("192.0.2.3"));
  CHECK(std::get<OpaqueData>(msg.answers[3].rdata).bytes == std::vector<std::uint8_t>{1, 2, 3});
}

TEST_CASE("TTL with the sign bit set reads as zero", "[wire]") {
  auto bytes = MessageBuilder(1).question("a.test", RecordType::A).answer(make_a("a.test", 0x80000001u, "192.0.2.1")).build();
  CHECK(decode_response(bytes).answers[0].ttl == 0);
}

TEST_CASE("TXT character strings", "[wire]") {
  auto bytes = MessageBuilder(1)
                   .question("whoami.ipv4.akahelp.net", RecordType::TXT)
                   .compress_owner()
                   .answer(make_txt("whoami.ipv4.akahelp.net", 0, {"ns", "198.51.100.7"}))
                   .build();
  auto msg = decode_response(bytes);
  CHECK(std::get<TxtData>(msg.answers[0].rdata).strings == std::vector<std::string>{"ns", "198.51.100.7"});
  CHECK(msg.answers[0].name == "whoami.ipv4.akahelp.net");
}

TEST_CASE("round trip over random valid questions", "[wire][property]") {
  std::mt19937_64 rng(20220126);
  for (int i = 0; i < 10000; ++i) {
    auto name = testing::random_hostname(rng);
    auto type = testing::random_qtype(rng);
    bool edns = (rng() & 1) != 0;
    auto txid = static_cast<std::uint16_t>(rng());
    auto msg = decode_response(as_response(encode_query(question(name, type), txid, edns)));
    REQUIRE(msg.id == txid);
    REQUIRE(msg.questions.size() == 1);
    REQUIRE(msg.questions[0].name == name);
    REQUIRE(msg.questions[0].type == type);
    REQUIRE(msg.questions[0].qclass == kClassIn);
  }
}

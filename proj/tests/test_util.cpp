#include "doctest.h"

#include "cpaudit/util.hpp"

using namespace cpaudit;

TEST_CASE("iso8601 parse and format round-trip") {
    auto ts = parse_iso8601("2019-03-01T12:00:00Z");
    REQUIRE(ts.has_value());
    CHECK(*ts == 1551441600000LL);
    CHECK(format_iso8601(*ts) == "2019-03-01T12:00:00.000Z");

    auto frac = parse_iso8601("2019-03-01T12:00:00.123Z");
    REQUIRE(frac.has_value());
    CHECK(*frac == 1551441600123LL);
    CHECK(*parse_iso8601(format_iso8601(*frac)) == *frac);
}

TEST_CASE("iso8601 numeric offsets") {
    CHECK(*parse_iso8601("2019-03-01T12:00:00+02:00") ==
          *parse_iso8601("2019-03-01T10:00:00Z"));
    CHECK(*parse_iso8601("2019-03-01T07:00:00-05:00") ==
          *parse_iso8601("2019-03-01T12:00:00Z"));
    CHECK_FALSE(parse_iso8601("not a date").has_value());
    CHECK_FALSE(parse_iso8601("2019-13-01T00:00:00Z").has_value());
}

TEST_CASE("base64 known vectors") {
    CHECK(base64_encode("alice@example.com") == "YWxpY2VAZXhhbXBsZS5jb20=");
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("a") == "YQ==");
    CHECK(base64_encode("ab") == "YWI=");
    CHECK(base64_encode("\xfb\xff") == "+/8=");
    CHECK(base64_encode("\xfb\xff", /*url_safe=*/true) == "-_8=");
}

TEST_CASE("digest known vectors") {
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(md5_hex("abc") == "900150983cd24fb0d6963f7d28e17f72");
}

TEST_CASE("url parsing") {
    auto u = parse_url("https://AD.DoubleClick.net:8443/pixel?id=1#frag");
    REQUIRE(u.has_value());
    CHECK(u->scheme == "https");
    CHECK(u->host == "ad.doubleclick.net");
    CHECK(u->port == "8443");
    CHECK(u->path == "/pixel");
    CHECK(u->query == "id=1");

    CHECK(parse_url("http://host.example")->path == "/");
    CHECK_FALSE(parse_url("not-a-url").has_value());
    CHECK_FALSE(parse_url("https://").has_value());
}

TEST_CASE("shannon entropy") {
    CHECK(shannon_entropy("aaaaaaaa") == doctest::Approx(0.0));
    CHECK(shannon_entropy("abcdefgh") == doctest::Approx(3.0));
    CHECK(shannon_entropy("") == 0.0);
}

TEST_CASE("percent encoding") {
    CHECK(percent_encode("a b@c") == "a%20b%40c");
    CHECK(percent_encode("safe-._~09AZ") == "safe-._~09AZ");
}

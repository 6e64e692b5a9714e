#include "doctest.h"

#include <random>

#include "cpaudit/cookies.hpp"
#include "test_support.hpp"

using namespace cpaudit;
using namespace cpaudit::cookies;
using cpaudit::bundle::CookieSnapshotRecord;

namespace {

constexpr TimestampMs kNow = 1'550'000'000'000;

CookieAnalysis analyze(const std::string& header, const std::string& url = "https://a.example/") {
    auto rec = parse_set_cookie(header, kNow, url);
    REQUIRE(rec.has_value());
    auto meta = testsupport::make_meta("hs", {"a.example"});
    static auto rules = domains::parse_psl(testsupport::data_file("psl.dat")).rules;
    static auto db = domains::OwnershipDb::from_json(R"({"domains":{},"orgs":{}})");
    return analyze_cookie(*rec, meta, rules, db);
}

}  // namespace

TEST_CASE("parse_set_cookie basics") {
    auto rec = parse_set_cookie("sid=abc123; Path=/app; Secure; HttpOnly; Max-Age=600", kNow,
                                "https://shop.a.example/login");
    REQUIRE(rec);
    CHECK(rec->name == "sid");
    CHECK(rec->value == "abc123");
    CHECK(rec->path == "/app");
    CHECK(rec->secure);
    CHECK(rec->http_only);
    CHECK(rec->domain == "shop.a.example");
    CHECK(rec->expiry_time == kNow + 600'000);

    SUBCASE("Domain attribute overrides the host") {
        auto r2 = parse_set_cookie("x=1; Domain=.a.example", kNow, "https://shop.a.example/");
        REQUIRE(r2);
        CHECK(r2->domain == ".a.example");
    }

    SUBCASE("no name=value is unparseable") {
        CHECK_FALSE(parse_set_cookie("; Secure", kNow, "https://a.example/"));
        CHECK_FALSE(parse_set_cookie("", kNow, "https://a.example/"));
    }
}

TEST_CASE("Max-Age takes precedence over Expires") {
    auto a = analyze("k=v; Max-Age=600; Expires=Wed, 01 Jan 2048 00:00:00 GMT");
    REQUIRE(a.lifetime_seconds);
    CHECK(*a.lifetime_seconds == 600);
    CHECK_FALSE(a.persistent);
    CHECK(a.bucket == DurationBucket::session);
}

TEST_CASE("Expires alone sets the lifetime") {
    auto a = analyze("k=v; Expires=Thu, 14 Feb 2019 19:33:20 GMT");  // kNow + 2 days exactly
    REQUIRE(a.lifetime_seconds);
    CHECK(*a.lifetime_seconds == 2 * 86'400);
    CHECK(a.persistent);
    CHECK(a.bucket == DurationBucket::under_6_months);
}

TEST_CASE("neither attribute means session cookie") {
    auto a = analyze("k=v; Path=/");
    CHECK_FALSE(a.lifetime_seconds);
    CHECK_FALSE(a.persistent);
    CHECK(a.bucket == DurationBucket::session);
}

TEST_CASE("twenty-year cookie lands in the top bucket") {
    auto a = analyze("auth=tok; Max-Age=630720000");  // 20 years
    CHECK(a.persistent);
    CHECK(a.bucket == DurationBucket::over_5_years);
}

TEST_CASE("parse_cookie_date tolerates common format drift") {
    TimestampMs expected = *parse_iso8601("2019-03-01T12:00:00Z");
    CHECK(parse_cookie_date("Fri, 01 Mar 2019 12:00:00 GMT") == expected);
    CHECK(parse_cookie_date("Fri, 01-Mar-2019 12:00:00 GMT") == expected);
    CHECK(parse_cookie_date("Fri, 01-Mar-19 12:00:00 GMT") == expected);
    CHECK(parse_cookie_date("01 Mar 2019 12:00:00") == expected);
    CHECK_FALSE(parse_cookie_date("not a date"));
}

TEST_CASE("bucket boundaries") {
    CHECK(bucket_for_lifetime(std::nullopt) == DurationBucket::session);
    CHECK(bucket_for_lifetime(0) == DurationBucket::session);
    CHECK(bucket_for_lifetime(86'399) == DurationBucket::session);
    CHECK(bucket_for_lifetime(86'400) == DurationBucket::under_6_months);
    CHECK(bucket_for_lifetime(182LL * 86'400 - 1) == DurationBucket::under_6_months);
    CHECK(bucket_for_lifetime(182LL * 86'400) == DurationBucket::six_months_to_5_years);
    CHECK(bucket_for_lifetime(1826LL * 86'400 - 1) == DurationBucket::six_months_to_5_years);
    CHECK(bucket_for_lifetime(1826LL * 86'400) == DurationBucket::over_5_years);

    SUBCASE("property: buckets partition the axis and are monotone") {
        std::mt19937_64 rng(42);
        std::uniform_int_distribution<std::int64_t> dist(0, 4'000LL * 86'400);
        std::int64_t prev_v = -1;
        for (int i = 0; i < 2'000; ++i) {
            std::int64_t v = dist(rng);
            auto b = bucket_for_lifetime(v);
            // persistence agrees with the bucket
            CHECK((v >= kPersistentThresholdSec) == (b != DurationBucket::session));
            // monotone: larger lifetime never maps to a smaller bucket
            if (prev_v >= 0) {
                auto lo = bucket_for_lifetime(std::min(v, prev_v));
                auto hi = bucket_for_lifetime(std::max(v, prev_v));
                CHECK(static_cast<int>(lo) <= static_cast<int>(hi));
            }
            prev_v = v;
        }
    }
}

TEST_CASE("extract_cookies collects headers and snapshots") {
    bundle::CaptureBundle b;
    b.meta = testsupport::make_meta("hs", {"a.example"});
    auto tx = testsupport::make_tx("t1", kNow, "https://a.example/login");
    tx.response_headers.emplace_back("Set-Cookie", "sid=abc; Max-Age=600");
    tx.response_headers.emplace_back("Set-Cookie", "theme=dark");
    tx.response_headers.emplace_back("Set-Cookie", "; broken");
    b.transactions.push_back(tx);
    CookieSnapshotRecord snap;
    snap.domain = ".tracker.example";
    snap.name = "uid";
    snap.value = "zz";
    snap.creation_time = kNow;
    snap.source = bundle::CookieSource::store_snapshot;
    b.cookie_snapshots.push_back(snap);

    auto result = extract_cookies(b);
    CHECK(result.records.size() == 3);
    REQUIRE(result.diagnostics.size() == 1);
    CHECK(result.diagnostics[0].find("broken") != std::string::npos);
}

TEST_CASE("identifier-like flag requires length and entropy") {
    IdentifierThresholds t;
    auto meta = testsupport::make_meta("hs", {"a.example"});
    auto rules = domains::parse_psl(testsupport::data_file("psl.dat")).rules;
    auto db = domains::OwnershipDb::from_json(R"({"domains":{},"orgs":{}})");

    auto check = [&](const std::string& value) {
        CookieSnapshotRecord r;
        r.domain = "a.example";
        r.name = "c";
        r.value = value;
        r.creation_time = kNow;
        return analyze_cookie(r, meta, rules, db, nullptr, t).identifier_like;
    };

    CHECK(check("GA1.2.1829384756.1550000000"));   // high-entropy id
    CHECK(check("x9K2mQ7pLw3Z"));
    CHECK_FALSE(check("dark"));                    // too short
    CHECK_FALSE(check("aaaaaaaaaaaaaaaa"));        // long but near-zero entropy
    CHECK_FALSE(check("true"));
}

TEST_CASE("dedup keeps the longest-lived cookie per (domain, name, path)") {
    auto a1 = analyze("sid=abc; Max-Age=600");
    auto a2 = analyze("sid=def; Max-Age=172800");
    auto a3 = analyze("sid=ghi; Path=/other; Max-Age=60");
    a1.pre_consent = true;

    auto deduped = dedup_cookies({a1, a2, a3});
    REQUIRE(deduped.size() == 2);

    const CookieAnalysis* sid_root = nullptr;
    for (const auto& a : deduped)
        if (a.record.path == "/") sid_root = &a;
    REQUIRE(sid_root);
    CHECK(*sid_root->lifetime_seconds == 172'800);
    CHECK(sid_root->pre_consent);  // the flag survives dedup from either copy
}

TEST_CASE("pre_consent_report") {
    auto meta = testsupport::make_meta("hs", {"a.example"});

    auto persistent_pre = analyze("uid=q8Zk22m1x9; Max-Age=999999");
    persistent_pre.pre_consent = true;
    auto session_pre = analyze("tmp=1");
    session_pre.pre_consent = true;
    auto persistent_post = analyze("later=q8Zk22m1x9; Max-Age=999999");

    SUBCASE("not evaluable without a consent marker") {
        auto summary = pre_consent_report({persistent_pre}, meta);
        CHECK_FALSE(summary.evaluable);
        CHECK(summary.persistent_pre_consent.empty());
    }

    SUBCASE("reports only persistent pre-consent cookies") {
        meta.consent_at = kNow + 60'000;
        auto summary = pre_consent_report({persistent_pre, session_pre, persistent_post}, meta);
        CHECK(summary.evaluable);
        REQUIRE(summary.persistent_pre_consent.size() == 1);
        CHECK(summary.persistent_pre_consent[0].record.name == "uid");
    }
}

TEST_CASE("third-party cookie classification") {
    auto a = analyze("t=1; Max-Age=99999", "https://pixel.tracker.example/p.gif");
    CHECK(a.party == domains::Party::third_party);
    CHECK(a.registrable_domain == "tracker.example");

    auto fp = analyze("s=1", "https://shop.a.example/x");
    CHECK(fp.party == domains::Party::first_party);
    CHECK(fp.registrable_domain == "a.example");
}

#include "doctest.h"

#include <fstream>

#include "cpaudit/bundle.hpp"
#include "test_support.hpp"

using namespace cpaudit;
using namespace cpaudit::bundle;
using testsupport::TempDir;

namespace {

CaptureBundle small_bundle() {
    CaptureBundle b;
    b.meta = testsupport::make_meta("cafe-01", {"cafe.example"});
    b.transactions.push_back(testsupport::make_tx("t1", 1'550'000'000'000, "https://cafe.example/portal"));
    b.transactions.push_back(testsupport::make_tx("t2", 1'550'000'010'000, "http://tracker.example/p.gif"));
    auto& t2 = b.transactions.back();
    t2.response_headers.emplace_back("Set-Cookie", "id=zz91; Max-Age=86400");
    std::string ref = b.add_body("<html><body>portal</body></html>");
    b.pages.push_back({"https://cafe.example/portal", Phase::unknown, ref});
    std::string js = b.add_body("navigator.userAgent");
    b.scripts.push_back({"https://cafe.example/app.js", js, Phase::unknown});
    return b;
}

}  // namespace

TEST_CASE("bundle save/load round-trip is structurally equal") {
    TempDir dir("bundle_rt");
    CaptureBundle original = small_bundle();
    save_bundle(original, dir.str());
    CaptureBundle loaded = load_bundle(dir.str());

    CHECK(loaded.meta.hotspot_id == original.meta.hotspot_id);
    CHECK(loaded.meta.owner_domains == original.meta.owner_domains);
    REQUIRE(loaded.transactions.size() == original.transactions.size());
    for (size_t i = 0; i < loaded.transactions.size(); ++i) {
        CHECK(loaded.transactions[i].id == original.transactions[i].id);
        CHECK(loaded.transactions[i].ts == original.transactions[i].ts);
        CHECK(loaded.transactions[i].url == original.transactions[i].url);
        CHECK(loaded.transactions[i].response_headers == original.transactions[i].response_headers);
        CHECK(loaded.transactions[i].transport == original.transactions[i].transport);
    }
    CHECK(loaded.bodies == original.bodies);
    REQUIRE(loaded.pages.size() == 1);
    CHECK(loaded.pages[0].html_body_ref == original.pages[0].html_body_ref);
    REQUIRE(loaded.scripts.size() == 1);
}

TEST_CASE("load_bundle validates structure") {
    TempDir dir("bundle_val");

    SUBCASE("missing manifest is fatal") {
        CHECK_THROWS_WITH_AS(load_bundle(dir.str()), doctest::Contains("missing manifest"),
                             BundleError);
    }

    SUBCASE("unresolvable body ref is named in the error") {
        CaptureBundle b = small_bundle();
        b.transactions[0].response_body_ref = "deadbeef";
        save_bundle(b, dir.str());
        CHECK_THROWS_WITH_AS(load_bundle(dir.str()), doctest::Contains("deadbeef"), BundleError);
    }

    SUBCASE("malformed transaction line reports its line number") {
        CaptureBundle b = small_bundle();
        save_bundle(b, dir.str());
        std::ofstream out(dir.path() / "transactions.jsonl", std::ios::app);
        out << "{not json\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_bundle(dir.str()), doctest::Contains("transactions.jsonl:3"),
                             BundleError);
    }

    SUBCASE("empty transactions file gives an empty bundle") {
        CaptureBundle b;
        b.meta = testsupport::make_meta("cafe-01");
        save_bundle(b, dir.str());
        CaptureBundle loaded = load_bundle(dir.str());
        CHECK(loaded.transactions.empty());
        CHECK(loaded.cookie_snapshots.empty());
    }

    SUBCASE("transport must match scheme") {
        CaptureBundle b = small_bundle();
        b.transactions[1].transport = Transport::tls;  // url is http://
        save_bundle(b, dir.str());
        CHECK_THROWS_AS(load_bundle(dir.str()), BundleError);
    }
}

TEST_CASE("convert_har maps entries to transactions") {
    SessionMeta meta = testsupport::make_meta("hs-har");
    std::string har = R"({"log": {"version": "1.2", "entries": [
      {"startedDateTime": "2019-03-01T12:00:00Z",
       "request": {"method": "GET", "url": "https://a.example/x", "headers": []},
       "response": {"status": 200, "headers": [
          {"name": "Set-Cookie", "value": "a=1; Max-Age=60"},
          {"name": "Set-Cookie", "value": "b=2; Max-Age=120"}]}},
      {"startedDateTime": "2019-03-01T12:00:01Z",
       "request": {"method": "GET", "url": "https://b.example/y", "headers": []},
       "response": {"status": 204, "headers": []}},
      {"startedDateTime": "2019-03-01T12:00:02Z",
       "request": {"method": "POST", "url": "http://c.example/z", "headers": []},
       "response": {"status": 200, "headers": []}}
    ]}})";

    HarConversionReport report;
    CaptureBundle b = convert_har(har, meta, &report);
    REQUIRE(b.transactions.size() == 3);
    CHECK(report.entries == 3);
    CHECK(report.skipped == 0);

    int tls = 0, plain = 0;
    for (const auto& t : b.transactions)
        (t.transport == Transport::tls ? tls : plain)++;
    CHECK(tls == 2);
    CHECK(plain == 1);

    // both Set-Cookie headers preserved as separate pairs
    int set_cookie = 0;
    for (const auto& [n, v] : b.transactions[0].response_headers)
        if (iequals(n, "Set-Cookie")) ++set_cookie;
    CHECK(set_cookie == 2);
    CHECK(b.transactions[0].ts == *parse_iso8601("2019-03-01T12:00:00Z"));
}

TEST_CASE("convert_har edge cases") {
    SessionMeta meta = testsupport::make_meta("hs-har");

    SUBCASE("non-HAR json is a parse error") {
        CHECK_THROWS_AS(convert_har(R"({"hello": 1})", meta), BundleError);
        CHECK_THROWS_AS(convert_har("not json at all", meta), BundleError);
    }

    SUBCASE("empty log gives empty bundle") {
        CaptureBundle b = convert_har(R"({"log": {"entries": []}})", meta);
        CHECK(b.transactions.empty());
    }

    SUBCASE("unparseable URL entries are skipped and counted") {
        std::string har = R"({"log": {"entries": [
          {"startedDateTime": "2019-03-01T12:00:00Z",
           "request": {"method": "GET", "url": "garbage", "headers": []},
           "response": {"status": 200, "headers": []}},
          {"startedDateTime": "2019-03-01T12:00:01Z",
           "request": {"method": "GET", "url": "https://ok.example/", "headers": []},
           "response": {"status": 200, "headers": []}}
        ]}})";
        HarConversionReport report;
        CaptureBundle b = convert_har(har, meta, &report);
        CHECK(b.transactions.size() == 1);
        CHECK(report.skipped == 1);
        CHECK(report.entries - report.skipped == b.transactions.size());
    }
}

TEST_CASE("mark_phase applies strict-less-than with post_consent ties") {
    CaptureBundle b;
    b.meta = testsupport::make_meta("hs-phase");
    b.transactions.push_back(testsupport::make_tx("t1", 10'000, "https://a.example/"));
    b.transactions.push_back(testsupport::make_tx("t2", 20'000, "https://a.example/"));
    b.transactions.push_back(testsupport::make_tx("t3", 30'000, "https://a.example/"));

    mark_phase(b, 25'000);
    CHECK(b.transactions[0].phase == Phase::pre_consent);
    CHECK(b.transactions[1].phase == Phase::pre_consent);
    CHECK(b.transactions[2].phase == Phase::post_consent);

    SUBCASE("tie at consent timestamp goes post_consent") {
        mark_phase(b, 20'000);
        CHECK(b.transactions[1].phase == Phase::post_consent);
    }

    SUBCASE("idempotent") {
        auto before = b.transactions;
        mark_phase(b, 25'000);
        for (size_t i = 0; i < before.size(); ++i)
            CHECK(b.transactions[i].phase == before[i].phase);
    }

    SUBCASE("phase partition covers all records disjointly") {
        size_t pre = 0, post = 0, unknown = 0;
        for (const auto& t : b.transactions) {
            if (t.phase == Phase::pre_consent) ++pre;
            else if (t.phase == Phase::post_consent) ++post;
            else ++unknown;
        }
        CHECK(pre + post == b.transactions.size());
        CHECK(unknown == 0);
    }

    SUBCASE("consent outside the sanity window is rejected") {
        CHECK_THROWS_AS(mark_phase(b, 30'000 + 3'600'001), BundleError);
        CHECK_THROWS_AS(mark_phase(b, 10'000 - 3'600'001), BundleError);
        CHECK_NOTHROW(mark_phase(b, 30'000 + 3'600'000));
    }
}

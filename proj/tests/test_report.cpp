#include "doctest.h"

#include <algorithm>

#include "json.hpp"

#include "cpaudit/pipeline.hpp"
#include "cpaudit/report.hpp"
#include "test_support.hpp"

using namespace cpaudit;
using namespace cpaudit::report;

namespace {

constexpr TimestampMs kNow = 1'550'000'000'000;

// Portal modeled on a cafe hotspot with no owner domain: every contacted
// domain is third-party, and exactly 7 of the 34 registrable domains are on
// the shipped filter lists.
const std::vector<std::string> kKnownTrackerHosts = {
    "stats.doubleclick.net",       "pagead.googlesyndication.com",
    "match.adsrvr.org",            "tags.stackadapt.com",
    "www.google-analytics.com",    "cafe.demdex.net",
    "connect.facebook.net",
};

bundle::CaptureBundle cafe_bundle(const std::string& dataset_tag, int plain_domains) {
    bundle::CaptureBundle b;
    b.meta = testsupport::make_meta("hvm-cafe", {});
    int n = 0;
    for (const auto& host : kKnownTrackerHosts) {
        auto tx = testsupport::make_tx(dataset_tag + "-k" + std::to_string(n), kNow + n,
                                       "https://" + host + "/t.js");
        tx.initiator_page = "https://192.168.4.1/portal";
        b.transactions.push_back(tx);
        ++n;
    }
    for (int i = 0; i < plain_domains; ++i) {
        auto tx = testsupport::make_tx(
            dataset_tag + "-p" + std::to_string(i), kNow + 100 + i,
            "https://cdn" + std::to_string(i) + ".quiet-host" + std::to_string(i) + ".example/a.css");
        b.transactions.push_back(tx);
    }
    return b;
}

size_t known_tracker_count(const PageTypeStats& stats) { return stats.known_trackers.size(); }

}  // namespace

TEST_CASE("aggregate_hotspot reproduces the cafe fixture counts") {
    auto config = testsupport::make_config();
    auto analysis = pipeline::analyze_bundle(cafe_bundle("d1", 27), config);

    HotspotReport rep = aggregate_hotspot({analysis}, config.input_versions);
    CHECK(rep.hotspot_id == "hvm-cafe");
    REQUIRE(rep.per_page_type.count("captive_portal") == 1);
    const auto& stats = rep.per_page_type.at("captive_portal");
    CHECK(stats.third_party_domains.size() == 34);
    CHECK(known_tracker_count(stats) == 7);
    CHECK(stats.known_trackers.count("doubleclick.net") == 1);
    CHECK(stats.known_trackers.at("facebook.net").count("social") == 1);
    CHECK(stats.known_trackers.at("google-analytics.com").count("privacy") == 1);

    SUBCASE("text rendering carries the headline numbers") {
        std::string text = render(rep, RenderFormat::text);
        CHECK(text.find("third-party domains: 34") != std::string::npos);
        CHECK(text.find("known trackers: 7") != std::string::npos);
    }
}

TEST_CASE("aggregation takes distinct unions across datasets") {
    auto config = testsupport::make_config();

    // d1 sees trackers {doubleclick, googlesyndication}, d2 sees
    // {googlesyndication, adsrvr}: union is 3
    bundle::CaptureBundle b1, b2;
    b1.meta = testsupport::make_meta("hs-u", {});
    b2.meta = testsupport::make_meta("hs-u", {});
    auto add = [](bundle::CaptureBundle& b, const std::string& id, const std::string& host) {
        b.transactions.push_back(testsupport::make_tx(id, kNow, "https://" + host + "/x.js"));
    };
    add(b1, "a1", "stats.doubleclick.net");
    add(b1, "a2", "pagead.googlesyndication.com");
    add(b2, "b1", "cdn.googlesyndication.com");
    add(b2, "b2", "match.adsrvr.org");

    auto r = aggregate_hotspot(
        {pipeline::analyze_bundle(b1, config), pipeline::analyze_bundle(b2, config)},
        config.input_versions);
    CHECK(known_tracker_count(r.per_page_type.at("captive_portal")) == 3);

    SUBCASE("order independence") {
        auto swapped = aggregate_hotspot(
            {pipeline::analyze_bundle(b2, config), pipeline::analyze_bundle(b1, config)},
            config.input_versions);
        CHECK(render(r, RenderFormat::json) == render(swapped, RenderFormat::json));
    }
}

TEST_CASE("aggregate_hotspot rejects conflicting owner domains") {
    auto config = testsupport::make_config();
    bundle::CaptureBundle b1, b2;
    b1.meta = testsupport::make_meta("hs-c", {"one.example"});
    b2.meta = testsupport::make_meta("hs-c", {"other.example"});
    auto a1 = pipeline::analyze_bundle(b1, config);
    auto a2 = pipeline::analyze_bundle(b2, config);
    CHECK_THROWS_AS(aggregate_hotspot({a1, a2}, {}), ReportError);
}

TEST_CASE("empty bundle aggregates to an all-zero report") {
    auto config = testsupport::make_config();
    bundle::CaptureBundle b;
    b.meta = testsupport::make_meta("hs-empty", {});
    auto r = aggregate_hotspot({pipeline::analyze_bundle(b, config)}, config.input_versions);
    const auto& stats = r.per_page_type.at("captive_portal");
    CHECK(stats.third_party_domains.empty());
    CHECK(stats.known_trackers.empty());
    CHECK(stats.possible_trackers.empty());
    CHECK(stats.fingerprints.total() == 0);
    CHECK(stats.leaks.empty());
}

TEST_CASE("counts always equal the cardinality of their evidence sets") {
    auto config = testsupport::make_config();
    auto r = aggregate_hotspot({pipeline::analyze_bundle(cafe_bundle("d1", 5), config),
                                pipeline::analyze_bundle(cafe_bundle("d2", 9), config)},
                               config.input_versions);
    // render as JSON and cross-check every *_count field against its list
    auto j = nlohmann::json::parse(render(r, RenderFormat::json));
    for (const auto& [page_type, stats] : j.at("page_types").items()) {
        for (const auto& metric : {"third_party_domains", "known_trackers", "possible_trackers",
                                   "mac_destinations"})
            CHECK(stats.at(metric).at("count").get<size_t>() ==
                  stats.at(metric).at("domains").size());
        CHECK(stats.at("leaks").at("count").get<size_t>() ==
              stats.at("leaks").at("findings").size());
        for (const auto& [key, body] : stats.at("cookie_stats").items())
            CHECK(body.at("count").get<size_t>() == body.at("cookies").size());
    }
}

TEST_CASE("JSON rendering round-trips and is schema-versioned") {
    auto config = testsupport::make_config();
    auto r = aggregate_hotspot({pipeline::analyze_bundle(cafe_bundle("d1", 27), config)},
                               config.input_versions);

    std::string out = render(r, RenderFormat::json);
    auto j = nlohmann::json::parse(out);
    CHECK(j.at("schema_version").get<int>() == 1);
    CHECK(j.at("inputs").contains("ownership_db"));

    HotspotReport back = report_from_json(out);
    CHECK(back.hotspot_id == r.hotspot_id);
    CHECK(render(back, RenderFormat::json) == out);

    SUBCASE("rendering is deterministic") {
        CHECK(render(r, RenderFormat::json) == out);
    }
}

TEST_CASE("CSV rendering has one row per metric") {
    auto config = testsupport::make_config();
    auto r = aggregate_hotspot({pipeline::analyze_bundle(cafe_bundle("d1", 3), config)},
                               config.input_versions);
    std::string csv = render(r, RenderFormat::csv);
    auto lines = split(trim(csv), '\n');
    REQUIRE(lines.size() > 2);
    CHECK(lines[0] == "page_type,metric,value");
    for (size_t i = 1; i < lines.size(); ++i)
        CHECK(std::count(lines[i].begin(), lines[i].end(), ',') >= 2);
    CHECK(csv.find("captive_portal,third_party_domains,10") != std::string::npos);
}

TEST_CASE("anti_tracking_diff lists trackers that survived protection") {
    auto config = testsupport::make_config();

    auto bundle_default = cafe_bundle("def", 4);
    auto bundle_protected = cafe_bundle("pro", 0);
    bundle_protected.meta.browsing_mode = bundle::BrowsingMode::adblock;
    // the protected run still reaches 3 of the blacklisted domains
    bundle_protected.transactions.clear();
    for (const auto& host : {"stats.doubleclick.net", "www.google-analytics.com",
                             "connect.facebook.net", "cdn0.quiet-host0.example"}) {
        bundle_protected.transactions.push_back(
            testsupport::make_tx(std::string("p-") + host, kNow, "https://" + std::string(host) + "/x.js"));
    }

    auto a_def = pipeline::analyze_bundle(bundle_default, config);
    auto a_pro = pipeline::analyze_bundle(bundle_protected, config);
    auto diff = anti_tracking_diff(a_def, a_pro, config.filter_set);
    CHECK(diff.unblocked_domains ==
          std::vector<std::string>{"doubleclick.net", "facebook.net", "google-analytics.com"});

    SUBCASE("clean protected bundle yields zero") {
        bundle::CaptureBundle clean;
        clean.meta = testsupport::make_meta("hvm-cafe", {});
        clean.meta.browsing_mode = bundle::BrowsingMode::privacy_badger;
        clean.transactions.push_back(
            testsupport::make_tx("c1", kNow, "https://cdn0.quiet-host0.example/a.css"));
        auto diff2 = anti_tracking_diff(a_def, pipeline::analyze_bundle(clean, config),
                                        config.filter_set);
        CHECK(diff2.unblocked_domains.empty());
    }

    SUBCASE("default-as-protected is the upper bound") {
        auto self = pipeline::analyze_bundle(bundle_default, config);
        self.meta.browsing_mode = bundle::BrowsingMode::adblock;
        auto diff3 = anti_tracking_diff(a_def, self, config.filter_set);
        CHECK(diff3.unblocked_domains.size() == 7);
    }

    SUBCASE("mismatched hotspot ids are an error") {
        auto other = cafe_bundle("x", 0);
        other.meta.hotspot_id = "different";
        other.meta.browsing_mode = bundle::BrowsingMode::adblock;
        CHECK_THROWS_AS(
            anti_tracking_diff(a_def, pipeline::analyze_bundle(other, config), config.filter_set),
            ReportError);
    }
}

TEST_CASE("prevalence_count totals corpus occurrences") {
    std::string corpus;
    for (int i = 0; i < 120; ++i)
        corpus += R"({"site": "site)" + std::to_string(i % 40) +
                  R"(.example", "cookie_domain": "doubleclick.net"})" "\n";
    for (int i = 0; i < 7; ++i)
        corpus += R"({"site": "s.example", "cookie_domain": "demdex.net"})" "\n";
    corpus += R"({"site": "s.example", "cookie_domain": "unrelated.example"})" "\n";

    std::set<std::string> trackers = {"doubleclick.net", "demdex.net", "absent.example"};
    auto counts = prevalence_count(trackers, corpus);
    CHECK(counts.at("doubleclick.net") == 120);  // duplicate pairs each count
    CHECK(counts.at("demdex.net") == 7);
    CHECK(counts.at("absent.example") == 0);
    CHECK(counts.size() == 3);
}

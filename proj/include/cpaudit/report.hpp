#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"
#include "cpaudit/cookies.hpp"
#include "cpaudit/filters.hpp"
#include "cpaudit/fingerprint.hpp"
#include "cpaudit/pii.hpp"

namespace cpaudit::report {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything the upstream modules derive from one bundle.
struct BundleAnalysis {
    bundle::SessionMeta meta;
    std::map<std::string, filters::DomainSummary> domain_summaries;  // third-party registrable
    std::map<std::string, filters::TrackerVerdict> tracker_verdicts;
    std::vector<cookies::CookieAnalysis> cookie_analyses;  // deduplicated
    cookies::PreConsentSummary pre_consent;
    std::vector<fingerprint::FingerprintFinding> fingerprint_findings;
    std::vector<pii::LeakFinding> leaks;
};

struct CookieBucketStats {
    // (party, bucket) -> distinct cookie identities
    std::map<std::pair<std::string, std::string>, std::set<std::string>> evidence;
};

struct PageTypeStats {
    std::set<std::string> third_party_domains;
    std::map<std::string, std::set<std::string>> known_trackers;  // domain -> source labels
    std::set<std::string> possible_trackers;
    CookieBucketStats cookie_stats;
    bool pre_consent_evaluable = false;
    std::set<std::string> pre_consent_cookies;  // identities of persistent pre-consent cookies
    fingerprint::FingerprintAggregate fingerprints;
    std::vector<pii::LeakFinding> leaks;
    std::set<std::string> mac_destinations;
};

struct HotspotReport {
    std::string hotspot_id;
    std::map<std::string, PageTypeStats> per_page_type;  // "captive_portal" / "landing_page"
    std::map<std::string, std::string> inputs;           // list/psl/db/catalog versions, thresholds
};

// Distinct-union aggregation across all datasets of one hotspot. Bundles
// with conflicting owner_domains for the same hotspot are a hard error.
HotspotReport aggregate_hotspot(const std::vector<BundleAnalysis>& analyses,
                                const std::map<std::string, std::string>& inputs = {});

struct AntiTrackingDiff {
    std::vector<std::string> unblocked_domains;  // sorted unique registrable domains
};

// Trackers that survived an anti-tracking configuration: registrable domains
// contacted by the protected bundle that are blacklisted (block match, no
// exception) or set persistent tracking cookies.
AntiTrackingDiff anti_tracking_diff(const BundleAnalysis& bundle_default,
                                    const BundleAnalysis& bundle_protected,
                                    const filters::CompiledFilterSet& filter_set);

// Occurrence counts of hotspot-derived persistent-cookie tracker domains in
// an observation corpus (JSON Lines of {site, cookie_domain}); duplicates
// count every occurrence.
std::map<std::string, long> prevalence_count(const std::set<std::string>& tracker_domains,
                                             const std::string& corpus_jsonl);

enum class RenderFormat { json, csv, text };

std::string render(const HotspotReport& report, RenderFormat format);
HotspotReport report_from_json(const std::string& json_text);

}  // namespace cpaudit::report

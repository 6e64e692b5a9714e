#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"
#include "cpaudit/domains.hpp"
#include "cpaudit/pii.hpp"

namespace cpaudit::cookies {

// Persistence threshold and duration buckets, in seconds.
constexpr std::int64_t kPersistentThresholdSec = 86'400;            // 1 day
constexpr std::int64_t kUnderSixMonthsUpperSec = 182LL * 86'400;    // 182 days
constexpr std::int64_t kFiveYearsUpperSec = 1826LL * 86'400;        // 1826 days

enum class DurationBucket { session, under_6_months, six_months_to_5_years, over_5_years };
std::string to_string(DurationBucket v);

// Total over all lifetimes; [0, 1 day) folds into session for tracking stats.
DurationBucket bucket_for_lifetime(std::optional<std::int64_t> lifetime_seconds);

struct IdentifierThresholds {
    size_t min_length = 8;
    double min_entropy_bits_per_char = 3.0;
};

struct CookieAnalysis {
    bundle::CookieSnapshotRecord record;
    domains::Party party = domains::Party::third_party;
    std::string registrable_domain;
    bool persistent = false;
    std::optional<std::int64_t> lifetime_seconds;
    DurationBucket bucket = DurationBucket::session;
    bool pre_consent = false;
    bool identifier_like = false;
    std::vector<pii::PiiKind> pii_hits;
};

struct ExtractionResult {
    std::vector<bundle::CookieSnapshotRecord> records;
    std::vector<std::string> diagnostics;  // raw Set-Cookie values that failed to parse
};

// One record per Set-Cookie header occurrence plus all snapshot records.
// Max-Age beats Expires; neither present means session cookie.
ExtractionResult extract_cookies(const bundle::CaptureBundle& b);

// Parses a single Set-Cookie header value observed at time `now`.
std::optional<bundle::CookieSnapshotRecord> parse_set_cookie(const std::string& header_value,
                                                             TimestampMs now,
                                                             const std::string& set_by_url);

// Tolerant RFC-6265-style date parsing for Expires attributes.
std::optional<TimestampMs> parse_cookie_date(const std::string& text);

CookieAnalysis analyze_cookie(const bundle::CookieSnapshotRecord& record,
                              const bundle::SessionMeta& meta, const domains::SuffixRuleSet& rules,
                              const domains::OwnershipDb& db,
                              const pii::PiiProfile* profile = nullptr,
                              const IdentifierThresholds& thresholds = {});

// Distinct-cookie identity for counting: (registrable domain, name, path).
std::string cookie_identity(const CookieAnalysis& a);

// Deduplicates by identity, keeping the longer lifetime.
std::vector<CookieAnalysis> dedup_cookies(std::vector<CookieAnalysis> analyses);

struct PreConsentSummary {
    bool evaluable = false;  // false when the bundle has no consent marker
    std::vector<CookieAnalysis> persistent_pre_consent;
};

PreConsentSummary pre_consent_report(const std::vector<CookieAnalysis>& analyses,
                                     const bundle::SessionMeta& meta);

}  // namespace cpaudit::cookies

#include "cpaudit/cookies.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace cpaudit::cookies {

namespace {

const char* kMonths[] = {"jan", "feb", "mar", "apr", "may", "jun",
                         "jul", "aug", "sep", "oct", "nov", "dec"};

// Known-constant tokens stripped before the identifier entropy check.
const char* kKnownConstants[] = {"true", "false", "yes", "no", "null", "undefined", "none"};

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string strip_known_constants(const std::string& value) {
    std::string v = to_lower(value);
    for (const char* c : kKnownConstants) {
        std::string needle(c);
        size_t pos;
        while ((pos = v.find(needle)) != std::string::npos) v.erase(pos, needle.size());
    }
    return v;
}

std::string host_of(const std::string& cookie_domain) {
    return cookie_domain.empty() || cookie_domain[0] != '.' ? cookie_domain
                                                            : cookie_domain.substr(1);
}

}  // namespace

std::string to_string(DurationBucket v) {
    switch (v) {
        case DurationBucket::session: return "session";
        case DurationBucket::under_6_months: return "under_6_months";
        case DurationBucket::six_months_to_5_years: return "six_months_to_5_years";
        case DurationBucket::over_5_years: return "over_5_years";
    }
    return "session";
}

DurationBucket bucket_for_lifetime(std::optional<std::int64_t> lifetime_seconds) {
    if (!lifetime_seconds || *lifetime_seconds < kPersistentThresholdSec)
        return DurationBucket::session;
    if (*lifetime_seconds < kUnderSixMonthsUpperSec) return DurationBucket::under_6_months;
    if (*lifetime_seconds < kFiveYearsUpperSec) return DurationBucket::six_months_to_5_years;
    return DurationBucket::over_5_years;
}

std::optional<TimestampMs> parse_cookie_date(const std::string& text) {
    // RFC 6265 style: scan date-tokens for time, day, month, year in any order.
    int hour = -1, minute = -1, second = -1, day = -1, month = -1, year = -1;
    std::string token;
    auto flush = [&]() {
        if (token.empty()) return;
        std::string t = to_lower(token);
        int h, m, s;
        if (hour < 0 && std::sscanf(t.c_str(), "%d:%d:%d", &h, &m, &s) == 3) {
            hour = h;
            minute = m;
            second = s;
        } else if (month < 0 && t.size() >= 3) {
            for (int i = 0; i < 12; ++i)
                if (t.substr(0, 3) == kMonths[i]) month = i + 1;
        }
        if (std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit((unsigned char)c); })) {
            int v = std::atoi(t.c_str());
            if (day < 0 && t.size() <= 2 && v >= 1 && v <= 31) {
                day = v;
            } else if (year < 0 && (t.size() == 2 || t.size() == 4)) {
                if (v >= 70 && v <= 99) v += 1900;
                else if (v <= 69) v += 2000;
                year = v;
            }
        }
        token.clear();
    };
    for (char c : text) {
        bool delim = !(std::isalnum(static_cast<unsigned char>(c)) || c == ':');
        if (delim)
            flush();
        else
            token += c;
    }
    flush();
    if (hour < 0 || day < 0 || month < 0 || year < 0) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 59 || year < 1601) return std::nullopt;
    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return ((days * 24 + hour) * 60 + minute) * 60000LL + second * 1000LL;
}

std::optional<bundle::CookieSnapshotRecord> parse_set_cookie(const std::string& header_value,
                                                             TimestampMs now,
                                                             const std::string& set_by_url) {
    auto parts = split(header_value, ';');
    if (parts.empty()) return std::nullopt;
    std::string first = trim(parts[0]);
    size_t eq = first.find('=');
    if (eq == std::string::npos || eq == 0) return std::nullopt;

    bundle::CookieSnapshotRecord rec;
    rec.name = trim(first.substr(0, eq));
    rec.value = trim(first.substr(eq + 1));
    rec.creation_time = now;
    rec.set_by_url = set_by_url;
    rec.source = bundle::CookieSource::set_cookie_header;

    auto url = parse_url(set_by_url);
    rec.domain = url ? url->host : "";

    std::optional<std::int64_t> max_age;
    std::optional<TimestampMs> expires;
    for (size_t i = 1; i < parts.size(); ++i) {
        std::string attr = trim(parts[i]);
        size_t a_eq = attr.find('=');
        std::string name = to_lower(trim(a_eq == std::string::npos ? attr : attr.substr(0, a_eq)));
        std::string value = a_eq == std::string::npos ? "" : trim(attr.substr(a_eq + 1));
        if (name == "max-age") {
            try {
                max_age = std::stoll(value);
            } catch (...) {
                return std::nullopt;
            }
        } else if (name == "expires") {
            expires = parse_cookie_date(value);
        } else if (name == "domain" && !value.empty()) {
            rec.domain = to_lower(value[0] == '.' ? value : "." + value);
        } else if (name == "path" && !value.empty()) {
            rec.path = value;
        } else if (name == "secure") {
            rec.secure = true;
        } else if (name == "httponly") {
            rec.http_only = true;
        }
    }
    // Max-Age takes precedence over Expires; neither present => session cookie
    if (max_age)
        rec.expiry_time = now + *max_age * 1000;
    else if (expires)
        rec.expiry_time = *expires;
    if (rec.domain.empty()) return std::nullopt;
    return rec;
}

ExtractionResult extract_cookies(const bundle::CaptureBundle& b) {
    ExtractionResult out;
    for (const auto& tx : b.transactions) {
        for (const auto& [name, value] : tx.response_headers) {
            if (!iequals(name, "Set-Cookie")) continue;
            auto rec = parse_set_cookie(value, tx.ts, tx.url);
            if (!rec) {
                out.diagnostics.push_back(value);
                continue;
            }
            rec->phase = tx.phase;
            out.records.push_back(std::move(*rec));
        }
    }
    out.records.insert(out.records.end(), b.cookie_snapshots.begin(), b.cookie_snapshots.end());
    return out;
}

CookieAnalysis analyze_cookie(const bundle::CookieSnapshotRecord& record,
                              const bundle::SessionMeta& meta, const domains::SuffixRuleSet& rules,
                              const domains::OwnershipDb& db, const pii::PiiProfile* profile,
                              const IdentifierThresholds& thresholds) {
    CookieAnalysis a;
    a.record = record;
    auto verdict = domains::classify_party(host_of(record.domain), meta, db, rules);
    a.party = verdict.party;
    a.registrable_domain = verdict.registrable_domain;

    if (record.expiry_time) {
        std::int64_t seconds = (*record.expiry_time - record.creation_time) / 1000;
        a.lifetime_seconds = seconds < 0 ? 0 : seconds;
    }
    a.persistent = a.lifetime_seconds && *a.lifetime_seconds >= kPersistentThresholdSec;
    a.bucket = bucket_for_lifetime(a.lifetime_seconds);
    a.pre_consent = record.phase == bundle::Phase::pre_consent;

    std::string stripped = strip_known_constants(record.value);
    a.identifier_like = stripped.size() >= thresholds.min_length &&
                        shannon_entropy(stripped) >= thresholds.min_entropy_bits_per_char;

    if (profile) {
        for (const auto& item : profile->items) {
            auto expansion = pii::expand_variants(item);
            for (const auto& v : expansion.variants) {
                if (record.value.find(v.needle) != std::string::npos) {
                    if (a.pii_hits.empty() || a.pii_hits.back() != item.kind)
                        a.pii_hits.push_back(item.kind);
                    break;
                }
            }
        }
    }
    return a;
}

std::string cookie_identity(const CookieAnalysis& a) {
    return a.registrable_domain + "\x1f" + a.record.name + "\x1f" + a.record.path;
}

std::vector<CookieAnalysis> dedup_cookies(std::vector<CookieAnalysis> analyses) {
    std::map<std::string, CookieAnalysis> by_identity;
    for (auto& a : analyses) {
        std::string key = cookie_identity(a);
        auto it = by_identity.find(key);
        if (it == by_identity.end()) {
            by_identity.emplace(std::move(key), std::move(a));
            continue;
        }
        std::int64_t current = it->second.lifetime_seconds.value_or(-1);
        std::int64_t candidate = a.lifetime_seconds.value_or(-1);
        bool replace = candidate > current;
        // keep the pre-consent flag if either record carries it
        bool pre = it->second.pre_consent || a.pre_consent;
        if (replace) it->second = std::move(a);
        it->second.pre_consent = pre;
    }
    std::vector<CookieAnalysis> out;
    out.reserve(by_identity.size());
    for (auto& [_, a] : by_identity) out.push_back(std::move(a));
    return out;
}

PreConsentSummary pre_consent_report(const std::vector<CookieAnalysis>& analyses,
                                     const bundle::SessionMeta& meta) {
    PreConsentSummary out;
    if (!meta.consent_at) return out;  // not evaluable without a consent marker
    out.evaluable = true;
    for (const auto& a : analyses)
        if (a.persistent && a.pre_consent) out.persistent_pre_consent.push_back(a);
    return out;
}

}  // namespace cpaudit::cookies

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpaudit/util.hpp"

namespace cpaudit::bundle {

// Raised for structural problems in a bundle directory or its records.
struct BundleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PageType { captive_portal, landing_page };
enum class Platform { desktop, android };
enum class BrowsingMode { default_mode, private_mode, adblock, privacy_badger };
enum class Transport { plaintext_http, tls };
enum class Phase { pre_consent, post_consent, unknown };

struct SessionMeta {
    std::string hotspot_id;
    PageType page_type = PageType::captive_portal;
    Platform platform = Platform::desktop;
    std::string browser_label;
    BrowsingMode browsing_mode = BrowsingMode::default_mode;
    TimestampMs collected_at = 0;
    std::optional<TimestampMs> consent_at;
    std::vector<std::string> owner_domains;  // registrable; empty means all third-party
    std::optional<std::string> pii_profile_ref;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpTransaction {
    std::string id;
    TimestampMs ts = 0;
    std::string url;
    std::string method = "GET";
    HeaderList request_headers;
    std::optional<int> status;
    HeaderList response_headers;
    std::string request_body;  // excerpt, <= 1 MiB
    bool request_body_truncated = false;
    std::optional<std::string> response_body_ref;  // sha256 hex into bodies/
    Transport transport = Transport::tls;
    std::optional<std::string> initiator_page;
    Phase phase = Phase::unknown;

    std::optional<std::string> header(std::string_view name, bool response = false) const;
};

enum class CookieSource { set_cookie_header, store_snapshot };

struct CookieSnapshotRecord {
    std::string domain;  // host or dot-prefixed scope
    std::string name;
    std::string value;
    std::string path = "/";
    TimestampMs creation_time = 0;
    std::optional<TimestampMs> expiry_time;  // absent => session cookie
    bool secure = false;
    bool http_only = false;
    CookieSource source = CookieSource::set_cookie_header;
    std::optional<std::string> set_by_url;
    Phase phase = Phase::unknown;
};

struct PageSnapshot {
    std::string url;
    Phase phase = Phase::unknown;
    std::string html_body_ref;
};

struct ScriptResource {
    std::string url;  // fetch URL, or "inline:<page url>" for inline blocks
    std::string body_ref;
    Phase phase = Phase::unknown;
};

struct WebStorageEntry {
    std::string origin;
    std::string key;
    std::string value;
    Phase phase = Phase::unknown;
};

struct CaptureBundle {
    SessionMeta meta;
    std::vector<HttpTransaction> transactions;
    std::vector<CookieSnapshotRecord> cookie_snapshots;  // source == store_snapshot
    std::vector<PageSnapshot> pages;
    std::vector<ScriptResource> scripts;
    std::vector<WebStorageEntry> web_storage;
    std::map<std::string, std::string> bodies;  // sha256 hex -> bytes

    const std::string* body(const std::string& ref) const;
    std::string add_body(std::string bytes);  // returns the content ref
};

// Bundle directory layout:
//   manifest.json        SessionMeta
//   transactions.jsonl   one HttpTransaction per line
//   cookies.jsonl        CookieSnapshotRecord lines (store snapshots)
//   webstorage.jsonl     optional key/value snapshot lines
//   bodies/<sha256hex>   raw body bytes
//   dom/pages.jsonl      PageSnapshot lines
//   scripts/scripts.jsonl ScriptResource lines
CaptureBundle load_bundle(const std::string& dir);
void save_bundle(const CaptureBundle& b, const std::string& dir);

struct HarConversionReport {
    size_t entries = 0;
    size_t converted = 0;
    size_t skipped = 0;
    std::vector<std::string> skip_reasons;
};

// Converts a HAR 1.2 document into a bundle. Unparseable entries are
// skipped and accounted for in the report.
CaptureBundle convert_har(const std::string& har_json, const SessionMeta& meta,
                          HarConversionReport* report = nullptr);

// Stamps pre/post consent phases; strict less-than, ties go post_consent.
// consent_at must fall within [first_ts - 1h, last_ts + 1h].
void mark_phase(CaptureBundle& b, TimestampMs consent_at);

// Enum <-> string helpers used by the JSON layer and reports.
std::string to_string(PageType v);
std::string to_string(Platform v);
std::string to_string(BrowsingMode v);
std::string to_string(Transport v);
std::string to_string(Phase v);
PageType page_type_from_string(const std::string& s);
Platform platform_from_string(const std::string& s);
BrowsingMode browsing_mode_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);

}  // namespace cpaudit::bundle

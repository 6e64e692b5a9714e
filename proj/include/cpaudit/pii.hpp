#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"
#include "cpaudit/domains.hpp"
#include "cpaudit/filters.hpp"

namespace cpaudit::pii {

enum class PiiKind {
    full_name,
    first_name,
    last_name,
    email,
    phone,
    postal_code,
    date_of_birth,
    age,
    mac_address,
    membership_number,
    profile_url,
};
std::string to_string(PiiKind v);
std::optional<PiiKind> pii_kind_from_string(const std::string& s);

struct PiiItem {
    PiiKind kind;
    std::string value;  // canonical; MAC in lowercase colon form
};

struct PiiProfile {
    std::vector<PiiItem> items;

    static PiiProfile from_json(const std::string& json_text);
    static PiiProfile load(const std::string& path);
};

enum class Encoding {
    plain,
    case_folded,
    url_encoded,
    base64,
    base64_urlsafe,
    hex,
    md5,
    sha1,
    sha256,
    mac_format_variant,
};
std::string to_string(Encoding v);

struct Variant {
    Encoding encoding;
    std::string needle;
};

struct VariantExpansion {
    std::vector<Variant> variants;
    bool rejected = false;
    std::string reject_reason;
};

// All searched forms of one profile item. Values shorter than 4 characters
// are rejected to bound false positives. Identical needles across encodings
// collapse to the first encoding, so each retained needle is unique.
VariantExpansion expand_variants(const PiiItem& item);

enum class Channel { request_url, referrer_header, cookie, other_header, request_body, web_storage };
std::string to_string(Channel v);

struct LeakFinding {
    PiiKind item;
    Encoding encoding;
    Channel channel;
    bundle::Transport transport = bundle::Transport::tls;
    std::string destination;  // registrable domain
    domains::Party party = domains::Party::third_party;
    std::optional<filters::TrackerStatus> tracker_status;  // attached by the pipeline
    bundle::Phase phase = bundle::Phase::unknown;
    std::string transaction_id;  // empty for snapshot/webstorage findings
    size_t offset = 0;           // byte offset of the needle in the scanned value
};

// Substring search of every variant over request URLs, header values, cookie
// values, body excerpts, and WebStorage snapshots. Findings are deduplicated
// per (item, encoding, channel, transaction) and ordered deterministically.
std::vector<LeakFinding> scan_bundle(const bundle::CaptureBundle& b, const PiiProfile& profile,
                                     const domains::SuffixRuleSet& rules,
                                     const domains::OwnershipDb& db);

// Distinct-hotspot count per receiving root organization for MAC findings.
std::map<std::string, int> mac_exposure_report(
    const std::vector<std::pair<std::string, LeakFinding>>& findings_by_hotspot,
    const domains::OwnershipDb& db);

}  // namespace cpaudit::pii

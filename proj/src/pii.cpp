#include "cpaudit/pii.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "json.hpp"

using nlohmann::json;

namespace cpaudit::pii {

namespace {

bool contains(std::string_view haystack, std::string_view needle, size_t* offset) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    const void* hit = memmem(haystack.data(), haystack.size(), needle.data(), needle.size());
    if (!hit) return false;
    *offset = static_cast<size_t>(static_cast<const char*>(hit) - haystack.data());
    return true;
}

bool looks_like_mac(const std::string& v) {
    if (v.size() != 17) return false;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i % 3 == 2) {
            if (v[i] != ':') return false;
        } else if (!std::isxdigit(static_cast<unsigned char>(v[i]))) {
            return false;
        }
    }
    return true;
}

std::string strip_colons(const std::string& mac, char repl) {
    std::string out;
    for (char c : mac) {
        if (c == ':') {
            if (repl) out += repl;
        } else {
            out += c;
        }
    }
    return out;
}

std::string to_upper(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'a' && c <= 'z') c -= 32;
    return out;
}

struct Scanner {
    const domains::SuffixRuleSet& rules;
    const domains::OwnershipDb& db;
    const bundle::SessionMeta& meta;
    std::vector<std::pair<PiiKind, Variant>> needles;
    std::vector<LeakFinding> findings;
    std::set<std::tuple<int, int, int, std::string>> seen;  // item, encoding, channel, tx id

    void scan_value(std::string_view value, Channel channel, bundle::Transport transport,
                    const std::string& host, bundle::Phase phase, const std::string& tx_id) {
        for (const auto& [kind, variant] : needles) {
            size_t offset = 0;
            if (!contains(value, variant.needle, &offset)) continue;
            auto key = std::make_tuple(static_cast<int>(kind), static_cast<int>(variant.encoding),
                                       static_cast<int>(channel), tx_id);
            if (!seen.insert(key).second) continue;
            LeakFinding f;
            f.item = kind;
            f.encoding = variant.encoding;
            f.channel = channel;
            f.transport = transport;
            auto verdict = domains::classify_party(host, meta, db, rules);
            f.destination = verdict.registrable_domain;
            f.party = verdict.party;
            f.phase = phase;
            f.transaction_id = tx_id;
            f.offset = offset;
            findings.push_back(std::move(f));
        }
    }
};

}  // namespace

std::string to_string(PiiKind v) {
    switch (v) {
        case PiiKind::full_name: return "full_name";
        case PiiKind::first_name: return "first_name";
        case PiiKind::last_name: return "last_name";
        case PiiKind::email: return "email";
        case PiiKind::phone: return "phone";
        case PiiKind::postal_code: return "postal_code";
        case PiiKind::date_of_birth: return "date_of_birth";
        case PiiKind::age: return "age";
        case PiiKind::mac_address: return "mac_address";
        case PiiKind::membership_number: return "membership_number";
        case PiiKind::profile_url: return "profile_url";
    }
    return "unknown";
}

std::optional<PiiKind> pii_kind_from_string(const std::string& s) {
    static const std::map<std::string, PiiKind> kMap = {
        {"full_name", PiiKind::full_name},
        {"first_name", PiiKind::first_name},
        {"last_name", PiiKind::last_name},
        {"email", PiiKind::email},
        {"phone", PiiKind::phone},
        {"postal_code", PiiKind::postal_code},
        {"date_of_birth", PiiKind::date_of_birth},
        {"age", PiiKind::age},
        {"mac_address", PiiKind::mac_address},
        {"membership_number", PiiKind::membership_number},
        {"profile_url", PiiKind::profile_url},
    };
    auto it = kMap.find(s);
    if (it == kMap.end()) return std::nullopt;
    return it->second;
}

std::string to_string(Encoding v) {
    switch (v) {
        case Encoding::plain: return "plain";
        case Encoding::case_folded: return "case_folded";
        case Encoding::url_encoded: return "url_encoded";
        case Encoding::base64: return "base64";
        case Encoding::base64_urlsafe: return "base64_urlsafe";
        case Encoding::hex: return "hex";
        case Encoding::md5: return "md5";
        case Encoding::sha1: return "sha1";
        case Encoding::sha256: return "sha256";
        case Encoding::mac_format_variant: return "mac_format_variant";
    }
    return "plain";
}

std::string to_string(Channel v) {
    switch (v) {
        case Channel::request_url: return "request_url";
        case Channel::referrer_header: return "referrer_header";
        case Channel::cookie: return "cookie";
        case Channel::other_header: return "other_header";
        case Channel::request_body: return "request_body";
        case Channel::web_storage: return "web_storage";
    }
    return "request_url";
}

PiiProfile PiiProfile::from_json(const std::string& json_text) {
    PiiProfile p;
    json doc = json::parse(json_text);
    const json items = doc.value("items", json::object());
    for (const auto& [key, value] : items.items()) {
        auto kind = pii_kind_from_string(key);
        if (!kind) throw std::runtime_error("pii profile: unknown item kind: " + key);
        std::string v = trim(value.get<std::string>());
        if (v.empty()) throw std::runtime_error("pii profile: empty value for " + key);
        if (*kind == PiiKind::mac_address) {
            v = to_lower(v);
            std::string bare;
            for (char c : v)
                if (std::isxdigit(static_cast<unsigned char>(c))) bare += c;
            if (bare.size() == 12) {
                std::string canonical;
                for (size_t i = 0; i < 12; i += 2) {
                    if (!canonical.empty()) canonical += ':';
                    canonical += bare.substr(i, 2);
                }
                v = canonical;
            }
            if (!looks_like_mac(v)) throw std::runtime_error("pii profile: malformed mac_address");
        }
        p.items.push_back({*kind, v});
    }
    return p;
}

PiiProfile PiiProfile::load(const std::string& path) { return from_json(read_file(path)); }

VariantExpansion expand_variants(const PiiItem& item) {
    VariantExpansion out;
    if (item.value.size() < 4) {
        out.rejected = true;
        out.reject_reason = "value shorter than 4 characters";
        return out;
    }
    std::string folded = to_lower(item.value);
    std::string trimmed = trim(folded);

    std::set<std::string> taken;
    auto add = [&](Encoding e, std::string needle) {
        if (needle.empty() || !taken.insert(needle).second) return;
        out.variants.push_back({e, std::move(needle)});
    };

    add(Encoding::plain, item.value);
    add(Encoding::case_folded, folded);
    add(Encoding::url_encoded, percent_encode(item.value));
    add(Encoding::base64, base64_encode(folded));
    add(Encoding::base64_urlsafe, base64_encode(folded, /*url_safe=*/true));
    add(Encoding::hex, hex_encode(folded));
    add(Encoding::md5, md5_hex(trimmed));
    add(Encoding::sha1, sha1_hex(trimmed));
    add(Encoding::sha256, sha256_hex(trimmed));

    if (item.kind == PiiKind::mac_address && looks_like_mac(item.value)) {
        add(Encoding::mac_format_variant, to_upper(item.value));
        add(Encoding::mac_format_variant, strip_colons(item.value, '-'));
        add(Encoding::mac_format_variant, to_upper(strip_colons(item.value, '-')));
        add(Encoding::mac_format_variant, strip_colons(item.value, 0));
        add(Encoding::mac_format_variant, to_upper(strip_colons(item.value, 0)));
    }
    return out;
}

std::vector<LeakFinding> scan_bundle(const bundle::CaptureBundle& b, const PiiProfile& profile,
                                     const domains::SuffixRuleSet& rules,
                                     const domains::OwnershipDb& db) {
    Scanner scanner{rules, db, b.meta, {}, {}, {}};
    for (const auto& item : profile.items) {
        auto expansion = expand_variants(item);
        for (auto& v : expansion.variants) scanner.needles.emplace_back(item.kind, std::move(v));
    }

    for (const auto& tx : b.transactions) {
        auto url = parse_url(tx.url);
        if (!url) continue;
        const std::string& host = url->host;
        scanner.scan_value(tx.url, Channel::request_url, tx.transport, host, tx.phase, tx.id);
        for (const auto& [name, value] : tx.request_headers) {
            Channel channel = Channel::other_header;
            if (iequals(name, "Referer") || iequals(name, "Referrer"))
                channel = Channel::referrer_header;
            else if (iequals(name, "Cookie"))
                channel = Channel::cookie;
            scanner.scan_value(value, channel, tx.transport, host, tx.phase, tx.id);
        }
        for (const auto& [name, value] : tx.response_headers)
            if (iequals(name, "Set-Cookie"))
                scanner.scan_value(value, Channel::cookie, tx.transport, host, tx.phase, tx.id);
        if (!tx.request_body.empty())
            scanner.scan_value(tx.request_body, Channel::request_body, tx.transport, host, tx.phase, tx.id);
    }

    for (const auto& rec : b.cookie_snapshots) {
        std::string host = rec.domain;
        if (!host.empty() && host[0] == '.') host = host.substr(1);
        scanner.scan_value(rec.value, Channel::cookie, bundle::Transport::tls, host, rec.phase,
                           "cookie:" + rec.domain + "/" + rec.name);
    }
    for (const auto& entry : b.web_storage) {
        auto origin = parse_url(entry.origin);
        std::string host = origin ? origin->host : entry.origin;
        scanner.scan_value(entry.value, Channel::web_storage, bundle::Transport::tls, host,
                           entry.phase, "webstorage:" + entry.origin + "/" + entry.key);
    }

    std::sort(scanner.findings.begin(), scanner.findings.end(),
              [](const LeakFinding& a, const LeakFinding& x) {
                  return std::tie(a.transaction_id, a.offset, a.item, a.encoding, a.channel) <
                         std::tie(x.transaction_id, x.offset, x.item, x.encoding, x.channel);
              });
    return scanner.findings;
}

std::map<std::string, int> mac_exposure_report(
    const std::vector<std::pair<std::string, LeakFinding>>& findings_by_hotspot,
    const domains::OwnershipDb& db) {
    std::map<std::string, std::set<std::string>> hotspots_per_org;
    for (const auto& [hotspot, finding] : findings_by_hotspot) {
        if (finding.item != PiiKind::mac_address) continue;
        auto root = db.root_org(finding.destination);
        std::string org = root ? db.org_name(*root) : finding.destination;
        hotspots_per_org[org].insert(hotspot);
    }
    std::map<std::string, int> out;
    for (const auto& [org, hotspots] : hotspots_per_org) out[org] = static_cast<int>(hotspots.size());
    return out;
}

}  // namespace cpaudit::pii

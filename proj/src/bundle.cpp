#include "cpaudit/bundle.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cpaudit::bundle {

namespace {

constexpr size_t kBodyExcerptCap = 1 << 20;  // 1 MiB

json headers_to_json(const HeaderList& h) {
    json arr = json::array();
    for (const auto& [name, value] : h) arr.push_back(json::array({name, value}));
    return arr;
}

HeaderList headers_from_json(const json& arr) {
    HeaderList out;
    for (const auto& pair : arr) out.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    return out;
}

TimestampMs require_ts(const json& j, const char* field) {
    auto ts = parse_iso8601(j.at(field).get<std::string>());
    if (!ts) throw BundleError(std::string("bad timestamp in field ") + field);
    return *ts;
}

json tx_to_json(const HttpTransaction& t) {
    json j;
    j["id"] = t.id;
    j["ts"] = format_iso8601(t.ts);
    j["url"] = t.url;
    j["method"] = t.method;
    j["request_headers"] = headers_to_json(t.request_headers);
    if (t.status) j["status"] = *t.status;
    j["response_headers"] = headers_to_json(t.response_headers);
    if (!t.request_body.empty()) j["request_body_b64"] = base64_encode(t.request_body);
    if (t.request_body_truncated) j["request_body_truncated"] = true;
    if (t.response_body_ref) j["response_body_ref"] = *t.response_body_ref;
    j["transport"] = to_string(t.transport);
    if (t.initiator_page) j["initiator_page"] = *t.initiator_page;
    j["phase"] = to_string(t.phase);
    return j;
}

std::string base64_decode(std::string_view in) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+' || c == '-') return 62;
        if (c == '/' || c == '_') return 63;
        return -1;
    };
    std::string out;
    int buf = 0, bits = 0;
    for (char c : in) {
        if (c == '=') break;
        int v = val(c);
        if (v < 0) continue;
        buf = (buf << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buf >> bits) & 0xFF);
        }
    }
    return out;
}

HttpTransaction tx_from_json(const json& j) {
    HttpTransaction t;
    t.id = j.at("id").get<std::string>();
    t.ts = require_ts(j, "ts");
    t.url = j.at("url").get<std::string>();
    t.method = j.value("method", "GET");
    t.request_headers = headers_from_json(j.value("request_headers", json::array()));
    if (j.contains("status")) t.status = j["status"].get<int>();
    t.response_headers = headers_from_json(j.value("response_headers", json::array()));
    if (j.contains("request_body_b64")) t.request_body = base64_decode(j["request_body_b64"].get<std::string>());
    t.request_body_truncated = j.value("request_body_truncated", false);
    if (j.contains("response_body_ref")) t.response_body_ref = j["response_body_ref"].get<std::string>();
    std::string transport = j.value("transport", "tls");
    t.transport = transport == "plaintext_http" ? Transport::plaintext_http : Transport::tls;
    if (j.contains("initiator_page")) t.initiator_page = j["initiator_page"].get<std::string>();
    t.phase = phase_from_string(j.value("phase", "unknown"));
    return t;
}

json cookie_to_json(const CookieSnapshotRecord& c) {
    json j;
    j["domain"] = c.domain;
    j["name"] = c.name;
    j["value"] = c.value;
    j["path"] = c.path;
    j["creation_time"] = format_iso8601(c.creation_time);
    if (c.expiry_time) j["expiry_time"] = format_iso8601(*c.expiry_time);
    j["secure"] = c.secure;
    j["http_only"] = c.http_only;
    j["source"] = c.source == CookieSource::store_snapshot ? "store_snapshot" : "set_cookie_header";
    if (c.set_by_url) j["set_by_url"] = *c.set_by_url;
    j["phase"] = to_string(c.phase);
    return j;
}

CookieSnapshotRecord cookie_from_json(const json& j) {
    CookieSnapshotRecord c;
    c.domain = j.at("domain").get<std::string>();
    c.name = j.at("name").get<std::string>();
    c.value = j.value("value", "");
    c.path = j.value("path", "/");
    c.creation_time = require_ts(j, "creation_time");
    if (j.contains("expiry_time")) {
        auto ts = parse_iso8601(j["expiry_time"].get<std::string>());
        if (!ts) throw BundleError("bad cookie expiry_time");
        c.expiry_time = *ts;
    }
    c.secure = j.value("secure", false);
    c.http_only = j.value("http_only", false);
    c.source = j.value("source", "store_snapshot") == "set_cookie_header" ? CookieSource::set_cookie_header
                                                                          : CookieSource::store_snapshot;
    if (j.contains("set_by_url")) c.set_by_url = j["set_by_url"].get<std::string>();
    c.phase = phase_from_string(j.value("phase", "unknown"));
    return c;
}

json meta_to_json(const SessionMeta& m) {
    json j;
    j["hotspot_id"] = m.hotspot_id;
    j["page_type"] = to_string(m.page_type);
    j["platform"] = to_string(m.platform);
    j["browser_label"] = m.browser_label;
    j["browsing_mode"] = to_string(m.browsing_mode);
    j["collected_at"] = format_iso8601(m.collected_at);
    if (m.consent_at) j["consent_at"] = format_iso8601(*m.consent_at);
    j["owner_domains"] = m.owner_domains;
    if (m.pii_profile_ref) j["pii_profile_ref"] = *m.pii_profile_ref;
    return j;
}

SessionMeta meta_from_json(const json& j) {
    SessionMeta m;
    m.hotspot_id = j.at("hotspot_id").get<std::string>();
    if (m.hotspot_id.empty()) throw BundleError("manifest: hotspot_id must be non-empty");
    m.page_type = page_type_from_string(j.value("page_type", "captive_portal"));
    m.platform = platform_from_string(j.value("platform", "desktop"));
    m.browser_label = j.value("browser_label", "");
    m.browsing_mode = browsing_mode_from_string(j.value("browsing_mode", "default"));
    m.collected_at = require_ts(j, "collected_at");
    if (j.contains("consent_at")) {
        auto ts = parse_iso8601(j["consent_at"].get<std::string>());
        if (!ts) throw BundleError("manifest: bad consent_at");
        m.consent_at = *ts;
    }
    if (j.contains("owner_domains")) m.owner_domains = j["owner_domains"].get<std::vector<std::string>>();
    if (j.contains("pii_profile_ref")) m.pii_profile_ref = j["pii_profile_ref"].get<std::string>();
    return m;
}

// Applies fn to every non-empty line; errors are rethrown with line numbers.
template <typename Fn>
void for_each_jsonl(const fs::path& file, Fn&& fn) {
    std::ifstream in(file);
    if (!in) return;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const BundleError&) {
            throw;
        } catch (const std::exception& e) {
            throw BundleError(file.filename().string() + ":" + std::to_string(line_no) +
                              ": malformed record: " + e.what());
        }
    }
}

void validate(const CaptureBundle& b) {
    for (const auto& t : b.transactions) {
        auto url = parse_url(t.url);
        if (!url) throw BundleError("transaction " + t.id + ": unparseable url " + t.url);
        bool http = url->scheme == "http";
        if (http != (t.transport == Transport::plaintext_http))
            throw BundleError("transaction " + t.id + ": transport does not match scheme");
        if (t.response_body_ref && !b.body(*t.response_body_ref))
            throw BundleError("transaction " + t.id + ": unresolvable body ref " + *t.response_body_ref);
        if (t.phase == Phase::pre_consent && b.meta.consent_at && t.ts >= *b.meta.consent_at)
            throw BundleError("transaction " + t.id + ": pre_consent phase but ts >= consent_at");
    }
    for (const auto& p : b.pages)
        if (!b.body(p.html_body_ref)) throw BundleError("page " + p.url + ": unresolvable body ref " + p.html_body_ref);
    for (const auto& s : b.scripts)
        if (!b.body(s.body_ref)) throw BundleError("script " + s.url + ": unresolvable body ref " + s.body_ref);
}

}  // namespace

std::optional<std::string> HttpTransaction::header(std::string_view name, bool response) const {
    const HeaderList& list = response ? response_headers : request_headers;
    for (const auto& [n, v] : list)
        if (iequals(n, name)) return v;
    return std::nullopt;
}

const std::string* CaptureBundle::body(const std::string& ref) const {
    auto it = bodies.find(ref);
    return it == bodies.end() ? nullptr : &it->second;
}

std::string CaptureBundle::add_body(std::string bytes) {
    std::string ref = sha256_hex(bytes);
    bodies.emplace(ref, std::move(bytes));
    return ref;
}

CaptureBundle load_bundle(const std::string& dir) {
    fs::path root(dir);
    fs::path manifest = root / "manifest.json";
    if (!fs::exists(manifest)) throw BundleError("missing manifest: " + manifest.string());

    CaptureBundle b;
    try {
        b.meta = meta_from_json(json::parse(read_file(manifest.string())));
    } catch (const BundleError&) {
        throw;
    } catch (const std::exception& e) {
        throw BundleError("manifest.json: " + std::string(e.what()));
    }

    if (fs::exists(root / "bodies")) {
        for (const auto& entry : fs::directory_iterator(root / "bodies")) {
            if (!entry.is_regular_file()) continue;
            b.bodies[entry.path().filename().string()] = read_file(entry.path().string());
        }
    }

    for_each_jsonl(root / "transactions.jsonl", [&](const json& j) { b.transactions.push_back(tx_from_json(j)); });
    for_each_jsonl(root / "cookies.jsonl", [&](const json& j) {
        auto rec = cookie_from_json(j);
        rec.source = CookieSource::store_snapshot;  // snapshot file records only
        b.cookie_snapshots.push_back(std::move(rec));
    });
    for_each_jsonl(root / "dom" / "pages.jsonl", [&](const json& j) {
        b.pages.push_back({j.at("url").get<std::string>(), phase_from_string(j.value("phase", "unknown")),
                           j.at("html_body_ref").get<std::string>()});
    });
    for_each_jsonl(root / "scripts" / "scripts.jsonl", [&](const json& j) {
        b.scripts.push_back({j.at("url").get<std::string>(), j.at("body_ref").get<std::string>(),
                             phase_from_string(j.value("phase", "unknown"))});
    });
    for_each_jsonl(root / "webstorage.jsonl", [&](const json& j) {
        b.web_storage.push_back({j.at("origin").get<std::string>(), j.at("key").get<std::string>(),
                                 j.value("value", ""), phase_from_string(j.value("phase", "unknown"))});
    });

    validate(b);
    return b;
}

void save_bundle(const CaptureBundle& b, const std::string& dir) {
    fs::path root(dir);
    fs::create_directories(root / "bodies");
    fs::create_directories(root / "dom");
    fs::create_directories(root / "scripts");

    atomic_write_file((root / "manifest.json").string(), meta_to_json(b.meta).dump(2) + "\n");

    std::ostringstream txs;
    for (const auto& t : b.transactions) txs << tx_to_json(t).dump() << "\n";
    atomic_write_file((root / "transactions.jsonl").string(), txs.str());

    std::ostringstream cks;
    for (const auto& c : b.cookie_snapshots) cks << cookie_to_json(c).dump() << "\n";
    atomic_write_file((root / "cookies.jsonl").string(), cks.str());

    std::ostringstream pages;
    for (const auto& p : b.pages) {
        json j{{"url", p.url}, {"phase", to_string(p.phase)}, {"html_body_ref", p.html_body_ref}};
        pages << j.dump() << "\n";
    }
    atomic_write_file((root / "dom" / "pages.jsonl").string(), pages.str());

    std::ostringstream scripts;
    for (const auto& s : b.scripts) {
        json j{{"url", s.url}, {"body_ref", s.body_ref}, {"phase", to_string(s.phase)}};
        scripts << j.dump() << "\n";
    }
    atomic_write_file((root / "scripts" / "scripts.jsonl").string(), scripts.str());

    if (!b.web_storage.empty()) {
        std::ostringstream ws;
        for (const auto& e : b.web_storage) {
            json j{{"origin", e.origin}, {"key", e.key}, {"value", e.value}, {"phase", to_string(e.phase)}};
            ws << j.dump() << "\n";
        }
        atomic_write_file((root / "webstorage.jsonl").string(), ws.str());
    }

    for (const auto& [ref, bytes] : b.bodies) atomic_write_file((root / "bodies" / ref).string(), bytes);
}

CaptureBundle convert_har(const std::string& har_json, const SessionMeta& meta, HarConversionReport* report) {
    json doc;
    try {
        doc = json::parse(har_json);
    } catch (const std::exception& e) {
        throw BundleError("not a HAR document: " + std::string(e.what()));
    }
    if (!doc.contains("log") || !doc["log"].contains("entries"))
        throw BundleError("not a HAR document: missing log.entries");

    CaptureBundle b;
    b.meta = meta;
    HarConversionReport local;
    size_t index = 0;
    for (const auto& entry : doc["log"]["entries"]) {
        ++local.entries;
        size_t seq = index++;
        std::string url = entry.value("/request/url"_json_pointer, std::string());
        auto parsed = parse_url(url);
        if (!parsed) {
            ++local.skipped;
            local.skip_reasons.push_back("entry " + std::to_string(seq) + ": unparseable url");
            continue;
        }
        auto ts = parse_iso8601(entry.value("startedDateTime", std::string()));
        if (!ts) {
            ++local.skipped;
            local.skip_reasons.push_back("entry " + std::to_string(seq) + ": bad startedDateTime");
            continue;
        }
        HttpTransaction t;
        t.id = "har-" + std::to_string(seq);
        t.ts = *ts;
        t.url = url;
        t.method = entry.value("/request/method"_json_pointer, std::string("GET"));
        t.transport = parsed->scheme == "http" ? Transport::plaintext_http : Transport::tls;
        for (const auto& h : entry.value("/request/headers"_json_pointer, json::array()))
            t.request_headers.emplace_back(h.value("name", ""), h.value("value", ""));
        for (const auto& h : entry.value("/response/headers"_json_pointer, json::array()))
            t.response_headers.emplace_back(h.value("name", ""), h.value("value", ""));
        if (entry.contains("/response/status"_json_pointer)) {
            int status = entry["/response/status"_json_pointer].get<int>();
            if (status > 0) t.status = status;
        }
        std::string post = entry.value("/request/postData/text"_json_pointer, std::string());
        if (!post.empty()) {
            if (post.size() > kBodyExcerptCap) {
                post.resize(kBodyExcerptCap);
                t.request_body_truncated = true;
            }
            t.request_body = std::move(post);
        }
        std::string content = entry.value("/response/content/text"_json_pointer, std::string());
        if (!content.empty()) {
            if (entry.value("/response/content/encoding"_json_pointer, std::string()) == "base64")
                content = base64_decode(content);
            if (content.size() > kBodyExcerptCap) content.resize(kBodyExcerptCap);
            t.response_body_ref = b.add_body(std::move(content));
        }
        ++local.converted;
        b.transactions.push_back(std::move(t));
    }
    if (report) *report = local;
    return b;
}

void mark_phase(CaptureBundle& b, TimestampMs consent_at) {
    if (!b.transactions.empty()) {
        auto [min_it, max_it] = std::minmax_element(
            b.transactions.begin(), b.transactions.end(),
            [](const HttpTransaction& a, const HttpTransaction& x) { return a.ts < x.ts; });
        constexpr TimestampMs kHourMs = 3600000;
        if (consent_at < min_it->ts - kHourMs || consent_at > max_it->ts + kHourMs)
            throw BundleError("consent_at outside bundle time range [first-1h, last+1h]");
    }
    auto stamp = [consent_at](TimestampMs ts) {
        return ts < consent_at ? Phase::pre_consent : Phase::post_consent;
    };
    for (auto& t : b.transactions) t.phase = stamp(t.ts);
    for (auto& c : b.cookie_snapshots) c.phase = stamp(c.creation_time);
    b.meta.consent_at = consent_at;
}

std::string to_string(PageType v) { return v == PageType::captive_portal ? "captive_portal" : "landing_page"; }
std::string to_string(Platform v) { return v == Platform::desktop ? "desktop" : "android"; }
std::string to_string(BrowsingMode v) {
    switch (v) {
        case BrowsingMode::default_mode: return "default";
        case BrowsingMode::private_mode: return "private";
        case BrowsingMode::adblock: return "adblock";
        case BrowsingMode::privacy_badger: return "privacy_badger";
    }
    return "default";
}
std::string to_string(Transport v) { return v == Transport::plaintext_http ? "plaintext_http" : "tls"; }
std::string to_string(Phase v) {
    switch (v) {
        case Phase::pre_consent: return "pre_consent";
        case Phase::post_consent: return "post_consent";
        case Phase::unknown: return "unknown";
    }
    return "unknown";
}

PageType page_type_from_string(const std::string& s) {
    if (s == "captive_portal") return PageType::captive_portal;
    if (s == "landing_page") return PageType::landing_page;
    throw BundleError("unknown page_type: " + s);
}
Platform platform_from_string(const std::string& s) {
    if (s == "desktop") return Platform::desktop;
    if (s == "android") return Platform::android;
    throw BundleError("unknown platform: " + s);
}
BrowsingMode browsing_mode_from_string(const std::string& s) {
    if (s == "default") return BrowsingMode::default_mode;
    if (s == "private") return BrowsingMode::private_mode;
    if (s == "adblock") return BrowsingMode::adblock;
    if (s == "privacy_badger") return BrowsingMode::privacy_badger;
    throw BundleError("unknown browsing_mode: " + s);
}
Phase phase_from_string(const std::string& s) {
    if (s == "pre_consent") return Phase::pre_consent;
    if (s == "post_consent") return Phase::post_consent;
    return Phase::unknown;
}

}  // namespace cpaudit::bundle

#include "cpaudit/filters.hpp"

#include <algorithm>
#include <cctype>

namespace cpaudit::filters {

namespace {

bool is_separator(char c) {
    return c == '/' || c == ':' || c == '?' || c == '=' || c == '&' || c == '#';
}

bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

// Backtracking match of pattern[j..] against url[i..]; '*' spans anything,
// '^' is a separator or end-of-url.
bool match_here(const std::string& url, size_t i, const std::string& pat, size_t j, bool end_anchor) {
    while (true) {
        if (j == pat.size()) return !end_anchor || i == url.size();
        char p = pat[j];
        if (p == '*') {
            // collapse consecutive stars
            while (j < pat.size() && pat[j] == '*') ++j;
            if (j == pat.size()) return true;  // trailing '*' always reaches the end
            for (size_t k = i; k <= url.size(); ++k)
                if (match_here(url, k, pat, j, end_anchor)) return true;
            return false;
        }
        if (p == '^') {
            if (i == url.size()) {
                ++j;  // zero-width at end of url
                continue;
            }
            if (!is_separator(url[i])) return false;
            ++i;
            ++j;
            continue;
        }
        if (i == url.size() || url[i] != p) return false;
        ++i;
        ++j;
    }
}

// Start positions valid for a domain-anchored rule: the beginning of the
// host, or any position right after a '.' inside the host.
std::vector<size_t> domain_anchor_positions(const RequestContext& ctx) {
    std::vector<size_t> out;
    size_t scheme_end = ctx.url.find("://");
    if (scheme_end == std::string::npos) return out;
    size_t host_start = ctx.url.find(ctx.host, scheme_end + 3);
    if (host_start == std::string::npos) return out;
    out.push_back(host_start);
    for (size_t i = 0; i < ctx.host.size(); ++i)
        if (ctx.host[i] == '.') out.push_back(host_start + i + 1);
    return out;
}

bool pattern_matches(const FilterRule& rule, const RequestContext& ctx) {
    switch (rule.anchor) {
        case Anchor::start:
            return match_here(ctx.url, 0, rule.pattern, 0, rule.end_anchor);
        case Anchor::domain:
            for (size_t pos : domain_anchor_positions(ctx))
                if (match_here(ctx.url, pos, rule.pattern, 0, rule.end_anchor)) return true;
            return false;
        case Anchor::none:
            for (size_t pos = 0; pos <= ctx.url.size(); ++pos)
                if (match_here(ctx.url, pos, rule.pattern, 0, rule.end_anchor)) return true;
            return false;
    }
    return false;
}

bool domain_option_matches(const FilterRule& rule, const RequestContext& ctx) {
    auto applies = [&](const std::string& d) {
        return ctx.page_domain == d || ends_with(ctx.page_domain, "." + d);
    };
    for (const auto& d : rule.domains_exclude)
        if (applies(d)) return false;
    if (rule.domains_include.empty()) return true;
    for (const auto& d : rule.domains_include)
        if (applies(d)) return true;
    return false;
}

std::optional<ResourceType> type_from_name(const std::string& name) {
    if (name == "script") return ResourceType::script;
    if (name == "image") return ResourceType::image;
    if (name == "stylesheet") return ResourceType::stylesheet;
    if (name == "xmlhttprequest") return ResourceType::xmlhttprequest;
    if (name == "subdocument") return ResourceType::subdocument;
    if (name == "other") return ResourceType::other;
    return std::nullopt;
}

}  // namespace

std::string to_string(SourceLabel v) {
    switch (v) {
        case SourceLabel::advertising: return "advertising";
        case SourceLabel::privacy: return "privacy";
        case SourceLabel::social: return "social";
    }
    return "advertising";
}

std::string to_string(ResourceType v) {
    switch (v) {
        case ResourceType::script: return "script";
        case ResourceType::image: return "image";
        case ResourceType::stylesheet: return "stylesheet";
        case ResourceType::xmlhttprequest: return "xmlhttprequest";
        case ResourceType::subdocument: return "subdocument";
        case ResourceType::other: return "other";
    }
    return "other";
}

std::string to_string(TrackerStatus v) {
    switch (v) {
        case TrackerStatus::known_tracker: return "known_tracker";
        case TrackerStatus::possible_tracker: return "possible_tracker";
        case TrackerStatus::non_tracker: return "non_tracker";
    }
    return "non_tracker";
}

ResourceType infer_resource_type(const std::string& url_path,
                                 const std::optional<std::string>& accept_header) {
    std::string path = to_lower(url_path);
    size_t q = path.find('?');
    if (q != std::string::npos) path = path.substr(0, q);
    if (ends_with(path, ".js") || ends_with(path, ".mjs")) return ResourceType::script;
    if (ends_with(path, ".css")) return ResourceType::stylesheet;
    for (const char* ext : {".png", ".jpg", ".jpeg", ".gif", ".webp", ".svg", ".ico", ".bmp"})
        if (ends_with(path, ext)) return ResourceType::image;
    if (ends_with(path, ".html") || ends_with(path, ".htm")) return ResourceType::subdocument;
    if (accept_header) {
        std::string accept = to_lower(*accept_header);
        if (accept.find("text/css") != std::string::npos) return ResourceType::stylesheet;
        if (accept.find("image/") != std::string::npos) return ResourceType::image;
        if (accept.find("javascript") != std::string::npos) return ResourceType::script;
        if (accept.find("application/json") != std::string::npos) return ResourceType::xmlhttprequest;
        if (accept.find("text/html") != std::string::npos) return ResourceType::subdocument;
    }
    return ResourceType::other;
}

RequestContext make_context(const bundle::HttpTransaction& tx, const domains::PartyVerdict& party,
                            const domains::SuffixRuleSet& rules) {
    RequestContext ctx;
    ctx.url = to_lower(tx.url);
    ctx.host = party.domain;
    ctx.third_party = party.party == domains::Party::third_party;
    auto parsed = parse_url(tx.url);
    std::string path_query = parsed ? parsed->path + (parsed->query.empty() ? "" : "?" + parsed->query) : "";
    ctx.type = infer_resource_type(path_query, tx.header("Accept"));
    if (tx.initiator_page) {
        auto page = parse_url(*tx.initiator_page);
        if (page) ctx.page_domain = domains::registrable_domain(page->host, rules).value;
    } else {
        ctx.page_domain = party.registrable_domain;
    }
    return ctx;
}

bool rule_matches(const FilterRule& rule, const RequestContext& ctx) {
    if (rule.third_party == ThirdPartyOption::third_party_only && !ctx.third_party) return false;
    if (rule.third_party == ThirdPartyOption::first_party_only && ctx.third_party) return false;
    if (!domain_option_matches(rule, ctx)) return false;
    if (!rule.types.empty() && !rule.types.count(ctx.type)) return false;
    return pattern_matches(rule, ctx);
}

ParseStats CompiledFilterSet::add_list(const std::string& text, SourceLabel label) {
    ParseStats stats;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line[0] == '!' || line[0] == '[') {  // comments, [Adblock Plus ...] headers
            ++stats.skipped;
            continue;
        }
        // element-hiding and related cosmetic rules are not network rules
        if (line.find("##") != std::string::npos || line.find("#@#") != std::string::npos ||
            line.find("#?#") != std::string::npos || line.find("#$#") != std::string::npos) {
            ++stats.skipped;
            continue;
        }

        FilterRule rule;
        rule.raw = line;
        rule.label = label;
        std::string body = line;
        if (starts_with(body, "@@")) {
            rule.exception = true;
            body = body.substr(2);
        }

        // options after the last '$' (a '$' inside the pattern is rare in
        // network rules; EasyList uses it exclusively as the separator)
        size_t dollar = body.rfind('$');
        if (dollar != std::string::npos && dollar > 0) {
            std::string opts = body.substr(dollar + 1);
            body = body.substr(0, dollar);
            for (auto& opt : split(opts, ',')) {
                std::string o = trim(to_lower(opt));
                if (o.empty()) continue;
                if (o == "third-party") {
                    rule.third_party = ThirdPartyOption::third_party_only;
                } else if (o == "~third-party" || o == "first-party") {
                    rule.third_party = ThirdPartyOption::first_party_only;
                } else if (starts_with(o, "domain=")) {
                    for (auto& d : split(o.substr(7), '|')) {
                        if (d.empty()) continue;
                        if (d[0] == '~')
                            rule.domains_exclude.push_back(d.substr(1));
                        else
                            rule.domains_include.push_back(d);
                    }
                } else if (auto type = type_from_name(o)) {
                    rule.types.insert(*type);
                } else {
                    // unsupported option: keep the rule, treat the option as matching
                    rule.unsupported_conservative = true;
                }
            }
        }

        if (starts_with(body, "||")) {
            rule.anchor = Anchor::domain;
            body = body.substr(2);
        } else if (starts_with(body, "|")) {
            rule.anchor = Anchor::start;
            body = body.substr(1);
        }
        if (!body.empty() && body.back() == '|') {
            rule.end_anchor = true;
            body.pop_back();
        }
        if (body.empty()) {
            ++stats.skipped;
            continue;
        }
        rule.pattern = to_lower(body);
        rule.id = rules_.size();
        rules_.push_back(std::move(rule));
        index_rule(rules_.size() - 1);
        ++stats.rules;
    }
    return stats;
}

// A token is safe as an index key when any URL matching the rule must
// contain it as a complete alphanumeric run: both of its boundaries in the
// pattern are separator-like literals, anchors, or '^', never '*' or the
// edge of an unanchored pattern.
void CompiledFilterSet::index_rule(size_t idx) {
    const FilterRule& rule = rules_[idx];
    const std::string& pat = rule.pattern;
    std::string best;
    size_t i = 0;
    while (i < pat.size()) {
        if (!is_token_char(pat[i])) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < pat.size() && is_token_char(pat[i])) ++i;
        bool left_ok = start == 0 ? rule.anchor != Anchor::none : pat[start - 1] != '*';
        bool right_ok = i == pat.size() ? rule.end_anchor : pat[i] != '*';
        // a domain-anchored token touching the host boundary ends at '.' in
        // any match, so the left pattern edge is safe for Anchor::domain
        if (i - start >= 3 && left_ok && right_ok) {
            std::string tok = pat.substr(start, i - start);
            if (tok.size() > best.size()) best = tok;
        }
    }
    if (best.empty())
        unindexed_.push_back(idx);
    else
        token_index_[best].push_back(idx);
}

// Returns the lowest-id matching rule so that the indexed and naive routes
// agree on the exact rule, not only on blocked-ness.
const FilterRule* CompiledFilterSet::match_side(const RequestContext& ctx, bool exceptions,
                                                bool naive) const {
    const FilterRule* best = nullptr;
    auto consider = [&](size_t idx) {
        const FilterRule& r = rules_[idx];
        if (r.exception != exceptions) return;
        if (best && best->id <= r.id) return;
        if (rule_matches(r, ctx)) best = &r;
    };
    if (naive) {
        for (size_t i = 0; i < rules_.size(); ++i) consider(i);
        return best;
    }
    for (size_t idx : unindexed_) consider(idx);
    size_t i = 0;
    const std::string& url = ctx.url;
    while (i < url.size()) {
        if (!is_token_char(url[i])) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < url.size() && is_token_char(url[i])) ++i;
        auto it = token_index_.find(url.substr(start, i - start));
        if (it == token_index_.end()) continue;
        for (size_t idx : it->second) consider(idx);
    }
    return best;
}

const FilterRule* CompiledFilterSet::match(const RequestContext& ctx) const {
    const FilterRule* block = match_side(ctx, /*exceptions=*/false, /*naive=*/false);
    if (!block) return nullptr;
    if (match_side(ctx, /*exceptions=*/true, /*naive=*/false)) return nullptr;
    return block;
}

const FilterRule* CompiledFilterSet::match_naive(const RequestContext& ctx) const {
    const FilterRule* block = match_side(ctx, /*exceptions=*/false, /*naive=*/true);
    if (!block) return nullptr;
    if (match_side(ctx, /*exceptions=*/true, /*naive=*/true)) return nullptr;
    return block;
}

CompiledFilterSet parse_filter_list(const std::string& text, SourceLabel label, ParseStats* stats) {
    CompiledFilterSet set;
    ParseStats s = set.add_list(text, label);
    if (stats) *stats = s;
    return set;
}

TrackerVerdict classify_tracker(const DomainSummary& summary) {
    TrackerVerdict v;
    v.domain = summary.registrable_domain;
    if (summary.party == domains::Party::first_party) {
        v.status = TrackerStatus::non_tracker;
        return v;
    }
    if (!summary.matched_labels.empty()) {
        v.status = TrackerStatus::known_tracker;
        v.labels = summary.matched_labels;
        v.evidence = summary.matched_rules;
        return v;
    }
    if (summary.signals.any()) {
        v.status = TrackerStatus::possible_tracker;
        if (summary.signals.sets_persistent_cookie) v.evidence.push_back("sets_persistent_cookie");
        if (summary.signals.receives_persistent_cookie) v.evidence.push_back("receives_persistent_cookie");
        if (summary.signals.receives_identifier_leak) v.evidence.push_back("receives_identifier_leak");
        return v;
    }
    v.status = TrackerStatus::non_tracker;
    return v;
}

}  // namespace cpaudit::filters

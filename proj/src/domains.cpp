#include "cpaudit/domains.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

using nlohmann::json;

namespace cpaudit::domains {

namespace {

std::vector<std::string> host_labels(const std::string& host) { return split(host, '.'); }

// rule labels match the rightmost host labels; '*' matches any single label
bool rule_matches(const std::vector<std::string>& rule, const std::vector<std::string>& host) {
    if (rule.size() > host.size()) return false;
    for (size_t i = 0; i < rule.size(); ++i) {
        const std::string& r = rule[rule.size() - 1 - i];
        const std::string& h = host[host.size() - 1 - i];
        if (r != "*" && r != h) return false;
    }
    return true;
}

bool is_ip_literal(const std::string& host) {
    if (host.find(':') != std::string::npos) return true;  // IPv6
    bool all_numeric = !host.empty();
    for (char c : host)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') all_numeric = false;
    return all_numeric;
}

std::string join_tail(const std::vector<std::string>& labels, size_t count) {
    std::string out;
    for (size_t i = labels.size() - count; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += labels[i];
    }
    return out;
}

}  // namespace

void SuffixRuleSet::add_rule(const std::string& rule_line) {
    if (rule_line.empty()) return;
    if (rule_line[0] == '!') {
        exception_.insert(to_lower(rule_line.substr(1)));
    } else if (starts_with(rule_line, "*.")) {
        wildcard_.insert(to_lower(rule_line.substr(2)));
    } else {
        normal_.insert(to_lower(rule_line));
    }
}

std::string SuffixRuleSet::public_suffix(const std::string& host) const {
    auto labels = host_labels(host);

    // exception rules win; the suffix is the exception with its leftmost label removed
    for (const auto& exc : exception_) {
        auto rule = host_labels(exc);
        if (rule_matches(rule, labels)) return join_tail(rule, rule.size() - 1);
    }

    size_t best = 0;  // label count of the prevailing rule; implicit "*" rule = 1
    for (const auto& n : normal_) {
        auto rule = host_labels(n);
        if (rule.size() > best && rule_matches(rule, labels)) best = rule.size();
    }
    for (const auto& w : wildcard_) {
        auto rule = host_labels("*." + w);
        if (rule.size() > best && rule_matches(rule, labels)) best = rule.size();
    }
    if (best == 0) best = 1;
    if (best > labels.size()) best = labels.size();
    return join_tail(labels, best);
}

PslParseResult parse_psl(const std::string& text) {
    PslParseResult out;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || starts_with(line, "//")) continue;
        // rules end at the first whitespace
        size_t ws = line.find_first_of(" \t");
        if (ws != std::string::npos) line = line.substr(0, ws);
        bool valid = true;
        std::string body = line[0] == '!' ? line.substr(1) : line;
        if (body.empty() || body[0] == '.' || body.back() == '.') valid = false;
        for (const auto& label : split(body, '.'))
            if (label.empty()) valid = false;
        if (!valid) {
            ++out.skipped_lines;
            continue;
        }
        out.rules.add_rule(line);
    }
    return out;
}

RegistrableDomain registrable_domain(const std::string& raw_host, const SuffixRuleSet& rules) {
    if (raw_host.empty()) throw DomainError("empty host");
    std::string host = to_lower(raw_host);
    if (is_ip_literal(host)) return {host, false};
    if (host.front() == '.' || host.back() == '.' || host.find("..") != std::string::npos)
        throw DomainError("malformed host: " + raw_host);

    std::string suffix = rules.public_suffix(host);
    if (suffix == host) return {host, true};

    auto labels = host_labels(host);
    auto suffix_labels = host_labels(suffix);
    return {join_tail(labels, suffix_labels.size() + 1), false};
}

OwnershipDb OwnershipDb::from_json(const std::string& json_text) {
    OwnershipDb db;
    json doc = json::parse(json_text);
    db.version_ = doc.value("version", "unversioned");
    const json domains = doc.value("domains", json::object());
    const json orgs = doc.value("orgs", json::object());
    for (const auto& [domain, org] : domains.items())
        db.domain_to_org_[to_lower(domain)] = org.get<std::string>();
    for (const auto& [id, body] : orgs.items()) {
        db.org_names_[id] = body.value("name", id);
        if (body.contains("parent")) db.org_parent_[id] = body["parent"].get<std::string>();
    }
    // reject parent cycles at load time
    for (const auto& [id, _] : db.org_names_) {
        OrgId cur = id;
        size_t hops = 0;
        while (true) {
            auto it = db.org_parent_.find(cur);
            if (it == db.org_parent_.end()) break;
            cur = it->second;
            if (++hops > db.org_names_.size()) throw DomainError("ownership db: parent cycle through " + id);
        }
    }
    return db;
}

OwnershipDb OwnershipDb::load(const std::string& path) { return from_json(read_file(path)); }

std::optional<OrgId> OwnershipDb::org_for_domain(const std::string& registrable) const {
    auto it = domain_to_org_.find(to_lower(registrable));
    if (it == domain_to_org_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> OwnershipDb::owner_chain(const std::string& registrable) const {
    std::vector<std::string> chain;
    auto org = org_for_domain(registrable);
    if (!org) return chain;
    OrgId cur = *org;
    while (true) {
        chain.push_back(org_name(cur));
        auto it = org_parent_.find(cur);
        if (it == org_parent_.end()) break;
        cur = it->second;
    }
    return chain;
}

std::optional<OrgId> OwnershipDb::root_org(const std::string& registrable) const {
    auto org = org_for_domain(registrable);
    if (!org) return std::nullopt;
    OrgId cur = *org;
    while (true) {
        auto it = org_parent_.find(cur);
        if (it == org_parent_.end()) return cur;
        cur = it->second;
    }
}

std::string OwnershipDb::org_name(const OrgId& id) const {
    auto it = org_names_.find(id);
    return it == org_names_.end() ? id : it->second;
}

PartyVerdict classify_party(const std::string& host, const bundle::SessionMeta& meta,
                            const OwnershipDb& db, const SuffixRuleSet& rules) {
    PartyVerdict v;
    v.domain = to_lower(host);
    v.registrable_domain = registrable_domain(host, rules).value;
    v.owner_org = db.org_for_domain(v.registrable_domain);
    v.party = Party::third_party;

    auto host_root = db.root_org(v.registrable_domain);
    for (const auto& owner : meta.owner_domains) {
        std::string owner_reg = registrable_domain(owner, rules).value;
        if (owner_reg == v.registrable_domain) {
            v.party = Party::first_party;
            return v;
        }
        auto owner_root = db.root_org(owner_reg);
        if (owner_root && host_root && *owner_root == *host_root) {
            v.party = Party::first_party;
            return v;
        }
    }
    return v;
}

}  // namespace cpaudit::domains

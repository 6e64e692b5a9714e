#include "cpaudit/pipeline.hpp"

#include <algorithm>

namespace cpaudit::pipeline {

report::BundleAnalysis analyze_bundle(const bundle::CaptureBundle& b, const AnalysisConfig& config) {
    report::BundleAnalysis out;
    out.meta = b.meta;

    // cookies
    auto extraction = cookies::extract_cookies(b);
    std::vector<cookies::CookieAnalysis> analyses;
    analyses.reserve(extraction.records.size());
    const pii::PiiProfile* profile = config.profile ? &*config.profile : nullptr;
    for (const auto& rec : extraction.records)
        analyses.push_back(cookies::analyze_cookie(rec, b.meta, config.psl, config.ownership,
                                                   profile, config.thresholds));
    out.cookie_analyses = cookies::dedup_cookies(std::move(analyses));
    out.pre_consent = cookies::pre_consent_report(out.cookie_analyses, b.meta);

    // per-domain transaction summaries + filter matches
    for (const auto& tx : b.transactions) {
        auto url = parse_url(tx.url);
        if (!url) continue;
        auto party = domains::classify_party(url->host, b.meta, config.ownership, config.psl);
        if (party.party != domains::Party::third_party) continue;
        auto& summary = out.domain_summaries[party.registrable_domain];
        summary.registrable_domain = party.registrable_domain;
        summary.party = party.party;
        auto ctx = filters::make_context(tx, party, config.psl);
        if (const filters::FilterRule* rule = config.filter_set.match(ctx)) {
            summary.matched_labels.insert(rule->label);
            if (std::find(summary.matched_rules.begin(), summary.matched_rules.end(), rule->raw) ==
                summary.matched_rules.end())
                summary.matched_rules.push_back(rule->raw);
        }
        if (tx.header("Cookie")) summary.signals.receives_persistent_cookie = true;  // refined below
    }

    // behavioral signals from cookie analyses
    std::set<std::string> persistent_cookie_domains;
    for (const auto& c : out.cookie_analyses)
        if (c.persistent && c.party == domains::Party::third_party)
            persistent_cookie_domains.insert(c.registrable_domain);
    for (auto& [domain, summary] : out.domain_summaries) {
        bool has_persistent = persistent_cookie_domains.count(domain) > 0;
        summary.signals.sets_persistent_cookie = has_persistent;
        // "receives" requires both a Cookie request header and a persistent cookie
        summary.signals.receives_persistent_cookie &= has_persistent;
    }

    // PII scanning, then fold identifier receipt back into the signals
    if (profile) {
        out.leaks = pii::scan_bundle(b, *profile, config.psl, config.ownership);
        for (const auto& f : out.leaks) {
            auto it = out.domain_summaries.find(f.destination);
            if (it != out.domain_summaries.end())
                it->second.signals.receives_identifier_leak = true;
        }
    }

    for (const auto& [domain, summary] : out.domain_summaries)
        out.tracker_verdicts[domain] = filters::classify_tracker(summary);
    for (auto& f : out.leaks) {
        auto it = out.tracker_verdicts.find(f.destination);
        if (it != out.tracker_verdicts.end()) f.tracker_status = it->second.status;
    }

    // fingerprinting over captured scripts
    for (const auto& script : b.scripts) {
        const std::string* body = b.body(script.body_ref);
        if (!body) continue;
        auto findings = fingerprint::scan_script(script, *body, config.catalog);
        out.fingerprint_findings.insert(out.fingerprint_findings.end(), findings.begin(),
                                        findings.end());
        if (auto font = fingerprint::font_heuristic(script, *body, config.catalog))
            out.fingerprint_findings.push_back(std::move(*font));
    }
    return out;
}

std::vector<report::HotspotReport> aggregate_all(const std::vector<report::BundleAnalysis>& analyses,
                                                 const AnalysisConfig& config) {
    std::map<std::string, std::vector<report::BundleAnalysis>> by_hotspot;
    for (const auto& a : analyses) by_hotspot[a.meta.hotspot_id].push_back(a);
    std::vector<report::HotspotReport> out;
    for (const auto& [_, group] : by_hotspot)
        out.push_back(report::aggregate_hotspot(group, config.input_versions));
    return out;
}

}  // namespace cpaudit::pipeline

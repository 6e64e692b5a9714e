#include "cpaudit/report.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

using nlohmann::json;

namespace cpaudit::report {

namespace {

std::string party_name(domains::Party p) {
    return p == domains::Party::first_party ? "first_party" : "third_party";
}

json leak_to_json(const pii::LeakFinding& f) {
    json j;
    j["item"] = pii::to_string(f.item);
    j["encoding"] = pii::to_string(f.encoding);
    j["channel"] = pii::to_string(f.channel);
    j["transport"] = bundle::to_string(f.transport);
    j["destination"] = f.destination;
    j["party"] = party_name(f.party);
    if (f.tracker_status) j["tracker_status"] = filters::to_string(*f.tracker_status);
    j["phase"] = bundle::to_string(f.phase);
    j["transaction_id"] = f.transaction_id;
    j["offset"] = f.offset;
    return j;
}

pii::LeakFinding leak_from_json(const json& j) {
    pii::LeakFinding f;
    f.item = *pii::pii_kind_from_string(j.at("item").get<std::string>());
    std::string enc = j.at("encoding").get<std::string>();
    for (int e = 0; e <= static_cast<int>(pii::Encoding::mac_format_variant); ++e)
        if (pii::to_string(static_cast<pii::Encoding>(e)) == enc)
            f.encoding = static_cast<pii::Encoding>(e);
    std::string ch = j.at("channel").get<std::string>();
    for (int c = 0; c <= static_cast<int>(pii::Channel::web_storage); ++c)
        if (pii::to_string(static_cast<pii::Channel>(c)) == ch)
            f.channel = static_cast<pii::Channel>(c);
    f.transport = j.at("transport").get<std::string>() == "plaintext_http"
                      ? bundle::Transport::plaintext_http
                      : bundle::Transport::tls;
    f.destination = j.at("destination").get<std::string>();
    f.party = j.at("party").get<std::string>() == "first_party" ? domains::Party::first_party
                                                                : domains::Party::third_party;
    if (j.contains("tracker_status")) {
        std::string ts = j["tracker_status"].get<std::string>();
        for (int s = 0; s <= static_cast<int>(filters::TrackerStatus::non_tracker); ++s)
            if (filters::to_string(static_cast<filters::TrackerStatus>(s)) == ts)
                f.tracker_status = static_cast<filters::TrackerStatus>(s);
    }
    f.phase = bundle::phase_from_string(j.at("phase").get<std::string>());
    f.transaction_id = j.value("transaction_id", "");
    f.offset = j.value("offset", size_t{0});
    return f;
}

json stats_to_json(const PageTypeStats& s) {
    json j;
    j["third_party_domains"] = {{"count", s.third_party_domains.size()},
                                {"domains", s.third_party_domains}};
    json known = json::object();
    for (const auto& [domain, labels] : s.known_trackers) known[domain] = labels;
    j["known_trackers"] = {{"count", s.known_trackers.size()}, {"domains", known}};
    j["possible_trackers"] = {{"count", s.possible_trackers.size()},
                              {"domains", s.possible_trackers}};
    json cookie_stats = json::object();
    for (const auto& [key, identities] : s.cookie_stats.evidence) {
        cookie_stats[key.first + "/" + key.second] = {{"count", identities.size()},
                                                      {"cookies", identities}};
    }
    j["cookie_stats"] = cookie_stats;
    j["pre_consent"] = {{"evaluable", s.pre_consent_evaluable},
                        {"count", s.pre_consent_cookies.size()},
                        {"cookies", s.pre_consent_cookies}};
    json fp = json::object();
    for (const auto& [category, attrs] : s.fingerprints.attributes_by_category)
        fp[category] = {{"count", attrs.size()}, {"attributes", attrs}};
    json fp_pre = json::object();
    for (const auto& [category, attrs] : s.fingerprints.pre_consent_by_category)
        fp_pre[category] = {{"count", attrs.size()}, {"attributes", attrs}};
    j["fingerprints"] = {{"total", s.fingerprints.total()},
                         {"by_category", fp},
                         {"pre_consent_total", s.fingerprints.pre_consent_total()},
                         {"pre_consent_by_category", fp_pre}};
    json leaks = json::array();
    for (const auto& f : s.leaks) leaks.push_back(leak_to_json(f));
    j["leaks"] = {{"count", s.leaks.size()}, {"findings", leaks}};
    j["mac_destinations"] = {{"count", s.mac_destinations.size()},
                             {"domains", s.mac_destinations}};
    return j;
}

PageTypeStats stats_from_json(const json& j) {
    PageTypeStats s;
    for (const auto& d : j["third_party_domains"]["domains"])
        s.third_party_domains.insert(d.get<std::string>());
    for (const auto& [domain, labels] : j["known_trackers"]["domains"].items())
        for (const auto& l : labels) s.known_trackers[domain].insert(l.get<std::string>());
    for (const auto& d : j["possible_trackers"]["domains"])
        s.possible_trackers.insert(d.get<std::string>());
    for (const auto& [key, body] : j["cookie_stats"].items()) {
        auto slash = key.find('/');
        auto& set = s.cookie_stats.evidence[{key.substr(0, slash), key.substr(slash + 1)}];
        for (const auto& c : body["cookies"]) set.insert(c.get<std::string>());
    }
    s.pre_consent_evaluable = j["pre_consent"]["evaluable"].get<bool>();
    for (const auto& c : j["pre_consent"]["cookies"]) s.pre_consent_cookies.insert(c.get<std::string>());
    for (const auto& [category, body] : j["fingerprints"]["by_category"].items())
        for (const auto& a : body["attributes"])
            s.fingerprints.attributes_by_category[category].insert(a.get<std::string>());
    for (const auto& [category, body] : j["fingerprints"]["pre_consent_by_category"].items())
        for (const auto& a : body["attributes"])
            s.fingerprints.pre_consent_by_category[category].insert(a.get<std::string>());
    for (const auto& f : j["leaks"]["findings"]) s.leaks.push_back(leak_from_json(f));
    for (const auto& d : j["mac_destinations"]["domains"])
        s.mac_destinations.insert(d.get<std::string>());
    return s;
}

}  // namespace

HotspotReport aggregate_hotspot(const std::vector<BundleAnalysis>& analyses,
                                const std::map<std::string, std::string>& inputs) {
    if (analyses.empty()) throw ReportError("aggregate_hotspot: no analyses");
    HotspotReport out;
    out.hotspot_id = analyses.front().meta.hotspot_id;
    out.inputs = inputs;

    std::vector<std::string> owners = analyses.front().meta.owner_domains;
    std::sort(owners.begin(), owners.end());

    for (const auto& a : analyses) {
        if (a.meta.hotspot_id != out.hotspot_id)
            throw ReportError("aggregate_hotspot: mixed hotspot ids (" + out.hotspot_id + " vs " +
                              a.meta.hotspot_id + ")");
        std::vector<std::string> these = a.meta.owner_domains;
        std::sort(these.begin(), these.end());
        if (these != owners)
            throw ReportError("aggregate_hotspot: conflicting owner_domains for " + out.hotspot_id);

        PageTypeStats& stats = out.per_page_type[bundle::to_string(a.meta.page_type)];

        for (const auto& [domain, summary] : a.domain_summaries) {
            stats.third_party_domains.insert(domain);
            auto it = a.tracker_verdicts.find(domain);
            if (it == a.tracker_verdicts.end()) continue;
            if (it->second.status == filters::TrackerStatus::known_tracker) {
                for (auto label : it->second.labels)
                    stats.known_trackers[domain].insert(filters::to_string(label));
            } else if (it->second.status == filters::TrackerStatus::possible_tracker) {
                stats.possible_trackers.insert(domain);
            }
        }

        for (const auto& c : a.cookie_analyses) {
            auto key = std::make_pair(party_name(c.party), cookies::to_string(c.bucket));
            stats.cookie_stats.evidence[key].insert(cookies::cookie_identity(c));
        }
        if (a.pre_consent.evaluable) {
            stats.pre_consent_evaluable = true;
            for (const auto& c : a.pre_consent.persistent_pre_consent)
                stats.pre_consent_cookies.insert(cookies::cookie_identity(c));
        }
        for (const auto& f : a.fingerprint_findings) stats.fingerprints.add(f);
        for (const auto& f : a.leaks) {
            stats.leaks.push_back(f);
            if (f.item == pii::PiiKind::mac_address) stats.mac_destinations.insert(f.destination);
        }
    }

    for (auto& [_, stats] : out.per_page_type) {
        std::sort(stats.leaks.begin(), stats.leaks.end(),
                  [](const pii::LeakFinding& a, const pii::LeakFinding& b) {
                      return std::tie(a.destination, a.transaction_id, a.offset, a.item, a.encoding,
                                      a.channel) < std::tie(b.destination, b.transaction_id,
                                                            b.offset, b.item, b.encoding, b.channel);
                  });
    }
    return out;
}

AntiTrackingDiff anti_tracking_diff(const BundleAnalysis& bundle_default,
                                    const BundleAnalysis& bundle_protected,
                                    const filters::CompiledFilterSet& filter_set) {
    (void)filter_set;  // blacklist evidence is already folded into the summaries
    if (bundle_default.meta.hotspot_id != bundle_protected.meta.hotspot_id)
        throw ReportError("anti_tracking_diff: mismatched hotspot ids");
    if (bundle_default.meta.page_type != bundle_protected.meta.page_type)
        throw ReportError("anti_tracking_diff: mismatched page types");

    std::set<std::string> survived;
    for (const auto& [domain, summary] : bundle_protected.domain_summaries) {
        bool blacklisted = !summary.matched_labels.empty();
        bool tracking_cookie = summary.signals.sets_persistent_cookie;
        if (blacklisted || tracking_cookie) survived.insert(domain);
    }
    AntiTrackingDiff out;
    out.unblocked_domains.assign(survived.begin(), survived.end());
    return out;
}

std::map<std::string, long> prevalence_count(const std::set<std::string>& tracker_domains,
                                             const std::string& corpus_jsonl) {
    std::map<std::string, long> counts;
    for (const auto& domain : tracker_domains) counts[domain] = 0;
    std::istringstream in(corpus_jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        std::string domain = to_lower(j.at("cookie_domain").get<std::string>());
        auto it = counts.find(domain);
        if (it != counts.end()) ++it->second;  // duplicates count every occurrence
    }
    return counts;
}

std::string render(const HotspotReport& report, RenderFormat format) {
    if (format == RenderFormat::json) {
        json j;
        j["schema_version"] = 1;
        j["hotspot_id"] = report.hotspot_id;
        j["inputs"] = report.inputs;
        json pages = json::object();
        for (const auto& [page_type, stats] : report.per_page_type)
            pages[page_type] = stats_to_json(stats);
        j["page_types"] = pages;
        return j.dump(2) + "\n";
    }

    if (format == RenderFormat::csv) {
        std::ostringstream out;
        out << "page_type,metric,value\n";
        for (const auto& [page_type, s] : report.per_page_type) {
            out << page_type << ",third_party_domains," << s.third_party_domains.size() << "\n";
            out << page_type << ",known_trackers," << s.known_trackers.size() << "\n";
            out << page_type << ",possible_trackers," << s.possible_trackers.size() << "\n";
            for (const auto& [key, ids] : s.cookie_stats.evidence)
                out << page_type << ",cookies_" << key.first << "_" << key.second << ","
                    << ids.size() << "\n";
            out << page_type << ",pre_consent_cookies," << s.pre_consent_cookies.size() << "\n";
            out << page_type << ",fingerprint_attributes," << s.fingerprints.total() << "\n";
            out << page_type << ",fingerprint_attributes_pre_consent,"
                << s.fingerprints.pre_consent_total() << "\n";
            out << page_type << ",leaks," << s.leaks.size() << "\n";
            out << page_type << ",mac_destinations," << s.mac_destinations.size() << "\n";
        }
        return out.str();
    }

    std::ostringstream out;
    out << "Hotspot: " << report.hotspot_id << "\n";
    for (const auto& [page_type, s] : report.per_page_type) {
        out << "== " << page_type << " ==\n";
        out << "  third-party domains: " << s.third_party_domains.size() << "\n";
        out << "  known trackers: " << s.known_trackers.size() << "\n";
        out << "  possible trackers: " << s.possible_trackers.size() << "\n";
        out << "  PII leak findings: " << s.leaks.size() << "\n";
        out << "  MAC destinations: " << s.mac_destinations.size() << "\n";
        out << "  pre-consent persistent cookies: ";
        if (s.pre_consent_evaluable)
            out << s.pre_consent_cookies.size() << "\n";
        else
            out << "not evaluable (no consent marker)\n";
        out << "  fingerprint attributes: " << s.fingerprints.total() << " (pre-consent "
            << s.fingerprints.pre_consent_total() << ")\n";
        for (const auto& [key, ids] : s.cookie_stats.evidence)
            out << "  cookies " << key.first << " " << key.second << ": " << ids.size() << "\n";
    }
    return out.str();
}

HotspotReport report_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    HotspotReport report;
    report.hotspot_id = j.at("hotspot_id").get<std::string>();
    const json inputs = j.value("inputs", json::object());
    for (const auto& [k, v] : inputs.items()) report.inputs[k] = v.get<std::string>();
    for (const auto& [page_type, stats] : j.at("page_types").items())
        report.per_page_type[page_type] = stats_from_json(stats);
    return report;
}

}  // namespace cpaudit::report

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"
#include "cpaudit/domains.hpp"

namespace cpaudit::filters {

enum class SourceLabel { advertising, privacy, social };
std::string to_string(SourceLabel v);

enum class ResourceType { script, image, stylesheet, xmlhttprequest, subdocument, other };
std::string to_string(ResourceType v);

enum class Anchor { none, domain, start };
enum class ThirdPartyOption { any, third_party_only, first_party_only };

struct FilterRule {
    size_t id = 0;
    std::string raw;
    bool exception = false;  // @@ rules only ever suppress a block match
    Anchor anchor = Anchor::none;
    bool end_anchor = false;
    std::string pattern;  // lowercased; contains literals, '*' and '^'
    ThirdPartyOption third_party = ThirdPartyOption::any;
    std::vector<std::string> domains_include;  // registrable or plain domains from $domain=
    std::vector<std::string> domains_exclude;
    std::set<ResourceType> types;         // empty = all types
    bool unsupported_conservative = false;  // carried an option we treat as always-matching
    SourceLabel label = SourceLabel::advertising;
};

struct RequestContext {
    std::string url;   // lowercased absolute URL
    std::string host;  // lowercased
    bool third_party = false;
    ResourceType type = ResourceType::other;
    std::string page_domain;  // registrable domain of the initiating page, may be empty
};

RequestContext make_context(const bundle::HttpTransaction& tx, const domains::PartyVerdict& party,
                            const domains::SuffixRuleSet& rules);

ResourceType infer_resource_type(const std::string& url_path,
                                 const std::optional<std::string>& accept_header);

// Matches one rule against a request; pure pattern + option evaluation.
bool rule_matches(const FilterRule& rule, const RequestContext& ctx);

struct ParseStats {
    size_t rules = 0;
    size_t skipped = 0;  // comments, element-hiding rules, malformed lines
};

class CompiledFilterSet {
  public:
    // Parses EasyList-syntax text and appends its network rules.
    ParseStats add_list(const std::string& text, SourceLabel label);

    // Highest-precedence outcome: the matching block rule, or nullopt when
    // nothing matches or an exception rule suppresses the block.
    const FilterRule* match(const RequestContext& ctx) const;

    // Index-free scan over every rule; the equivalence oracle for match().
    const FilterRule* match_naive(const RequestContext& ctx) const;

    const std::vector<FilterRule>& rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }

  private:
    const FilterRule* match_side(const RequestContext& ctx, bool exceptions, bool naive) const;
    void index_rule(size_t idx);

    std::vector<FilterRule> rules_;
    std::map<std::string, std::vector<size_t>> token_index_;  // safe literal token -> rule ids
    std::vector<size_t> unindexed_;                           // rules with no safe token
};

CompiledFilterSet parse_filter_list(const std::string& text, SourceLabel label,
                                    ParseStats* stats = nullptr);

enum class TrackerStatus { known_tracker, possible_tracker, non_tracker };
std::string to_string(TrackerStatus v);

struct BehavioralSignals {
    bool sets_persistent_cookie = false;     // >= 1 day validity
    bool receives_persistent_cookie = false;
    bool receives_identifier_leak = false;
    bool any() const {
        return sets_persistent_cookie || receives_persistent_cookie || receives_identifier_leak;
    }
};

struct DomainSummary {
    std::string registrable_domain;
    domains::Party party = domains::Party::third_party;
    std::set<SourceLabel> matched_labels;   // block matches across the domain's transactions
    std::vector<std::string> matched_rules; // raw rule texts, as evidence
    BehavioralSignals signals;
};

struct TrackerVerdict {
    std::string domain;
    TrackerStatus status = TrackerStatus::non_tracker;
    std::set<SourceLabel> labels;       // for known_tracker
    std::vector<std::string> evidence;  // rule texts or signal names
};

// known_tracker when any list matched; else possible_tracker on a behavioral
// signal; first-party domains are always non_tracker.
TrackerVerdict classify_tracker(const DomainSummary& summary);

}  // namespace cpaudit::filters

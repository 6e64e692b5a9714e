#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"

namespace cpaudit::domains {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Public Suffix List rules. Exception rules override wildcards.
class SuffixRuleSet {
  public:
    // A missing rule file behaves as the implicit "*" rule: the public
    // suffix of any host is its last label.
    std::string public_suffix(const std::string& host) const;

    void add_rule(const std::string& rule_line);  // one PSL rule, already trimmed
    size_t rule_count() const { return normal_.size() + wildcard_.size() + exception_.size(); }

  private:
    std::set<std::string> normal_;     // "co.uk"
    std::set<std::string> wildcard_;   // stored without the "*." prefix, e.g. "ck"
    std::set<std::string> exception_;  // stored without "!", e.g. "www.ck"
};

struct PslParseResult {
    SuffixRuleSet rules;
    size_t skipped_lines = 0;
};

PslParseResult parse_psl(const std::string& text);

struct RegistrableDomain {
    std::string value;
    bool suffix_only = false;  // host itself is a public suffix (no registrable part)
};

// Public suffix plus one label. IP literals pass through unchanged.
RegistrableDomain registrable_domain(const std::string& host, const SuffixRuleSet& rules);

using OrgId = std::string;

class OwnershipDb {
  public:
    static OwnershipDb from_json(const std::string& json_text);  // validates acyclic parent chains
    static OwnershipDb load(const std::string& path);

    std::optional<OrgId> org_for_domain(const std::string& registrable) const;
    // Ownership chain leaf -> root; empty for unknown domains.
    std::vector<std::string> owner_chain(const std::string& registrable) const;
    std::optional<OrgId> root_org(const std::string& registrable) const;
    std::string org_name(const OrgId& id) const;
    std::string version() const { return version_; }

  private:
    std::map<std::string, OrgId> domain_to_org_;
    std::map<OrgId, OrgId> org_parent_;
    std::map<OrgId, std::string> org_names_;
    std::string version_;
};

enum class Party { first_party, third_party };

struct PartyVerdict {
    std::string domain;
    std::string registrable_domain;
    Party party = Party::third_party;
    std::optional<OrgId> owner_org;
};

// Owner-based first/third-party classification. First-party means the
// registrable domain is one of the session owner domains or shares a root
// organization with one; empty owner_domains classifies everything third-party.
PartyVerdict classify_party(const std::string& host, const bundle::SessionMeta& meta,
                            const OwnershipDb& db, const SuffixRuleSet& rules);

// Pluggable live-lookup interface; the toolkit itself never performs
// network lookups and ships no enabled implementation.
class OwnershipLookupClient {
  public:
    virtual ~OwnershipLookupClient() = default;
    virtual std::optional<std::string> lookup_org(const std::string& registrable_domain) = 0;
};

}  // namespace cpaudit::domains

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpaudit/domains.hpp"

namespace cpaudit::domdiff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomNode {
    std::string tag;  // lowercased element name, "#text" or "#comment"
    std::vector<std::pair<std::string, std::string>> attributes;  // sorted by name
    std::string text;  // for #text / #comment nodes
    std::vector<DomNode> children;

    std::optional<std::string> attr(const std::string& name) const;
    bool operator==(const DomNode&) const = default;
};

struct DomTree {
    DomNode root;  // always an "html" element
    std::string source_url;
};

// Forgiving HTML parsing with implied html/body structure; comments are
// preserved as nodes, attribute order is normalized by sorting.
DomTree parse_html(std::string_view bytes, const std::string& source_url = "");

// Minimal selector grammar: tag, #id, .class, [attr=value], and the
// descendant combinator (space). Throws ConfigError on unparseable input.
struct Selector {
    struct Simple {
        std::string tag;  // empty = any
        std::vector<std::string> ids;
        std::vector<std::string> classes;
        std::vector<std::pair<std::string, std::string>> attr_equals;
    };
    std::vector<Simple> path;  // descendant chain

    static Selector parse(const std::string& text);
};

struct NormalizeOptions {
    std::vector<Selector> exclusions;
    std::vector<std::string> blanked_attributes = {"nonce", "csrf"};
};

// Removes excluded subtrees, drops whitespace-only text, collapses text
// runs to single spaces, blanks volatile attribute values.
DomTree normalize(const DomTree& tree, const NormalizeOptions& options);

enum class DiffKind { added, removed, modified };
enum class Severity { low, high };

struct DiffEntry {
    DiffKind kind;
    std::string path;  // path in the observed tree (baseline path for removals)
    std::string tag;
    Severity severity = Severity::low;
    std::string detail;
};

struct DiffReport {
    std::vector<DiffEntry> entries;
    bool empty() const { return entries.empty(); }
};

// Top-down alignment keyed by (tag, id) with positional fallback among
// same-tag siblings. High severity: script/iframe/object/embed additions,
// or src/href mutations pointing at a new registrable domain.
DiffReport diff(const DomTree& baseline, const DomTree& observed,
                const domains::SuffixRuleSet* rules = nullptr);

std::string render_text(const DiffReport& report);
std::string render_json(const DiffReport& report);

}  // namespace cpaudit::domdiff

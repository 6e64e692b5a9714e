#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpaudit/bundle.hpp"

namespace cpaudit::fingerprint {

enum class TokenKind { identifier, punct, string_literal, number };

struct Token {
    TokenKind kind;
    std::string text;  // literal contents for string tokens, without quotes
};

// Error-tolerant lexical scan: comments removed, string literal contents
// preserved as data. Unterminated literals end at the next newline.
std::vector<Token> lex_js(std::string_view body);

struct CatalogEntry {
    std::vector<std::string> chain;  // e.g. {"navigator", "userAgent"}
    std::string category;
    std::string attribute;
    bool high_signal = false;  // single identifier also matched as a property name
};

struct ApiCatalog {
    std::string version;
    std::vector<CatalogEntry> entries;
    std::set<std::string> font_names;          // lowercased known font family names
    std::set<std::string> font_probe_idents;   // offsetWidth / offsetHeight / measureText
    size_t font_name_threshold = 20;

    static ApiCatalog from_json(const std::string& json_text);
    static ApiCatalog load(const std::string& path);
};

struct FingerprintFinding {
    std::string script_ref;  // script URL
    std::string domain;      // host serving the script
    std::string category;
    std::string attribute;
    size_t occurrences = 0;
    bundle::Phase phase = bundle::Phase::unknown;
};

std::vector<FingerprintFinding> scan_script(const bundle::ScriptResource& script,
                                            const std::string& body, const ApiCatalog& catalog);

// Font finding when >= threshold distinct known font names appear as string
// literals AND a width/measure probe identifier is present.
std::optional<FingerprintFinding> font_heuristic(const bundle::ScriptResource& script,
                                                 const std::string& body,
                                                 const ApiCatalog& catalog);

struct FingerprintAggregate {
    std::map<std::string, std::set<std::string>> attributes_by_category;
    std::map<std::string, std::set<std::string>> pre_consent_by_category;

    size_t total() const;
    size_t pre_consent_total() const;
    void add(const FingerprintFinding& f);
};

FingerprintAggregate aggregate_fingerprints(const std::vector<FingerprintFinding>& findings);

}  // namespace cpaudit::fingerprint

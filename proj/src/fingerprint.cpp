#include "cpaudit/fingerprint.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

using nlohmann::json;

namespace cpaudit::fingerprint {

namespace {

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
           static_cast<unsigned char>(c) >= 0x80;
}
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

}  // namespace

std::vector<Token> lex_js(std::string_view body) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = body.size();
    while (i < n) {
        char c = body[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        // comments
        if (c == '/' && i + 1 < n && body[i + 1] == '/') {
            while (i < n && body[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && body[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(body[i] == '*' && body[i + 1] == '/')) ++i;
            i = i + 2 <= n ? i + 2 : n;
            continue;
        }
        // string literals; template literals treated as plain strings
        if (c == '"' || c == '\'' || c == '`') {
            char quote = c;
            std::string content;
            ++i;
            while (i < n && body[i] != quote) {
                if (body[i] == '\\' && i + 1 < n) {
                    content += body[i + 1];
                    i += 2;
                    continue;
                }
                if (body[i] == '\n' && quote != '`') break;  // unterminated: resume at next line
                content += body[i];
                ++i;
            }
            if (i < n && body[i] == quote) ++i;
            out.push_back({TokenKind::string_literal, std::move(content)});
            continue;
        }
        if (ident_start(c)) {
            size_t start = i;
            while (i < n && ident_char(body[i])) ++i;
            out.push_back({TokenKind::identifier, std::string(body.substr(start, i - start))});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(body[i])) || body[i] == '.' ||
                             body[i] == 'x' || body[i] == 'e'))
                ++i;
            out.push_back({TokenKind::number, std::string(body.substr(start, i - start))});
            continue;
        }
        out.push_back({TokenKind::punct, std::string(1, c)});
        ++i;
    }
    return out;
}

ApiCatalog ApiCatalog::from_json(const std::string& json_text) {
    ApiCatalog cat;
    json doc = json::parse(json_text);
    cat.version = doc.value("version", "unversioned");
    for (const auto& e : doc.value("entries", json::array())) {
        CatalogEntry entry;
        entry.chain = split(e.at("chain").get<std::string>(), '.');
        entry.category = e.at("category").get<std::string>();
        entry.attribute = e.at("attribute").get<std::string>();
        entry.high_signal = e.value("high_signal", false);
        cat.entries.push_back(std::move(entry));
    }
    for (const auto& f : doc.value("font_names", json::array()))
        cat.font_names.insert(to_lower(f.get<std::string>()));
    for (const auto& p : doc.value("font_probe_idents", json::array()))
        cat.font_probe_idents.insert(p.get<std::string>());
    if (cat.font_probe_idents.empty())
        cat.font_probe_idents = {"offsetWidth", "offsetHeight", "measureText"};
    cat.font_name_threshold = doc.value("font_name_threshold", 20);

    // attribute names must be unique within a category
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : cat.entries)
        if (!seen.insert({e.category, e.attribute}).second)
            throw std::runtime_error("api catalog: duplicate attribute " + e.category + "." + e.attribute);
    return cat;
}

ApiCatalog ApiCatalog::load(const std::string& path) { return from_json(read_file(path)); }

std::vector<FingerprintFinding> scan_script(const bundle::ScriptResource& script,
                                            const std::string& body, const ApiCatalog& catalog) {
    auto tokens = lex_js(body);
    std::map<std::pair<std::string, std::string>, size_t> counts;  // (category, attribute) -> n

    // member-access chains over consecutive identifier '.' identifier tokens
    for (const auto& entry : catalog.entries) {
        const auto& chain = entry.chain;
        if (chain.empty()) continue;
        size_t need = chain.size() * 2 - 1;
        for (size_t i = 0; i + need <= tokens.size(); ++i) {
            bool ok = true;
            for (size_t k = 0; k < chain.size() && ok; ++k) {
                const Token& t = tokens[i + k * 2];
                if (t.kind != TokenKind::identifier || t.text != chain[k]) ok = false;
                if (ok && k + 1 < chain.size()) {
                    const Token& dot = tokens[i + k * 2 + 1];
                    if (dot.kind != TokenKind::punct || dot.text != ".") ok = false;
                }
            }
            if (ok) ++counts[{entry.category, entry.attribute}];
        }
        // high-signal identifiers also match as property names on any receiver
        if (entry.high_signal && chain.size() >= 1) {
            const std::string& name = chain.back();
            for (size_t i = 1; i < tokens.size(); ++i) {
                if (tokens[i].kind != TokenKind::identifier || tokens[i].text != name) continue;
                const Token& prev = tokens[i - 1];
                if (prev.kind == TokenKind::punct && prev.text == ".") {
                    // skip occurrences already counted via the full chain
                    if (chain.size() >= 2 && i >= 2 && tokens[i - 2].kind == TokenKind::identifier &&
                        tokens[i - 2].text == chain[chain.size() - 2])
                        continue;
                    ++counts[{entry.category, entry.attribute}];
                }
            }
        }
    }

    std::vector<FingerprintFinding> out;
    auto parsed = parse_url(script.url);
    std::string domain = parsed ? parsed->host : "";
    for (const auto& [key, n] : counts) {
        FingerprintFinding f;
        f.script_ref = script.url;
        f.domain = domain;
        f.category = key.first;
        f.attribute = key.second;
        f.occurrences = n;
        f.phase = script.phase;
        out.push_back(std::move(f));
    }
    return out;
}

std::optional<FingerprintFinding> font_heuristic(const bundle::ScriptResource& script,
                                                 const std::string& body,
                                                 const ApiCatalog& catalog) {
    auto tokens = lex_js(body);
    std::set<std::string> fonts_seen;
    bool probe_seen = false;
    for (const auto& t : tokens) {
        if (t.kind == TokenKind::string_literal) {
            std::string name = to_lower(trim(t.text));
            if (catalog.font_names.count(name)) fonts_seen.insert(name);
        } else if (t.kind == TokenKind::identifier && catalog.font_probe_idents.count(t.text)) {
            probe_seen = true;
        }
    }
    if (fonts_seen.size() < catalog.font_name_threshold || !probe_seen) return std::nullopt;

    FingerprintFinding f;
    f.script_ref = script.url;
    auto parsed = parse_url(script.url);
    f.domain = parsed ? parsed->host : "";
    f.category = "Font";
    f.attribute = "font_enumeration_side_channel";
    f.occurrences = fonts_seen.size();
    f.phase = script.phase;
    return f;
}

size_t FingerprintAggregate::total() const {
    size_t n = 0;
    for (const auto& [_, attrs] : attributes_by_category) n += attrs.size();
    return n;
}

size_t FingerprintAggregate::pre_consent_total() const {
    size_t n = 0;
    for (const auto& [_, attrs] : pre_consent_by_category) n += attrs.size();
    return n;
}

void FingerprintAggregate::add(const FingerprintFinding& f) {
    attributes_by_category[f.category].insert(f.attribute);
    if (f.phase == bundle::Phase::pre_consent) pre_consent_by_category[f.category].insert(f.attribute);
}

FingerprintAggregate aggregate_fingerprints(const std::vector<FingerprintFinding>& findings) {
    FingerprintAggregate agg;
    for (const auto& f : findings) agg.add(f);
    return agg;
}

}  // namespace cpaudit::fingerprint

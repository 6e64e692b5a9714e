#include "cpaudit/domdiff.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

using nlohmann::json;

namespace cpaudit::domdiff {

namespace {

const std::set<std::string> kVoidElements = {"area", "base",  "br",    "col",  "embed", "hr",
                                             "img",  "input", "link",  "meta", "param", "source",
                                             "track", "wbr"};
const std::set<std::string> kRawText = {"script", "style"};
const std::set<std::string> kHeadOnly = {"title", "meta", "link", "base"};

struct RawToken {
    enum Kind { text, open, close, comment } kind;
    std::string name;  // tag name, lowercased
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string data;      // text/comment content
    bool self_closing = false;
};

std::vector<RawToken> tokenize(std::string_view html) {
    std::vector<RawToken> out;
    size_t i = 0;
    const size_t n = html.size();
    while (i < n) {
        if (html[i] != '<') {
            size_t start = i;
            while (i < n && html[i] != '<') ++i;
            out.push_back({RawToken::text, "", {}, std::string(html.substr(start, i - start)), false});
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            size_t end = html.find("-->", i + 4);
            std::string content(html.substr(i + 4, end == std::string_view::npos ? n - i - 4 : end - i - 4));
            out.push_back({RawToken::comment, "", {}, std::move(content), false});
            i = end == std::string_view::npos ? n : end + 3;
            continue;
        }
        if (html.substr(i, 2) == "<!") {  // doctype and friends: skip
            size_t end = html.find('>', i);
            i = end == std::string_view::npos ? n : end + 1;
            continue;
        }
        size_t end = html.find('>', i);
        if (end == std::string_view::npos) {  // stray '<' at EOF
            out.push_back({RawToken::text, "", {}, std::string(html.substr(i)), false});
            break;
        }
        std::string_view inner = html.substr(i + 1, end - i - 1);
        i = end + 1;
        bool closing = !inner.empty() && inner[0] == '/';
        if (closing) inner = inner.substr(1);
        RawToken tok;
        tok.kind = closing ? RawToken::close : RawToken::open;
        size_t p = 0;
        while (p < inner.size() && !std::isspace(static_cast<unsigned char>(inner[p])) && inner[p] != '/')
            ++p;
        tok.name = to_lower(inner.substr(0, p));
        if (tok.name.empty()) continue;  // "<>" noise
        // attributes
        while (p < inner.size()) {
            while (p < inner.size() && (std::isspace(static_cast<unsigned char>(inner[p])) || inner[p] == '/'))
                ++p;
            if (p >= inner.size()) break;
            size_t name_start = p;
            while (p < inner.size() && !std::isspace(static_cast<unsigned char>(inner[p])) &&
                   inner[p] != '=' && inner[p] != '/' )
                ++p;
            std::string name = to_lower(inner.substr(name_start, p - name_start));
            std::string value;
            while (p < inner.size() && std::isspace(static_cast<unsigned char>(inner[p]))) ++p;
            if (p < inner.size() && inner[p] == '=') {
                ++p;
                while (p < inner.size() && std::isspace(static_cast<unsigned char>(inner[p]))) ++p;
                if (p < inner.size() && (inner[p] == '"' || inner[p] == '\'')) {
                    char q = inner[p++];
                    size_t vstart = p;
                    while (p < inner.size() && inner[p] != q) ++p;
                    value = std::string(inner.substr(vstart, p - vstart));
                    if (p < inner.size()) ++p;
                } else {
                    size_t vstart = p;
                    while (p < inner.size() && !std::isspace(static_cast<unsigned char>(inner[p])))
                        ++p;
                    value = std::string(inner.substr(vstart, p - vstart));
                }
            }
            if (!name.empty()) tok.attrs.emplace_back(std::move(name), std::move(value));
        }
        if (!inner.empty() && inner.back() == '/') tok.self_closing = true;
        out.push_back(std::move(tok));

        // raw-text elements swallow everything up to their close tag
        const RawToken& just = out.back();
        if (just.kind == RawToken::open && kRawText.count(just.name) && !just.self_closing) {
            std::string close_tag = "</" + just.name;
            size_t close = i;
            while (true) {
                close = html.find('<', close);
                if (close == std::string_view::npos) {
                    close = n;
                    break;
                }
                std::string probe = to_lower(html.substr(close, close_tag.size()));
                if (probe == close_tag) break;
                ++close;
            }
            out.push_back({RawToken::text, "", {}, std::string(html.substr(i, close - i)), false});
            i = close;
        }
    }
    return out;
}

DomNode make_element(const RawToken& tok) {
    DomNode node;
    node.tag = tok.name;
    node.attributes = tok.attrs;
    std::sort(node.attributes.begin(), node.attributes.end());
    return node;
}

}  // namespace

std::optional<std::string> DomNode::attr(const std::string& name) const {
    for (const auto& [n, v] : attributes)
        if (n == name) return v;
    return std::nullopt;
}

DomTree parse_html(std::string_view bytes, const std::string& source_url) {
    auto tokens = tokenize(bytes);

    std::vector<DomNode> stack;
    stack.push_back(DomNode{"#fragment", {}, "", {}});
    auto append_leaf = [&](DomNode node) { stack.back().children.push_back(std::move(node)); };

    for (auto& tok : tokens) {
        switch (tok.kind) {
            case RawToken::text:
                if (!tok.data.empty()) append_leaf(DomNode{"#text", {}, tok.data, {}});
                break;
            case RawToken::comment:
                append_leaf(DomNode{"#comment", {}, tok.data, {}});
                break;
            case RawToken::open: {
                DomNode node = make_element(tok);
                if (tok.self_closing || kVoidElements.count(node.tag)) {
                    append_leaf(std::move(node));
                } else {
                    stack.push_back(std::move(node));
                }
                break;
            }
            case RawToken::close: {
                // pop to the nearest matching open element; ignore strays
                int match = -1;
                for (int k = static_cast<int>(stack.size()) - 1; k >= 1; --k)
                    if (stack[static_cast<size_t>(k)].tag == tok.name) {
                        match = k;
                        break;
                    }
                if (match < 0) break;
                while (static_cast<int>(stack.size()) > match) {
                    DomNode done = std::move(stack.back());
                    stack.pop_back();
                    stack.back().children.push_back(std::move(done));
                }
                break;
            }
        }
    }
    while (stack.size() > 1) {
        DomNode done = std::move(stack.back());
        stack.pop_back();
        stack.back().children.push_back(std::move(done));
    }
    std::vector<DomNode> top = std::move(stack[0].children);

    // implied structure: guarantee an html root with head and body
    DomTree tree;
    tree.source_url = source_url;
    DomNode* html = nullptr;
    for (auto& n : top)
        if (n.tag == "html") html = &n;
    if (html) {
        tree.root = std::move(*html);
    } else {
        tree.root.tag = "html";
        tree.root.children = std::move(top);
        top.clear();
    }

    bool has_body = false, has_head = false;
    for (const auto& c : tree.root.children) {
        if (c.tag == "body") has_body = true;
        if (c.tag == "head") has_head = true;
    }
    if (!has_body) {
        DomNode head{"head", {}, "", {}};
        DomNode body{"body", {}, "", {}};
        std::vector<DomNode> kept;
        for (auto& c : tree.root.children) {
            if (c.tag == "head") {
                kept.push_back(std::move(c));
            } else if (kHeadOnly.count(c.tag)) {
                head.children.push_back(std::move(c));
            } else {
                body.children.push_back(std::move(c));
            }
        }
        tree.root.children = std::move(kept);
        if (!has_head) tree.root.children.insert(tree.root.children.begin(), std::move(head));
        tree.root.children.push_back(std::move(body));
    }
    return tree;
}

Selector Selector::parse(const std::string& text) {
    Selector sel;
    for (const auto& part : split(trim(text), ' ')) {
        if (part.empty()) continue;
        Simple simple;
        size_t i = 0;
        // leading tag name
        size_t start = i;
        while (i < part.size() && (std::isalnum(static_cast<unsigned char>(part[i])) || part[i] == '-'))
            ++i;
        simple.tag = to_lower(part.substr(start, i - start));
        while (i < part.size()) {
            char c = part[i];
            if (c == '#' || c == '.') {
                ++i;
                start = i;
                while (i < part.size() && part[i] != '#' && part[i] != '.' && part[i] != '[') ++i;
                std::string name = part.substr(start, i - start);
                if (name.empty()) throw ConfigError("bad selector: " + text);
                (c == '#' ? simple.ids : simple.classes).push_back(name);
            } else if (c == '[') {
                size_t close = part.find(']', i);
                size_t eq = part.find('=', i);
                if (close == std::string::npos || eq == std::string::npos || eq > close)
                    throw ConfigError("bad selector: " + text);
                simple.attr_equals.emplace_back(to_lower(part.substr(i + 1, eq - i - 1)),
                                                part.substr(eq + 1, close - eq - 1));
                i = close + 1;
            } else {
                throw ConfigError("bad selector: " + text);
            }
        }
        if (simple.tag.empty() && simple.ids.empty() && simple.classes.empty() &&
            simple.attr_equals.empty())
            throw ConfigError("bad selector: " + text);
        sel.path.push_back(std::move(simple));
    }
    if (sel.path.empty()) throw ConfigError("empty selector");
    return sel;
}

namespace {

bool simple_matches(const Selector::Simple& s, const DomNode& node) {
    if (node.tag.empty() || node.tag[0] == '#') return false;
    if (!s.tag.empty() && node.tag != s.tag) return false;
    for (const auto& id : s.ids)
        if (node.attr("id") != id) return false;
    if (!s.classes.empty()) {
        auto cls = node.attr("class");
        if (!cls) return false;
        auto classes = split(*cls, ' ');
        for (const auto& want : s.classes)
            if (std::find(classes.begin(), classes.end(), want) == classes.end()) return false;
    }
    for (const auto& [name, value] : s.attr_equals)
        if (node.attr(name) != value) return false;
    return true;
}

// descendant-combinator match: the node matches path.back() and its ancestor
// chain (already-matched prefix depth) covers the rest
bool excluded(const DomNode& node, const std::vector<Selector>& selectors,
              std::vector<const DomNode*>& ancestors) {
    for (const auto& sel : selectors) {
        if (!simple_matches(sel.path.back(), node)) continue;
        if (sel.path.size() == 1) return true;
        // match remaining components against ancestors, innermost-outward
        int need = static_cast<int>(sel.path.size()) - 2;
        for (int a = static_cast<int>(ancestors.size()) - 1; a >= 0 && need >= 0; --a)
            if (simple_matches(sel.path[static_cast<size_t>(need)], *ancestors[static_cast<size_t>(a)]))
                --need;
        if (need < 0) return true;
    }
    return false;
}

std::string collapse_ws(const std::string& text) {
    std::string out;
    bool in_ws = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out += ' ';
        in_ws = false;
        out += c;
    }
    return out;
}

void normalize_node(const DomNode& node, DomNode& out, const NormalizeOptions& options,
                    std::vector<const DomNode*>& ancestors) {
    out.tag = node.tag;
    out.text = node.tag == "#text" || node.tag == "#comment" ? collapse_ws(node.text) : "";
    out.attributes = node.attributes;
    for (auto& [name, value] : out.attributes)
        for (const auto& blank : options.blanked_attributes)
            if (name == blank) value.clear();

    ancestors.push_back(&node);
    for (const auto& child : node.children) {
        if (child.tag == "#text") {
            std::string collapsed = collapse_ws(child.text);
            if (collapsed.empty()) continue;  // whitespace-only nodes dropped
            out.children.push_back(DomNode{"#text", {}, std::move(collapsed), {}});
            continue;
        }
        if (child.tag != "#comment" && excluded(child, options.exclusions, ancestors)) continue;
        DomNode norm;
        normalize_node(child, norm, options, ancestors);
        out.children.push_back(std::move(norm));
    }
    ancestors.pop_back();
}

std::string host_registrable(const std::string& url, const domains::SuffixRuleSet* rules) {
    auto parsed = parse_url(url);
    if (!parsed) return "";
    if (!rules) return parsed->host;
    try {
        return domains::registrable_domain(parsed->host, *rules).value;
    } catch (const domains::DomainError&) {
        return parsed->host;
    }
}

bool high_severity_tag(const std::string& tag) {
    return tag == "script" || tag == "iframe" || tag == "object" || tag == "embed";
}

struct Differ {
    const domains::SuffixRuleSet* rules;
    DiffReport report;

    void record(DiffKind kind, const std::string& path, const DomNode& node, Severity sev,
                std::string detail) {
        report.entries.push_back({kind, path, node.tag, sev, std::move(detail)});
    }

    void add_subtree(DiffKind kind, const std::string& path, const DomNode& node) {
        Severity sev = high_severity_tag(node.tag) && kind == DiffKind::added ? Severity::high
                                                                              : Severity::low;
        std::string detail = kind == DiffKind::added ? "node added" : "node removed";
        if (auto src = node.attr("src")) detail += " src=" + *src;
        record(kind, path, node, sev, std::move(detail));
    }

    // alignment key: (tag, id attr) when id present, else (tag, ordinal among
    // same-tag keyless siblings)
    static std::vector<std::pair<std::string, const DomNode*>> keyed_children(const DomNode& n) {
        std::vector<std::pair<std::string, const DomNode*>> out;
        std::map<std::string, int> ordinal;
        int text_ordinal = 0;
        for (const auto& c : n.children) {
            if (c.tag == "#text" || c.tag == "#comment") {
                out.emplace_back(c.tag + "[" + std::to_string(text_ordinal++) + "]", &c);
                continue;
            }
            auto id = c.attr("id");
            if (id && !id->empty()) {
                out.emplace_back(c.tag + "#" + *id, &c);
            } else {
                out.emplace_back(c.tag + "[" + std::to_string(ordinal[c.tag]++) + "]", &c);
            }
        }
        return out;
    }

    void compare(const DomNode& base, const DomNode& obs, const std::string& path) {
        // attribute deltas
        if (base.attributes != obs.attributes) {
            Severity sev = Severity::low;
            std::string detail = "attributes changed";
            for (const char* attr : {"src", "href"}) {
                auto b = base.attr(attr), o = obs.attr(attr);
                if (b != o && o) {
                    std::string base_dom = b ? host_registrable(*b, rules) : "";
                    std::string obs_dom = host_registrable(*o, rules);
                    if (!obs_dom.empty() && obs_dom != base_dom) {
                        sev = Severity::high;
                        detail = std::string(attr) + " now points at " + obs_dom;
                    }
                }
            }
            record(DiffKind::modified, path, obs, sev, detail);
        } else if ((base.tag == "#text" || base.tag == "#comment") && base.text != obs.text) {
            record(DiffKind::modified, path, obs, Severity::low, "text changed");
        }

        auto base_kids = keyed_children(base);
        auto obs_kids = keyed_children(obs);
        std::map<std::string, const DomNode*> base_map(base_kids.begin(), base_kids.end());
        std::map<std::string, const DomNode*> obs_map(obs_kids.begin(), obs_kids.end());

        for (const auto& [key, node] : obs_kids) {
            std::string child_path = path + "/" + key;
            auto it = base_map.find(key);
            if (it == base_map.end()) {
                add_subtree(DiffKind::added, child_path, *node);
            } else {
                compare(*it->second, *node, child_path);
            }
        }
        for (const auto& [key, node] : base_kids)
            if (!obs_map.count(key)) add_subtree(DiffKind::removed, path + "/" + key, *node);
    }
};

}  // namespace

DomTree normalize(const DomTree& tree, const NormalizeOptions& options) {
    DomTree out;
    out.source_url = tree.source_url;
    std::vector<const DomNode*> ancestors;
    normalize_node(tree.root, out.root, options, ancestors);
    return out;
}

DiffReport diff(const DomTree& baseline, const DomTree& observed, const domains::SuffixRuleSet* rules) {
    Differ differ{rules, {}};
    differ.compare(baseline.root, observed.root, "/html");
    return std::move(differ.report);
}

std::string render_text(const DiffReport& report) {
    if (report.empty()) return "no differences\n";
    std::ostringstream out;
    // high severity first
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& e : report.entries) {
            bool high = e.severity == Severity::high;
            if ((pass == 0) != high) continue;
            const char* kind = e.kind == DiffKind::added ? "added"
                               : e.kind == DiffKind::removed ? "removed"
                                                             : "modified";
            out << (high ? "[HIGH] " : "[low]  ") << kind << " " << e.path << " (" << e.detail
                << ")\n";
        }
    }
    return out.str();
}

std::string render_json(const DiffReport& report) {
    json arr = json::array();
    for (const auto& e : report.entries) {
        arr.push_back({{"kind", e.kind == DiffKind::added     ? "added"
                                : e.kind == DiffKind::removed ? "removed"
                                                              : "modified"},
                       {"path", e.path},
                       {"tag", e.tag},
                       {"severity", e.severity == Severity::high ? "high" : "low"},
                       {"detail", e.detail}});
    }
    return json{{"entries", arr}}.dump(2) + "\n";
}

}  // namespace cpaudit::domdiff

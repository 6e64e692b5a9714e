#include "doctest.h"

#include "cpaudit/domdiff.hpp"
#include "test_support.hpp"

using namespace cpaudit;
using namespace cpaudit::domdiff;

namespace {

std::string fixture(const std::string& name) {
    return read_file(testsupport::fixture_dir() + "/" + name);
}

const DomNode* find_by_id(const DomNode& node, const std::string& id) {
    if (node.attr("id") == id) return &node;
    for (const auto& child : node.children)
        if (const DomNode* hit = find_by_id(child, id)) return hit;
    return nullptr;
}

bool has_high_severity(const DiffReport& report, const std::string& tag) {
    for (const auto& e : report.entries)
        if (e.severity == Severity::high && e.tag == tag) return true;
    return false;
}

}  // namespace

TEST_CASE("parse_html supplies implied structure") {
    DomTree t = parse_html("<p>hi");
    CHECK(t.root.tag == "html");
    REQUIRE(t.root.children.size() == 2);
    CHECK(t.root.children[0].tag == "head");
    CHECK(t.root.children[1].tag == "body");
    REQUIRE(t.root.children[1].children.size() == 1);
    const DomNode& p = t.root.children[1].children[0];
    CHECK(p.tag == "p");
    REQUIRE(p.children.size() == 1);
    CHECK(p.children[0].text == "hi");

    SUBCASE("void elements never swallow siblings") {
        DomTree t2 = parse_html("<body><br><img src=x><p>after</p></body>");
        const DomNode& body = t2.root.children.back();
        REQUIRE(body.tag == "body");
        REQUIRE(body.children.size() == 3);
        CHECK(body.children[0].tag == "br");
        CHECK(body.children[1].tag == "img");
        CHECK(body.children[2].tag == "p");
    }

    SUBCASE("script bodies are raw text") {
        DomTree t3 = parse_html("<script>if (a < b) { x('<div>'); }</script>");
        const DomNode* script = nullptr;
        for (const auto& section : t3.root.children)
            for (const auto& c : section.children)
                if (c.tag == "script") script = &c;
        REQUIRE(script);
        REQUIRE(script->children.size() == 1);
        CHECK(script->children[0].text == "if (a < b) { x('<div>'); }");
    }

    SUBCASE("comments become nodes") {
        DomTree t4 = parse_html("<body><!-- note --><p>x</p></body>");
        CHECK(t4.root.children.back().children[0].tag == "#comment");
    }
}

TEST_CASE("attribute order does not affect equality") {
    DomTree a = parse_html(R"(<p class="c" id="i" data-x="1">t</p>)");
    DomTree b = parse_html(R"(<p data-x="1" id="i" class="c">t</p>)");
    CHECK(a.root == b.root);
    CHECK(diff(a, b).empty());
}

TEST_CASE("selector parsing") {
    Selector s = Selector::parse("div#live-ticker .story [data-x=1]");
    REQUIRE(s.path.size() == 3);
    CHECK(s.path[0].tag == "div");
    CHECK(s.path[0].ids == std::vector<std::string>{"live-ticker"});
    CHECK(s.path[1].classes == std::vector<std::string>{"story"});
    REQUIRE(s.path[2].attr_equals.size() == 1);
    CHECK(s.path[2].attr_equals[0] == std::pair<std::string, std::string>{"data-x", "1"});

    CHECK_THROWS_AS(Selector::parse(""), ConfigError);
    CHECK_THROWS_AS(Selector::parse("div[unclosed"), ConfigError);
    CHECK_THROWS_AS(Selector::parse("#"), ConfigError);
}

TEST_CASE("normalize blanks volatile attributes and collapses whitespace") {
    DomTree a = parse_html(R"(<script nonce="abc123">x()</script><p>  spaced   out </p>)");
    DomTree b = parse_html(R"(<script nonce="zzz999">x()</script><p> spaced out </p>)");
    NormalizeOptions opts;
    CHECK(diff(normalize(a, opts), normalize(b, opts)).empty());
}

TEST_CASE("normalize removes excluded subtrees") {
    std::string base = fixture("honeysite_dynamic.html");
    std::string changed = base;
    auto pos = changed.find("ferry schedule updated at 09:14");
    REQUIRE(pos != std::string::npos);
    changed.replace(pos, 31, "storm warning issued at 11:02");

    NormalizeOptions opts;
    opts.exclusions.push_back(Selector::parse("#live-ticker"));

    DomTree a = normalize(parse_html(base), opts);
    DomTree b = normalize(parse_html(changed), opts);
    CHECK(diff(a, b).empty());
    CHECK_FALSE(find_by_id(a.root, "live-ticker"));

    SUBCASE("without the exclusion the change is a low-severity diff") {
        NormalizeOptions none;
        auto report = diff(normalize(parse_html(base), none), normalize(parse_html(changed), none));
        REQUIRE_FALSE(report.empty());
        for (const auto& e : report.entries) CHECK(e.severity == Severity::low);
    }
}

TEST_CASE("diff of a page against itself is empty") {
    for (const auto& name : {"honeysite_static.html", "honeysite_dynamic.html"}) {
        DomTree t = parse_html(fixture(name));
        CHECK(diff(t, t).empty());
        NormalizeOptions opts;
        DomTree n = normalize(t, opts);
        CHECK(diff(n, n).empty());
    }
}

TEST_CASE("injected script and iframe are high severity") {
    auto rules = domains::parse_psl(testsupport::data_file("psl.dat")).rules;
    std::string base = fixture("honeysite_static.html");

    SUBCASE("script injection") {
        std::string injected = base;
        auto pos = injected.find("</body>");
        injected.insert(pos, "<script src=\"http://injector.example/payload.js\"></script>");
        auto report = diff(parse_html(base), parse_html(injected), &rules);
        CHECK(has_high_severity(report, "script"));
    }

    SUBCASE("iframe injection") {
        std::string injected = base;
        auto pos = injected.find("</body>");
        injected.insert(pos, "<iframe src=\"http://ads.injector.example/frame\"></iframe>");
        auto report = diff(parse_html(base), parse_html(injected), &rules);
        CHECK(has_high_severity(report, "iframe"));
    }

    SUBCASE("added paragraph is low severity") {
        std::string injected = base;
        auto pos = injected.find("</body>");
        injected.insert(pos, "<p>harmless footer</p>");
        auto report = diff(parse_html(base), parse_html(injected), &rules);
        REQUIRE_FALSE(report.empty());
        for (const auto& e : report.entries) CHECK(e.severity == Severity::low);
    }
}

TEST_CASE("src mutation severity depends on the destination domain") {
    auto rules = domains::parse_psl(testsupport::data_file("psl.dat")).rules;
    std::string base = fixture("honeysite_dynamic.html");

    SUBCASE("rewrite to a new registrable domain is high severity") {
        std::string rewritten = base;
        auto pos = rewritten.find("https://partners.harbor-daily.example/box.html");
        REQUIRE(pos != std::string::npos);
        rewritten.replace(pos, 46, "https://hijack.example/box.html");
        auto report = diff(parse_html(base), parse_html(rewritten), &rules);
        CHECK(has_high_severity(report, "iframe"));
    }

    SUBCASE("rewrite within the same registrable domain is low severity") {
        std::string rewritten = base;
        auto pos = rewritten.find("https://partners.harbor-daily.example/box.html");
        rewritten.replace(pos, 46, "https://other.harbor-daily.example/box2.html");
        auto report = diff(parse_html(base), parse_html(rewritten), &rules);
        REQUIRE_FALSE(report.empty());
        for (const auto& e : report.entries) CHECK(e.severity == Severity::low);
    }
}

TEST_CASE("diff direction: additions and removals mirror each other") {
    std::string base = fixture("honeysite_static.html");
    std::string more = base;
    more.insert(more.find("</body>"), "<div id=\"extra\">x</div>");

    auto forward = diff(parse_html(base), parse_html(more));
    auto backward = diff(parse_html(more), parse_html(base));
    REQUIRE(forward.entries.size() == 1);
    REQUIRE(backward.entries.size() == 1);
    CHECK(forward.entries[0].kind == DiffKind::added);
    CHECK(backward.entries[0].kind == DiffKind::removed);
    CHECK(forward.entries[0].path == backward.entries[0].path);
}

TEST_CASE("diff report rendering") {
    std::string base = fixture("honeysite_static.html");
    std::string injected = base;
    injected.insert(injected.find("</body>"),
                    "<script src=\"http://injector.example/payload.js\"></script>");
    auto rules = domains::parse_psl(testsupport::data_file("psl.dat")).rules;
    auto report = diff(parse_html(base), parse_html(injected), &rules);

    std::string text = render_text(report);
    CHECK(text.find("script") != std::string::npos);
    CHECK(text.find("HIGH") != std::string::npos);

    std::string json_out = render_json(report);
    CHECK(json_out.find("\"severity\"") != std::string::npos);
    CHECK(render_json(DiffReport{}) != json_out);
}

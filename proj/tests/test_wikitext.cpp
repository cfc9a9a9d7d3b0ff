#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "leia/unicode.hpp"
#include "leia/wiki/wikitext.hpp"

using namespace leia;

namespace {

struct Result {
    std::string text;
    std::vector<LinkSpan> links;
    ExtractDiagnostics diags;
};

Result tx(std::string_view src, const char* lang = "en") {
    WikitextExtractor e(LangProfile::for_lang(lang));
    Result r;
    e.textify(src, r.text, r.links);
    r.diags = e.take_diagnostics();
    return r;
}

// Every span must slice back to its anchor text.
void check_span_fidelity(const Result& r) {
    for (const LinkSpan& l : r.links) {
        CHECK(l.char_end > l.char_start);
        CHECK(l.char_end <= uni::scalar_length(r.text));
        CHECK(uni::scalar_slice(r.text, l.char_start, l.char_end) == l.anchor_text);
    }
}

}  // namespace

TEST_CASE("plain link keeps target text as anchor") {
    auto r = tx("see [[Paris]]");
    CHECK(r.text == "see Paris");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].char_start == 4);
    CHECK(r.links[0].char_end == 9);
    CHECK(r.links[0].target_title == "Paris");
    CHECK(r.links[0].anchor_text == "Paris");
    check_span_fidelity(r);
}

TEST_CASE("piped link keeps the label as anchor") {
    auto r = tx("[[Paris|the French capital]]");
    CHECK(r.text == "the French capital");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].char_start == 0);
    CHECK(r.links[0].char_end == 18);
    CHECK(r.links[0].target_title == "Paris");
    check_span_fidelity(r);
}

TEST_CASE("fragments are stripped from targets but not anchors") {
    auto r = tx("[[Paris#History|history]]");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].target_title == "Paris");
    CHECK(r.links[0].anchor_text == "history");

    auto bare = tx("[[Paris#History]]");
    REQUIRE(bare.links.size() == 1);
    CHECK(bare.links[0].target_title == "Paris");
    CHECK(bare.links[0].anchor_text == "Paris#History");
}

TEST_CASE("fragment-only links emit text without a span") {
    auto r = tx("go [[#section|here]] now");
    CHECK(r.text == "go here now");
    CHECK(r.links.empty());
    CHECK(r.diags.count("fragment_only_link") == 1);
}

TEST_CASE("leading colon escapes namespace handling") {
    auto r = tx("[[:Category:Books|books]]");
    CHECK(r.text == "books");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].target_title == "Category:Books");
}

TEST_CASE("media embeds vanish with their captions and nested links") {
    auto r = tx("a[[File:X.jpg|thumb|caption [[Y]] here]]b");
    CHECK(r.text == "ab");
    CHECK(r.links.empty());

    auto img = tx("x[[Image:Y.png]]y");
    CHECK(img.text == "xy");

    auto cat = tx("x[[Category:Books]]y");
    CHECK(cat.text == "xy");
    CHECK(cat.links.empty());

    auto ja = tx("あ[[ファイル:Z.jpg|サムネ]]い", "ja");
    CHECK(ja.text == "あい");

    auto caseless = tx("x[[file:lower.jpg]]y");
    CHECK(caseless.text == "xy");
}

TEST_CASE("nested link inside a label renders flat, outer link wins") {
    auto r = tx("[[A|see [[B]] now]]");
    CHECK(r.text == "see B now");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].target_title == "A");
    CHECK(r.links[0].anchor_text == "see B now");
    check_span_fidelity(r);
}

TEST_CASE("empty label falls back to the target text") {
    auto r = tx("[[Paris|]]");
    CHECK(r.text == "Paris");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].target_title == "Paris");
    CHECK(r.links[0].anchor_text == "Paris");
}

TEST_CASE("quote markup is removed, literal apostrophes kept") {
    CHECK(tx("'''bold''' and ''italic''").text == "bold and italic");
    CHECK(tx("it's fine").text == "it's fine");
    CHECK(tx("''''q''''").text == "'q'");
    CHECK(tx("'''''both'''''").text == "both");
}

TEST_CASE("templates disappear entirely") {
    auto r = tx("a{{cite web|url=[[L]]}}b");
    CHECK(r.text == "ab");
    CHECK(r.links.empty());
    CHECK(tx("a{{outer{{inner}}tail}}b").text == "ab");
    CHECK(tx("a{{{param}}}b").text == "ab");
}

TEST_CASE("unbalanced template degrades to literal text with a diagnostic") {
    auto r = tx("a{{bad");
    CHECK(r.text == "a{{bad");
    CHECK(r.diags.count("unclosed_template") == 1);
}

TEST_CASE("tables are removed wholesale") {
    auto r = tx("x\n{| class=\"wikitable\"\n|-\n| [[A]] || b\n|}\ny");
    CHECK(r.text == "x\n\ny");
    CHECK(r.links.empty());
    CHECK(tx("{| a {| inner |} c |}").text == "");
    auto bad = tx("z{| never closed");
    CHECK(bad.text == "z{| never closed");
    CHECK(bad.diags.count("unclosed_table") == 1);
}

TEST_CASE("headings keep their text on their own line") {
    auto r = tx("A\n== History ==\nB");
    CHECK(r.text == "A\n\nHistory\nB");

    auto deep = tx("=== Deep ===\ntail");
    CHECK(deep.text == "Deep\ntail");
}

TEST_CASE("links inside headings are recorded") {
    auto r = tx("== About [[Paris]] ==\nx");
    REQUIRE(r.links.size() == 1);
    CHECK(r.links[0].target_title == "Paris");
    check_span_fidelity(r);
}

TEST_CASE("list markers are stripped, items keep their text") {
    auto r = tx("* one\n* two [[L]]\n# three\n;term\n: def");
    CHECK(r.text == "one\ntwo L\nthree\nterm\ndef");
    REQUIRE(r.links.size() == 1);
    check_span_fidelity(r);
}

TEST_CASE("horizontal rules vanish") {
    CHECK(tx("a\n----\nb").text == "a\n\nb");
}

TEST_CASE("ref elements are discarded with their content") {
    auto r = tx("x<ref>cite [[L]]</ref>y");
    CHECK(r.text == "xy");
    CHECK(r.links.empty());
    CHECK(tx("x<ref name=\"a\"/>y").text == "xy");
    CHECK(tx("v<math>\\frac{a}{b}</math>w").text == "vw");
    CHECK(tx("<references/>").text == "");
    CHECK(tx("q<REF>upper</REF>r").text == "qr");
}

TEST_CASE("plain html tags are dropped, content kept") {
    CHECK(tx("a<b>bold</b>c").text == "aboldc");
    CHECK(tx("a<br/>b").text == "ab");
    CHECK(tx("a<div class=\"x\">mid</div>b").text == "amidb");
}

TEST_CASE("unclosed discard tag keeps following text with a diagnostic") {
    auto r = tx("a<ref>no close");
    CHECK(r.text == "ano close");
    CHECK(r.diags.count("unclosed_discard_tag") == 1);
}

TEST_CASE("comments are removed, unclosed comments degrade") {
    CHECK(tx("a<!-- hidden -->b").text == "ab");
    auto r = tx("a<!--x");
    CHECK(r.text == "a<!--x");
    CHECK(r.diags.count("unclosed_comment") == 1);
}

TEST_CASE("external links keep only their label") {
    CHECK(tx("see [https://x.org the site] ok").text == "see the site ok");
    CHECK(tx("a[https://x.org]b").text == "ab");
    CHECK(tx("[ftp://f.org f]").text == "f");
    CHECK(tx("[//rel.org r]").text == "r");
    CHECK(tx("a [not a url] b").text == "a [not a url] b");
    CHECK(tx("1 < 2 and 3 > 2").text == "1 < 2 and 3 > 2");
}

TEST_CASE("span offsets are scalar-based for multibyte text") {
    auto r = tx("日本の[[東京]]は[[首都]]です", "ja");
    CHECK(r.text == "日本の東京は首都です");
    REQUIRE(r.links.size() == 2);
    CHECK(r.links[0].char_start == 3);
    CHECK(r.links[0].char_end == 5);
    CHECK(r.links[1].char_start == 6);
    CHECK(r.links[1].char_end == 8);
    check_span_fidelity(r);
}

TEST_CASE("surrounding whitespace is trimmed but spans stay valid") {
    auto r = tx("\n\n  a [[B]]   \n\n");
    CHECK(r.text == "a B");
    REQUIRE(r.links.size() == 1);
    check_span_fidelity(r);
}

TEST_CASE("clean input leaves no residual markup") {
    auto r = tx("'''T''' is a [[thing]].\n\n== H ==\n{{tmpl}}\n* [[a|b]]\n{| t |}\n<ref>x</ref>done");
    CHECK(r.diags.empty());
    for (const char* residue : {"[[", "]]", "{{", "}}", "{|", "|}", "<ref", "'''"})
        CHECK(r.text.find(residue) == std::string::npos);
    check_span_fidelity(r);
}

TEST_CASE("extract skips redirects and non-zero namespaces") {
    WikitextExtractor e;
    RawPage redirect{"R", 0, true, "#REDIRECT [[X]]", 10};
    auto skip1 = e.extract(redirect, "en");
    REQUIRE(std::holds_alternative<SkipReason>(skip1));
    CHECK(std::get<SkipReason>(skip1) == SkipReason::Redirect);

    RawPage tmpl{"Template:X", 10, false, "{{{a}}}", 11};
    auto skip2 = e.extract(tmpl, "en");
    REQUIRE(std::holds_alternative<SkipReason>(skip2));
    CHECK(std::get<SkipReason>(skip2) == SkipReason::Namespace);

    RawPage ok{"Article", 0, false, "see [[Paris]]", 12};
    auto got = e.extract(ok, "en");
    REQUIRE(std::holds_alternative<Article>(got));
    const Article& a = std::get<Article>(got);
    CHECK(a.page_id == 12);
    CHECK(a.lang == "en");
    CHECK(a.title == "Article");
    CHECK(a.text == "see Paris");
    REQUIRE(a.links.size() == 1);
}

TEST_CASE("links arrive in document order with non-overlapping spans") {
    auto r = tx("[[A]] x [[B]] y [[C|see]] z [[D]]");
    REQUIRE(r.links.size() == 4);
    for (size_t i = 1; i < r.links.size(); ++i)
        CHECK(r.links[i - 1].char_end <= r.links[i].char_start);
    check_span_fidelity(r);
}

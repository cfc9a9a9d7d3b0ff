#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "leia/wiki/dump.hpp"
#include "leia/xml.hpp"

using namespace leia;

namespace {

struct Ev {
    XmlReader::Event kind;
    std::string payload;  // name or text

    bool operator==(const Ev&) const = default;
};

std::vector<Ev> run_events(const std::string& doc, size_t chunk = 1 << 20) {
    std::istringstream in(doc);
    XmlReader r(in, chunk);
    std::vector<Ev> out;
    for (;;) {
        auto ev = r.next();
        if (ev == XmlReader::Event::Eof) break;
        out.push_back({ev, ev == XmlReader::Event::Text ? r.text() : r.name()});
    }
    return out;
}

std::string data_path(const char* name) { return std::string(LEIA_TEST_DATA_DIR "/") + name; }

}  // namespace

TEST_CASE("XmlReader yields start, text and end events in order") {
    auto evs = run_events("<a x=\"1\"><b>hi</b></a>");
    std::vector<Ev> expect{{XmlReader::Event::Start, "a"},
                           {XmlReader::Event::Start, "b"},
                           {XmlReader::Event::Text, "hi"},
                           {XmlReader::Event::End, "b"},
                           {XmlReader::Event::End, "a"}};
    CHECK(evs == expect);
}

TEST_CASE("XmlReader reads attributes with entity decoding") {
    std::istringstream in("<page title=\"a&amp;b\" n='7'/>");
    XmlReader r(in);
    REQUIRE(r.next() == XmlReader::Event::Start);
    CHECK(r.attr("title") == "a&b");
    CHECK(r.attr("n") == "7");
    CHECK(r.has_attr("n"));
    CHECK_FALSE(r.has_attr("missing"));
    CHECK(r.next() == XmlReader::Event::End);  // self-closing
    CHECK(r.next() == XmlReader::Event::Eof);
}

TEST_CASE("XmlReader decodes character and named references") {
    auto evs = run_events("<t>&lt;&gt;&amp;&quot;&apos;&#65;&#x3042;</t>");
    REQUIRE(evs.size() == 3);
    CHECK(evs[1].payload == "<>&\"'Aあ");
}

TEST_CASE("XmlReader keeps unknown or malformed references literal") {
    auto evs = run_events("<t>&nope; &# x; a&b</t>");
    REQUIRE(evs.size() == 3);
    CHECK(evs[1].payload == "&nope; &# x; a&b");
}

TEST_CASE("XmlReader passes CDATA through as text") {
    auto evs = run_events("<t><![CDATA[x < y & z]]></t>");
    REQUIRE(evs.size() == 3);
    CHECK(evs[1].payload == "x < y & z");
}

TEST_CASE("XmlReader skips comments, prolog and doctype") {
    auto evs = run_events("<?xml version=\"1.0\"?><!DOCTYPE r><r>x<!-- gone -->y</r>");
    std::vector<Ev> expect{{XmlReader::Event::Start, "r"},
                           {XmlReader::Event::Text, "x"},
                           {XmlReader::Event::Text, "y"},
                           {XmlReader::Event::End, "r"}};
    CHECK(evs == expect);
}

TEST_CASE("XmlReader survives tiny chunk sizes with straddling entities") {
    std::string doc = "<a>aaaaaaa&amp;bbbbbbb<!-- a comment that spans chunks --><b>&#x3042;</b></a>";
    for (size_t chunk : {3, 4, 7, 16}) {
        std::string text;
        std::istringstream in(doc);
        XmlReader r(in, chunk);
        for (;;) {
            auto ev = r.next();
            if (ev == XmlReader::Event::Eof) break;
            if (ev == XmlReader::Event::Text) text += r.text();
        }
        CHECK(text == "aaaaaaa&bbbbbbbあ");
    }
}

TEST_CASE("XmlReader reports malformed input with a byte offset") {
    auto check_throws = [](const std::string& doc) {
        std::istringstream in(doc);
        XmlReader r(in);
        try {
            for (;;)
                if (r.next() == XmlReader::Event::Eof) break;
            FAIL("expected ParseError for: " << doc);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("byte") != std::string::npos);
        }
    };
    check_throws("<a></b>");           // mismatched close
    check_throws("</lone>");           // close without open
    check_throws("<a><b></b>");        // truncated: a never closes
    check_throws("<a foo></a>");       // attribute without value
    check_throws("<a foo=bar></a>");   // unquoted attribute value
}

TEST_CASE("read_element_text concatenates text and skips children") {
    std::istringstream in("<p>one<skip>gone</skip> two</p>");
    XmlReader r(in);
    REQUIRE(r.next() == XmlReader::Event::Start);
    std::string out;
    r.read_element_text(out);
    CHECK(out == "one two");
    CHECK(r.next() == XmlReader::Event::Eof);
}

// ---- dump reader ----

TEST_CASE("DumpReader yields pages in dump order with metadata") {
    std::ifstream in(data_path("mini_dump.xml"), std::ios::binary);
    REQUIRE(in.good());
    DumpReader reader(in);
    std::vector<RawPage> pages;
    RawPage p;
    while (reader.next(p)) pages.push_back(p);

    REQUIRE(pages.size() == 5);
    CHECK(reader.pages_read() == 5);

    CHECK(pages[0].page_id == 1);
    CHECK(pages[0].title == "チェス");
    CHECK(pages[0].ns == 0);
    CHECK_FALSE(pages[0].is_redirect);
    CHECK(pages[0].wikitext.find("[[フランス]]") != std::string::npos);
    CHECK(pages[0].wikitext.find("<ref>出典</ref>") != std::string::npos);  // entities decoded

    CHECK(pages[1].page_id == 2);
    CHECK(pages[1].is_redirect);

    CHECK(pages[2].page_id == 3);
    CHECK(pages[2].ns == 10);

    CHECK(pages[3].page_id == 4);
    CHECK(pages[3].wikitext.find("&記号。") != std::string::npos);

    CHECK(pages[4].page_id == 5);
    CHECK(pages[4].wikitext.empty());
}

TEST_CASE("DumpReader returns false on a pageless dump") {
    std::istringstream in("<mediawiki><siteinfo><sitename>W</sitename></siteinfo></mediawiki>");
    DumpReader reader(in);
    RawPage p;
    CHECK_FALSE(reader.next(p));
    CHECK(reader.pages_read() == 0);
}

TEST_CASE("DumpReader throws on a dump truncated inside a page") {
    std::ifstream in(data_path("mini_dump.xml"), std::ios::binary);
    REQUIRE(in.good());
    std::string full((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t cut = full.find("</revision>");
    REQUIRE(cut != std::string::npos);
    std::istringstream trunc(full.substr(0, cut));
    DumpReader reader(trunc);
    RawPage p;
    CHECK_THROWS_AS(
        [&] {
            while (reader.next(p)) {
            }
        }(),
        ParseError);
}

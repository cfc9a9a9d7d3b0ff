#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <string>
#include <vector>

#include "leia/augment.hpp"
#include "leia/records.hpp"
#include "leia/rng.hpp"
#include "leia/unicode.hpp"

using namespace leia;

namespace {

Article chess_article() {
    Article a;
    a.page_id = 42;
    a.lang = "zh";
    a.title = "国际象棋";
    a.text = "国际象棋是一种棋盘游戏";
    a.links.push_back({0, 4, "国际象棋", "国际象棋"});
    return a;
}

Resolver map_resolver(std::map<std::string, std::string> m) {
    return [m = std::move(m)](std::string_view t) -> std::optional<std::string> {
        auto it = m.find(std::string(t));
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
}

void check_spans(const AugmentedDoc& doc, const AugmentConfig& config) {
    size_t prev_end = 0;
    for (const AnnotatedSpan& s : doc.spans) {
        CHECK(s.char_start >= prev_end);
        CHECK(s.char_end > s.char_start);
        prev_end = s.char_end;
        std::string_view got = uni::scalar_slice(doc.text, s.char_start, s.char_end);
        if (s.kind == SpanKind::SpecialOpen) CHECK(got == config.special_open);
        if (s.kind == SpanKind::SpecialClose) CHECK(got == config.special_close);
    }
    CHECK(prev_end <= uni::scalar_length(doc.text));
}

}  // namespace

TEST_CASE("right strategy inserts the wrapped name after the anchor") {
    AugmentConfig cfg;  // defaults: right, p_skip 0, specials on
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);

    CHECK(doc.text == "国际象棋<translate>Chess</translate>是一种棋盘游戏");
    REQUIRE(doc.spans.size() == 4);
    CHECK(doc.spans[0] == AnnotatedSpan{SpanKind::Anchor, 0, 4});
    CHECK(doc.spans[1] == AnnotatedSpan{SpanKind::SpecialOpen, 4, 15});
    CHECK(doc.spans[2] == AnnotatedSpan{SpanKind::EnglishName, 15, 20});
    CHECK(doc.spans[3] == AnnotatedSpan{SpanKind::SpecialClose, 20, 32});
    CHECK(doc.counters.links == 1);
    CHECK(doc.counters.resolved == 1);
    CHECK(doc.counters.insertions == 1);
    CHECK(doc.counters.skips == 0);
    CHECK(doc.source_len == 11);
    check_spans(doc, cfg);
}

TEST_CASE("left strategy inserts the wrapped name before the anchor") {
    AugmentConfig cfg;
    cfg.strategy = Strategy::Left;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);

    CHECK(doc.text == "<translate>Chess</translate>国际象棋是一种棋盘游戏");
    REQUIRE(doc.spans.size() == 4);
    CHECK(doc.spans[0] == AnnotatedSpan{SpanKind::SpecialOpen, 0, 11});
    CHECK(doc.spans[1] == AnnotatedSpan{SpanKind::EnglishName, 11, 16});
    CHECK(doc.spans[2] == AnnotatedSpan{SpanKind::SpecialClose, 16, 28});
    CHECK(doc.spans[3] == AnnotatedSpan{SpanKind::Anchor, 28, 32});
    check_spans(doc, cfg);
}

TEST_CASE("replace strategy swaps the anchor for the wrapped name") {
    AugmentConfig cfg;
    cfg.strategy = Strategy::Replace;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);

    CHECK(doc.text == "<translate>Chess</translate>是一种棋盘游戏");
    REQUIRE(doc.spans.size() == 3);
    CHECK(doc.spans[0].kind == SpanKind::SpecialOpen);
    CHECK(doc.spans[1].kind == SpanKind::EnglishName);
    CHECK(doc.spans[2].kind == SpanKind::SpecialClose);
    check_spans(doc, cfg);
}

TEST_CASE("insertions without special tokens are bare names") {
    AugmentConfig cfg;
    cfg.use_special_tokens = false;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);

    CHECK(doc.text == "国际象棋Chess是一种棋盘游戏");
    REQUIRE(doc.spans.size() == 2);
    CHECK(doc.spans[0] == AnnotatedSpan{SpanKind::Anchor, 0, 4});
    CHECK(doc.spans[1] == AnnotatedSpan{SpanKind::EnglishName, 4, 9});
}

TEST_CASE("unresolved links keep only their anchor span") {
    AugmentConfig cfg;
    auto doc = augment(chess_article(), map_resolver({}), cfg);
    CHECK(doc.text == chess_article().text);
    REQUIRE(doc.spans.size() == 1);
    CHECK(doc.spans[0].kind == SpanKind::Anchor);
    CHECK(doc.counters.links == 1);
    CHECK(doc.counters.resolved == 0);
    CHECK(doc.counters.insertions == 0);
}

TEST_CASE("p_skip one keeps the text identical") {
    AugmentConfig cfg;
    cfg.p_skip = 1.0;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);
    CHECK(doc.text == chess_article().text);
    CHECK(doc.counters.resolved == 1);
    CHECK(doc.counters.skips == 1);
    CHECK(doc.counters.insertions == 0);
}

TEST_CASE("delimiter collision aborts the document") {
    Article a = chess_article();
    a.text = "bad <translate> already here";
    a.links.clear();
    CHECK_THROWS_AS(augment(a, map_resolver({}), AugmentConfig{}), DelimiterCollision);

    Article b = chess_article();
    b.text = "bad </translate> text";
    b.links.clear();
    CHECK_THROWS_AS(augment(b, map_resolver({}), AugmentConfig{}), DelimiterCollision);
}

TEST_CASE("strip_insertions inverts left and right augmentation") {
    Article a;
    a.page_id = 7;
    a.lang = "ja";
    a.text = "日本の東京は首都です";
    a.links.push_back({3, 5, "東京", "東京"});
    a.links.push_back({6, 8, "首都", "首都"});
    Resolver r = map_resolver({{"東京", "Tokyo"}, {"首都", "Capital city"}});

    for (Strategy strat : {Strategy::Left, Strategy::Right}) {
        for (double p : {0.0, 0.5, 1.0}) {
            AugmentConfig cfg;
            cfg.strategy = strat;
            cfg.p_skip = p;
            cfg.seed = 7;
            auto doc = augment(a, r, cfg);
            CHECK(strip_insertions(doc) == a.text);
            check_spans(doc, cfg);
        }
    }
}

TEST_CASE("strip_insertions refuses replace-strategy docs") {
    AugmentConfig cfg;
    cfg.strategy = Strategy::Replace;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);
    CHECK_THROWS_AS(strip_insertions(doc), NotInvertible);
}

TEST_CASE("skip draws are deterministic per (seed, page, link)") {
    Article a;
    a.page_id = 1234;
    a.lang = "en";
    const size_t n = 2000;
    std::string text;
    for (size_t i = 0; i < n; ++i) {
        a.links.push_back({uni::scalar_length(text), uni::scalar_length(text) + 1, "T", "x"});
        text += "x ";
    }
    a.text = text;
    Resolver r = map_resolver({{"T", "t"}});

    AugmentConfig cfg;
    cfg.p_skip = 0.3;
    cfg.seed = 5;
    auto doc1 = augment(a, r, cfg);
    auto doc2 = augment(a, r, cfg);
    CHECK(doc1.text == doc2.text);
    CHECK(doc1.spans == doc2.spans);
    CHECK(doc1.counters.skips == doc2.counters.skips);

    // empirical skip rate within 3 sigma of p_skip
    double rate = double(doc1.counters.skips) / double(doc1.counters.resolved);
    double sigma = std::sqrt(0.3 * 0.7 / double(n));
    CHECK(std::abs(rate - 0.3) < 3 * sigma);

    // the draw matches the published per-record convention
    uint64_t skips = 0;
    for (size_t i = 0; i < n; ++i)
        if (record_uniform(cfg.seed, a.page_id, i) < cfg.p_skip) ++skips;
    CHECK(skips == doc1.counters.skips);

    cfg.seed = 6;
    auto doc3 = augment(a, r, cfg);
    CHECK(doc3.counters.skips != doc1.counters.skips);  // astronomically unlikely to tie
}

TEST_CASE("augmented docs serialize and parse losslessly") {
    AugmentConfig cfg;
    auto doc = augment(chess_article(), map_resolver({{"国际象棋", "Chess"}}), cfg);
    nlohmann::json j = to_json(doc);
    AugmentedDoc back = augmented_from_json(j);
    CHECK(back.page_id == doc.page_id);
    CHECK(back.text == doc.text);
    CHECK(back.spans == doc.spans);

    CHECK_THROWS_AS(augmented_from_json(nlohmann::json{
                        {"page_id", 1},
                        {"text", "x"},
                        {"spans", {{{"kind", "bogus"}, {"start", 0}, {"end", 1}}}}}),
                    ParseError);
}

TEST_CASE("article json form is byte-stable") {
    Article a;
    a.page_id = 12;
    a.lang = "en";
    a.title = "Article";
    a.text = "see Paris";
    a.links.push_back({4, 9, "Paris", "Paris"});
    CHECK(to_json(a).dump() ==
          "{\"lang\":\"en\",\"links\":[{\"anchor\":\"Paris\",\"end\":9,\"start\":4,"
          "\"target\":\"Paris\"}],\"page_id\":12,\"text\":\"see Paris\",\"title\":\"Article\"}");
    Article back = article_from_json(to_json(a));
    CHECK(back.text == a.text);
    CHECK(back.links.size() == 1);
    CHECK(back.links[0].target_title == "Paris");
}

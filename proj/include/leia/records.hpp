#pragma once

// Line-delimited JSON forms of the intermediate records.
//
//   article:   {"page_id":…,"lang":…,"title":…,"text":…,
//               "links":[{"start":…,"end":…,"target":…,"anchor":…}]}
//   augmented: {"page_id":…,"text":…,"spans":[{"kind":…,"start":…,"end":…}]}
//
// Keys serialize alphabetically, so the byte form is stable.

#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "leia/augment.hpp"
#include "leia/util.hpp"
#include "leia/wiki/wikitext.hpp"

namespace leia {

inline nlohmann::json to_json(const Article& a) {
    nlohmann::json links = nlohmann::json::array();
    for (const LinkSpan& l : a.links)
        links.push_back({{"start", l.char_start},
                         {"end", l.char_end},
                         {"target", l.target_title},
                         {"anchor", l.anchor_text}});
    return {{"page_id", a.page_id},
            {"lang", a.lang},
            {"title", a.title},
            {"text", a.text},
            {"links", std::move(links)}};
}

inline Article article_from_json(const nlohmann::json& j) {
    Article a;
    a.page_id = j.at("page_id").get<uint64_t>();
    a.lang = j.at("lang").get<std::string>();
    a.title = j.at("title").get<std::string>();
    a.text = j.at("text").get<std::string>();
    for (const auto& l : j.at("links")) {
        LinkSpan s;
        s.char_start = l.at("start").get<size_t>();
        s.char_end = l.at("end").get<size_t>();
        s.target_title = l.at("target").get<std::string>();
        s.anchor_text = l.at("anchor").get<std::string>();
        a.links.push_back(std::move(s));
    }
    return a;
}

inline nlohmann::json to_json(const AugmentedDoc& d) {
    nlohmann::json spans = nlohmann::json::array();
    for (const AnnotatedSpan& s : d.spans)
        spans.push_back(
            {{"kind", span_kind_name(s.kind)}, {"start", s.char_start}, {"end", s.char_end}});
    return {{"page_id", d.page_id}, {"text", d.text}, {"spans", std::move(spans)}};
}

// Rebuilds the fields present in the JSON form; strategy and counters
// exist only on freshly augmented docs.
inline AugmentedDoc augmented_from_json(const nlohmann::json& j) {
    AugmentedDoc d;
    d.page_id = j.at("page_id").get<uint64_t>();
    d.text = j.at("text").get<std::string>();
    for (const auto& s : j.at("spans")) {
        auto kind = span_kind_from_name(s.at("kind").get<std::string>());
        if (!kind) throw ParseError("unknown span kind: " + s.at("kind").get<std::string>());
        d.spans.push_back({*kind, s.at("start").get<size_t>(), s.at("end").get<size_t>()});
    }
    return d;
}

template <typename T>
void write_jsonl(std::ostream& out, const T& record) {
    out << to_json(record).dump() << '\n';
}

// Parses one JSONL line; throws ParseError with the line number on bad input.
inline nlohmann::json parse_jsonl_line(const std::string& line, uint64_t lineno) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw ParseError("bad JSON at line " + std::to_string(lineno));
    return j;
}

// Streams records through `fn`; returns the number of lines consumed.
template <typename Fn>
uint64_t for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        fn(parse_jsonl_line(line, lineno), lineno);
    }
    return lineno;
}

}  // namespace leia

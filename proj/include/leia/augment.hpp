#pragma once

// Entity-name insertion. Each hyperlink whose target resolves to an
// English name gets that name spliced in next to the anchor, wrapped
// in <translate>...</translate> delimiters, subject to a per-link
// deterministic skip draw. Offsets are Unicode scalar positions.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leia/rng.hpp"
#include "leia/unicode.hpp"
#include "leia/util.hpp"
#include "leia/wiki/wikitext.hpp"

namespace leia {

enum class Strategy { Left, Right, Replace };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Left: return "left";
        case Strategy::Right: return "right";
        case Strategy::Replace: return "replace";
    }
    return "?";
}

inline std::optional<Strategy> strategy_from_name(std::string_view name) {
    if (name == "left") return Strategy::Left;
    if (name == "right") return Strategy::Right;
    if (name == "replace") return Strategy::Replace;
    return std::nullopt;
}

struct AugmentConfig {
    Strategy strategy = Strategy::Right;
    double p_skip = 0.0;
    uint64_t seed = 0;
    bool use_special_tokens = true;
    std::string special_open = "<translate>";
    std::string special_close = "</translate>";
};

enum class SpanKind { Anchor, SpecialOpen, SpecialClose, EnglishName };

inline const char* span_kind_name(SpanKind k) {
    switch (k) {
        case SpanKind::Anchor: return "anchor";
        case SpanKind::SpecialOpen: return "special_open";
        case SpanKind::SpecialClose: return "special_close";
        case SpanKind::EnglishName: return "english_name";
    }
    return "?";
}

inline std::optional<SpanKind> span_kind_from_name(std::string_view name) {
    if (name == "anchor") return SpanKind::Anchor;
    if (name == "special_open") return SpanKind::SpecialOpen;
    if (name == "special_close") return SpanKind::SpecialClose;
    if (name == "english_name") return SpanKind::EnglishName;
    return std::nullopt;
}

struct AnnotatedSpan {
    SpanKind kind;
    size_t char_start;
    size_t char_end;  // exclusive

    friend bool operator==(const AnnotatedSpan&, const AnnotatedSpan&) = default;
};

struct AugmentCounters {
    uint64_t links = 0;
    uint64_t resolved = 0;
    uint64_t insertions = 0;
    uint64_t skips = 0;
};

struct AugmentedDoc {
    uint64_t page_id = 0;
    std::string text;
    std::vector<AnnotatedSpan> spans;
    size_t source_len = 0;  // scalar length of the pre-insertion text
    Strategy strategy = Strategy::Right;
    AugmentCounters counters;
};

inline AugmentedDoc augment(const Article& article, const Resolver& resolver,
                            const AugmentConfig& config) {
    if (article.text.find(config.special_open) != std::string::npos ||
        article.text.find(config.special_close) != std::string::npos)
        throw DelimiterCollision("article " + std::to_string(article.page_id) +
                                 " already contains a special delimiter");

    AugmentedDoc doc;
    doc.page_id = article.page_id;
    doc.strategy = config.strategy;
    doc.text.reserve(article.text.size() + article.text.size() / 8);

    const size_t open_len = uni::scalar_length(config.special_open);
    const size_t close_len = uni::scalar_length(config.special_close);

    size_t src_byte = 0;    // consumed bytes of article.text
    size_t src_scalar = 0;  // consumed scalars of article.text
    size_t out_scalar = 0;  // scalars emitted into doc.text

    // Copies article text up to the given scalar offset.
    auto copy_until = [&](size_t scalar_target) {
        size_t start_byte = src_byte;
        size_t copied = 0;
        while (src_scalar < scalar_target && src_byte < article.text.size()) {
            uni::decode(article.text, src_byte);
            ++src_scalar;
            ++copied;
        }
        doc.text.append(article.text, start_byte, src_byte - start_byte);
        out_scalar += copied;
    };

    auto emit_insertion = [&](const std::string& name) {
        size_t name_len = uni::scalar_length(name);
        if (config.use_special_tokens) {
            doc.spans.push_back({SpanKind::SpecialOpen, out_scalar, out_scalar + open_len});
            doc.text += config.special_open;
            out_scalar += open_len;
        }
        doc.spans.push_back({SpanKind::EnglishName, out_scalar, out_scalar + name_len});
        doc.text += name;
        out_scalar += name_len;
        if (config.use_special_tokens) {
            doc.spans.push_back({SpanKind::SpecialClose, out_scalar, out_scalar + close_len});
            doc.text += config.special_close;
            out_scalar += close_len;
        }
    };

    for (size_t i = 0; i < article.links.size(); ++i) {
        const LinkSpan& link = article.links[i];
        ++doc.counters.links;

        copy_until(link.char_start);  // verbatim text before the anchor

        size_t anchor_len = link.char_end - link.char_start;
        std::optional<std::string> name =
            link.target_title.empty() ? std::nullopt : resolver(link.target_title);
        if (name && name->empty()) name.reset();

        bool insert = false;
        if (name) {
            ++doc.counters.resolved;
            double u = record_uniform(config.seed, article.page_id, i);
            if (u < config.p_skip) ++doc.counters.skips;
            else {
                insert = true;
                ++doc.counters.insertions;
            }
        }

        auto copy_anchor = [&] {
            doc.spans.push_back({SpanKind::Anchor, out_scalar, out_scalar + anchor_len});
            copy_until(link.char_end);
        };

        if (!insert) {
            copy_anchor();
        } else switch (config.strategy) {
            case Strategy::Left:
                emit_insertion(*name);
                copy_anchor();
                break;
            case Strategy::Right:
                copy_anchor();
                emit_insertion(*name);
                break;
            case Strategy::Replace: {
                // consume the anchor without emitting it
                while (src_scalar < link.char_end && src_byte < article.text.size()) {
                    uni::decode(article.text, src_byte);
                    ++src_scalar;
                }
                emit_insertion(*name);
                break;
            }
        }
    }

    copy_until(size_t(-1));  // tail after the last link
    doc.source_len = src_scalar;
    return doc;
}

// Removes every inserted segment, recovering the pre-insertion text.
// Only left/right docs are invertible: replace discards anchors.
inline std::string strip_insertions(const AugmentedDoc& doc) {
    if (doc.strategy == Strategy::Replace)
        throw NotInvertible("replace-strategy docs cannot be stripped");
    std::string out;
    out.reserve(doc.text.size());
    size_t byte = 0, scalar = 0;
    auto skip_to = [&](size_t scalar_target) {
        while (scalar < scalar_target && byte < doc.text.size()) {
            uni::decode(doc.text, byte);
            ++scalar;
        }
    };
    auto copy_to = [&](size_t scalar_target) {
        size_t start = byte;
        skip_to(scalar_target);
        out.append(doc.text, start, byte - start);
    };
    for (const AnnotatedSpan& s : doc.spans) {
        if (s.kind == SpanKind::Anchor) continue;
        copy_to(s.char_start);
        skip_to(s.char_end);
    }
    out.append(doc.text, byte, doc.text.size() - byte);
    return out;
}

}  // namespace leia

#pragma once

// Wikitext to plain text conversion with exact hyperlink spans.
//
// Internal links become their anchor text and a LinkSpan with offsets in
// Unicode scalar values; media and category links, templates, comments,
// <ref> elements, tables and quote markup are removed; headings keep
// their text on a line of their own; external links keep the label.
// Malformed markup degrades to literal text and bumps a diagnostics
// counter, never aborts.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "leia/unicode.hpp"
#include "leia/wiki/dump.hpp"

namespace leia {

struct LinkSpan {
    size_t char_start = 0;
    size_t char_end = 0;         // exclusive
    std::string target_title;    // raw wikitext target, fragment stripped
    std::string anchor_text;
};

struct Article {
    uint64_t page_id = 0;
    std::string lang;
    std::string title;
    std::string text;
    std::vector<LinkSpan> links;
};

enum class SkipReason { Redirect, Namespace };

using ExtractDiagnostics = std::map<std::string, uint64_t>;

// Namespace prefixes whose links are dropped wholesale, per language.
// Matched case-insensitively on the text before the first ':'.
struct LangProfile {
    std::vector<std::string> media_prefixes;

    static LangProfile for_lang(std::string_view lang) {
        LangProfile p;
        p.media_prefixes = {"file", "image", "media", "category"};
        auto add = [&](std::initializer_list<const char*> more) {
            for (const char* m : more) p.media_prefixes.emplace_back(m);
        };
        if (lang == "ja") add({"ファイル", "画像", "カテゴリ", "メディア"});
        else if (lang == "zh") add({"文件", "檔案", "图像", "圖像", "分类", "分類", "媒体文件"});
        else if (lang == "ru") add({"файл", "изображение", "категория", "медиа"});
        else if (lang == "es") add({"archivo", "imagen", "categoría", "categoria"});
        else if (lang == "ar") add({"ملف", "صورة", "تصنيف", "وسائط"});
        else if (lang == "hi") add({"चित्र", "श्रेणी"});
        else if (lang == "sw") add({"picha", "jamii"});
        else if (lang == "de") add({"datei", "bild", "kategorie"});
        else if (lang == "fr") add({"fichier", "image", "catégorie"});
        return p;
    }
};

namespace detail {

// Case folding for namespace prefix comparison, via the simple
// uppercase table so it works for non-Latin prefixes too.
inline std::string fold_upper(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t pos = 0;
    while (pos < s.size()) uni::append(out, uni::simple_uppercase(uni::decode(s, pos)));
    return out;
}

inline std::string_view ascii_trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline bool iequal_ascii(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        char x = a[i], y = b[i];
        if (x >= 'A' && x <= 'Z') x += 32;
        if (y >= 'A' && y <= 'Z') y += 32;
        if (x != y) return false;
    }
    return true;
}

}  // namespace detail

class WikitextExtractor {
public:
    explicit WikitextExtractor(LangProfile profile = LangProfile::for_lang("en"))
        : profile_(std::move(profile)) {
        for (auto& p : profile_.media_prefixes) folded_prefixes_.push_back(detail::fold_upper(p));
    }

    // Namespace != 0 and redirects are skipped before any parsing.
    std::variant<Article, SkipReason> extract(const RawPage& page, std::string_view lang) {
        if (page.is_redirect) return SkipReason::Redirect;
        if (page.ns != 0) return SkipReason::Namespace;
        Article art;
        art.page_id = page.page_id;
        art.lang = std::string(lang);
        art.title = page.title;
        textify(page.wikitext, art.text, art.links);
        return art;
    }

    // Low-level entry point: converts wikitext into (text, links).
    void textify(std::string_view src, std::string& text, std::vector<LinkSpan>& links) {
        out_ = &text;
        links_ = &links;
        text.clear();
        links.clear();
        scalars_ = 0;
        last_span_end_ = 0;
        parse_block(src, /*links_enabled=*/true);
        trim_trailing_whitespace();
    }

    const ExtractDiagnostics& diagnostics() const { return diags_; }
    void reset_diagnostics() { diags_.clear(); }
    ExtractDiagnostics take_diagnostics() {
        ExtractDiagnostics out = std::move(diags_);
        diags_.clear();
        return out;
    }

private:
    // ---- output helpers ----

    void emit(std::string_view chunk) {
        if (chunk.empty()) return;
        if (out_->empty()) {  // suppress leading whitespace
            size_t i = 0;
            while (i < chunk.size() &&
                   (chunk[i] == ' ' || chunk[i] == '\t' || chunk[i] == '\n' || chunk[i] == '\r'))
                ++i;
            chunk.remove_prefix(i);
            if (chunk.empty()) return;
        }
        out_->append(chunk);
        scalars_ += uni::scalar_length(chunk);
    }

    void emit_newline() {
        if (out_->empty()) return;
        size_t n = out_->size();
        if (n >= 2 && (*out_)[n - 1] == '\n' && (*out_)[n - 2] == '\n') return;  // collapse
        out_->push_back('\n');
        ++scalars_;
    }

    void trim_trailing_whitespace() {
        while (!out_->empty() && scalars_ > last_span_end_) {
            char c = out_->back();
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') break;
            out_->pop_back();
            --scalars_;
        }
    }

    void diag(const char* key) { ++diags_[key]; }

    // ---- block-level loop ----

    void parse_block(std::string_view src, bool links_enabled) {
        size_t pos = 0;
        bool line_start = true;
        const size_t n = src.size();
        while (pos < n) {
            if (line_start) {
                line_start = false;
                char c = src[pos];
                if (c == '=' && pos + 1 < n && src[pos + 1] == '=') {
                    if (parse_heading(src, pos, links_enabled)) {
                        line_start = true;
                        continue;
                    }
                } else if (c == '*' || c == '#' || c == ';' || c == ':') {
                    size_t p = pos;
                    while (p < n && (src[p] == '*' || src[p] == '#' || src[p] == ';' || src[p] == ':'))
                        ++p;
                    if (p < n && src[p] == ' ') ++p;
                    pos = p;  // keep the item text, drop the markers
                    if (pos >= n) break;
                } else if (c == '-' && src.substr(pos).starts_with("----")) {
                    size_t eol = src.find('\n', pos);
                    pos = eol == std::string_view::npos ? n : eol + 1;
                    emit_newline();
                    line_start = true;
                    continue;
                }
            }
            size_t run_end = find_next_special(src, pos);
            if (run_end > pos) {
                emit(src.substr(pos, run_end - pos));
                pos = run_end;
                continue;
            }
            char c = src[pos];
            switch (c) {
                case '\n':
                    emit_newline();
                    ++pos;
                    line_start = true;
                    break;
                case '\r':
                    ++pos;
                    break;
                case '<':
                    parse_angle(src, pos);
                    break;
                case '{':
                    parse_braces(src, pos);
                    break;
                case '[':
                    parse_bracket(src, pos, links_enabled);
                    break;
                case '\'':
                    parse_quotes(src, pos);
                    break;
                default:
                    emit(src.substr(pos, 1));
                    ++pos;
                    break;
            }
        }
    }

    static size_t find_next_special(std::string_view src, size_t pos) {
        const size_t n = src.size();
        while (pos < n) {
            char c = src[pos];
            if (c == '<' || c == '{' || c == '[' || c == '\'' || c == '\n' || c == '\r') return pos;
            ++pos;
        }
        return n;
    }

    // ---- headings ----

    bool parse_heading(std::string_view src, size_t& pos, bool links_enabled) {
        size_t eol = src.find('\n', pos);
        std::string_view line = src.substr(pos, eol == std::string_view::npos ? src.size() - pos
                                                                              : eol - pos);
        size_t open = 0;
        while (open < line.size() && line[open] == '=') ++open;
        std::string_view rest = line.substr(open);
        while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\t')) rest.remove_suffix(1);
        size_t close = 0;
        while (close < rest.size() && rest[rest.size() - 1 - close] == '=') ++close;
        if (open < 2 || close < 2 || rest.size() <= close) return false;
        std::string_view inner = detail::ascii_trim(rest.substr(0, rest.size() - close));
        if (inner.empty()) return false;
        emit_newline();
        parse_block(inner, links_enabled);
        emit_newline();
        pos = eol == std::string_view::npos ? src.size() : eol + 1;
        return true;
    }

    // ---- angle constructs: comments, ref, plain tags ----

    void parse_angle(std::string_view src, size_t& pos) {
        std::string_view rest = src.substr(pos);
        if (rest.starts_with("<!--")) {
            size_t end = src.find("-->", pos + 4);
            if (end == std::string_view::npos) {
                diag("unclosed_comment");
                emit(src.substr(pos, 4));
                pos += 4;
                return;
            }
            pos = end + 3;
            return;
        }
        // <tag attrs> | </tag> | <tag/>
        size_t p = pos + 1;
        bool closing = p < src.size() && src[p] == '/';
        if (closing) ++p;
        size_t name_start = p;
        while (p < src.size() && (std::isalnum(static_cast<unsigned char>(src[p])) != 0)) ++p;
        if (p == name_start) {  // bare '<'
            emit(src.substr(pos, 1));
            ++pos;
            return;
        }
        std::string_view tag = src.substr(name_start, p - name_start);
        size_t gt = src.find('>', p);
        if (gt == std::string_view::npos) {
            diag("unclosed_tag");
            emit(src.substr(pos, 1));
            ++pos;
            return;
        }
        bool self_closing = gt > pos && src[gt - 1] == '/';
        pos = gt + 1;
        if (closing || self_closing) return;  // tag dropped, content unaffected
        if (is_discard_tag(tag)) {
            // remove the element together with its content
            std::string close_lit = "</";
            close_lit.append(tag);
            size_t hit = ifind(src, close_lit, pos);
            if (hit == std::string_view::npos) {
                diag("unclosed_discard_tag");
                return;  // tag already dropped; content degrades to text
            }
            size_t end_gt = src.find('>', hit);
            pos = end_gt == std::string_view::npos ? src.size() : end_gt + 1;
        }
    }

    static bool is_discard_tag(std::string_view tag) {
        return detail::iequal_ascii(tag, "ref") || detail::iequal_ascii(tag, "references") ||
               detail::iequal_ascii(tag, "gallery") || detail::iequal_ascii(tag, "timeline") ||
               detail::iequal_ascii(tag, "math");
    }

    // Case-insensitive search (ASCII letters only, enough for tag names).
    static size_t ifind(std::string_view hay, std::string_view needle, size_t from) {
        if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
        for (size_t i = from; i + needle.size() <= hay.size(); ++i) {
            if (detail::iequal_ascii(hay.substr(i, needle.size()), needle)) return i;
        }
        return std::string_view::npos;
    }

    // ---- braces: templates {{...}} and tables {|...|} ----

    void parse_braces(std::string_view src, size_t& pos) {
        std::string_view rest = src.substr(pos);
        if (rest.size() >= 2 && rest[1] == '{') {
            if (!skip_template(src, pos)) {
                diag("unclosed_template");
                emit(src.substr(pos, 2));
                pos += 2;
            }
            return;
        }
        if (rest.size() >= 2 && rest[1] == '|') {
            if (!skip_table(src, pos)) {
                diag("unclosed_table");
                emit(src.substr(pos, 2));
                pos += 2;
            }
            return;
        }
        emit(src.substr(pos, 1));
        ++pos;
    }

    // Depth counts brace pairs so {{{params}}} balance out; comments are
    // honored inside. Returns false (pos untouched) when unbalanced.
    static bool skip_template(std::string_view src, size_t& pos) {
        size_t p = pos;
        size_t open_run = 0;
        while (p < src.size() && src[p] == '{') {
            ++p;
            ++open_run;
        }
        size_t depth = open_run / 2;
        while (p < src.size() && depth > 0) {
            char c = src[p];
            if (c == '{') {
                size_t run = 0;
                while (p < src.size() && src[p] == '{') {
                    ++p;
                    ++run;
                }
                depth += run / 2;
            } else if (c == '}') {
                size_t run = 0;
                while (p < src.size() && src[p] == '}') {
                    ++p;
                    ++run;
                }
                depth -= std::min(depth, run / 2);
            } else if (c == '<' && src.substr(p).starts_with("<!--")) {
                size_t end = src.find("-->", p + 4);
                p = end == std::string_view::npos ? src.size() : end + 3;
            } else {
                ++p;
            }
        }
        if (depth > 0) return false;
        pos = p;
        return true;
    }

    bool skip_table(std::string_view src, size_t& pos) {
        size_t p = pos + 2;
        size_t depth = 1;
        while (p < src.size() && depth > 0) {
            char c = src[p];
            if (c == '{') {
                if (p + 1 < src.size() && src[p + 1] == '|') {
                    depth += 1;
                    p += 2;
                } else if (p + 1 < src.size() && src[p + 1] == '{') {
                    size_t q = p;
                    if (!skip_template(src, q)) ++p;  // unbalanced inner template
                    else p = q;
                } else {
                    ++p;
                }
            } else if (c == '|' && p + 1 < src.size() && src[p + 1] == '}') {
                depth -= 1;
                p += 2;
            } else {
                ++p;
            }
        }
        if (depth > 0) return false;
        pos = p;
        return true;
    }

    // ---- brackets: internal links, external links ----

    void parse_bracket(std::string_view src, size_t& pos, bool links_enabled) {
        std::string_view rest = src.substr(pos);
        if (rest.size() >= 2 && rest[1] == '[') {
            if (!parse_internal_link(src, pos, links_enabled)) {
                diag("unclosed_link");
                emit(src.substr(pos, 2));
                pos += 2;
            }
            return;
        }
        if (is_external_link_start(rest)) {
            if (!parse_external_link(src, pos)) {
                diag("unclosed_external_link");
                emit(src.substr(pos, 1));
                ++pos;
            }
            return;
        }
        emit(src.substr(pos, 1));
        ++pos;
    }

    static bool is_external_link_start(std::string_view rest) {
        if (rest.size() < 2) return false;
        std::string_view after = rest.substr(1);
        return after.starts_with("http://") || after.starts_with("https://") ||
               after.starts_with("ftp://") || after.starts_with("//");
    }

    bool parse_external_link(std::string_view src, size_t& pos) {
        size_t close = src.find(']', pos + 1);
        size_t eol = src.find('\n', pos + 1);
        if (close == std::string_view::npos || (eol != std::string_view::npos && eol < close))
            return false;
        std::string_view inner = src.substr(pos + 1, close - pos - 1);
        size_t sp = inner.find(' ');
        if (sp != std::string_view::npos) {
            std::string_view label = detail::ascii_trim(inner.substr(sp + 1));
            if (!label.empty()) parse_block(label, /*links_enabled=*/false);
        }
        pos = close + 1;
        return true;
    }

    // Finds the matching "]]" allowing one level of nesting, as appears
    // in media captions. Returns npos when unbalanced.
    static size_t find_link_end(std::string_view src, size_t pos) {
        size_t depth = 1;
        size_t p = pos + 2;
        while (p + 1 < src.size()) {
            if (src[p] == '[' && src[p + 1] == '[') {
                ++depth;
                p += 2;
            } else if (src[p] == ']' && src[p + 1] == ']') {
                --depth;
                p += 2;
                if (depth == 0) return p;
            } else {
                ++p;
            }
        }
        return std::string_view::npos;
    }

    bool parse_internal_link(std::string_view src, size_t& pos, bool links_enabled) {
        size_t end = find_link_end(src, pos);
        if (end == std::string_view::npos) return false;
        std::string_view inner = src.substr(pos + 2, end - 4 - pos);

        // Split target | label at depth 0 of [[ ]] and {{ }}.
        size_t split = std::string_view::npos;
        {
            size_t depth = 0;
            for (size_t i = 0; i + 1 <= inner.size(); ++i) {
                char c = inner[i];
                if (c == '[' || c == '{') {
                    if (i + 1 < inner.size() && inner[i + 1] == c) {
                        ++depth;
                        ++i;
                    }
                } else if (c == ']' || c == '}') {
                    if (i + 1 < inner.size() && inner[i + 1] == c) {
                        if (depth > 0) --depth;
                        ++i;
                    }
                } else if (c == '|' && depth == 0) {
                    split = i;
                    break;
                }
            }
        }
        std::string_view target_raw =
            split == std::string_view::npos ? inner : inner.substr(0, split);
        bool has_label = split != std::string_view::npos;
        std::string_view label = has_label ? inner.substr(split + 1) : std::string_view();

        target_raw = detail::ascii_trim(target_raw);
        bool escaped = !target_raw.empty() && target_raw.front() == ':';
        if (escaped) target_raw = detail::ascii_trim(target_raw.substr(1));

        // Media and category embeds are removed wholesale, captions and
        // the links inside them included.
        if (!escaped && is_media_target(target_raw)) {
            pos = end;
            return true;
        }

        std::string_view target = target_raw;
        size_t hash = target.find('#');
        if (hash != std::string_view::npos) target = detail::ascii_trim(target.substr(0, hash));

        std::string_view anchor_src = has_label ? label : target_raw;
        if (has_label && detail::ascii_trim(label).empty()) {
            // Pipe-trick style [[Target|]]: fall back to the target text.
            anchor_src = target;
        }

        size_t anchor_start_scalar = scalars_;
        size_t out_bytes_before = out_->size();
        parse_block(anchor_src, /*links_enabled=*/false);
        size_t anchor_end_scalar = scalars_;

        if (!links_enabled) {
            pos = end;
            return true;
        }
        if (target.empty()) {
            diag("fragment_only_link");
            pos = end;
            return true;
        }
        if (anchor_end_scalar == anchor_start_scalar) {
            diag("empty_anchor");
            pos = end;
            return true;
        }
        LinkSpan span;
        span.char_start = anchor_start_scalar;
        span.char_end = anchor_end_scalar;
        span.target_title = std::string(target);
        span.anchor_text = out_->substr(out_bytes_before);
        links_->push_back(std::move(span));
        last_span_end_ = anchor_end_scalar;
        pos = end;
        return true;
    }

    bool is_media_target(std::string_view target) const {
        size_t colon = target.find(':');
        if (colon == std::string_view::npos || colon == 0) return false;
        std::string folded = detail::fold_upper(detail::ascii_trim(target.substr(0, colon)));
        for (const auto& p : folded_prefixes_)
            if (folded == p) return true;
        return false;
    }

    // ---- quote markup ----

    void parse_quotes(std::string_view src, size_t& pos) {
        size_t run = 0;
        while (pos + run < src.size() && src[pos + run] == '\'') ++run;
        if (run == 1) {
            emit(src.substr(pos, 1));
        } else if (run == 4) {
            emit(src.substr(pos, 1));  // ''' plus a literal quote
        } else if (run >= 6) {
            emit(src.substr(pos, run - 5));
        }
        // runs of 2, 3 and 5 vanish entirely
        pos += run;
    }

    LangProfile profile_;
    std::vector<std::string> folded_prefixes_;
    std::string* out_ = nullptr;
    std::vector<LinkSpan>* links_ = nullptr;
    size_t scalars_ = 0;
    size_t last_span_end_ = 0;
    ExtractDiagnostics diags_;
};

}  // namespace leia

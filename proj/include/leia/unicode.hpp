#pragma once

// UTF-8 helpers. All character offsets in this project are counted in
// Unicode scalar values, not bytes, so span arithmetic is script-neutral.

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace leia::uni {

#include "ucase_table.inc"

// Decodes the code point starting at `pos`. Advances `pos` past it.
// Invalid sequences consume one byte and yield U+FFFD.
inline char32_t decode(std::string_view s, size_t& pos) {
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    unsigned char b0 = p[pos];
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    auto cont = [&](size_t i) {
        return pos + i < s.size() && (p[pos + i] & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (p[pos + 1] & 0x3F);
        pos += 2;
        return cp >= 0x80 ? cp : 0xFFFD;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(p[pos + 1] & 0x3F) << 6) |
                      (p[pos + 2] & 0x3F);
        pos += 3;
        return cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF) ? cp : 0xFFFD;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(p[pos + 1] & 0x3F) << 12) |
                      (char32_t(p[pos + 2] & 0x3F) << 6) | (p[pos + 3] & 0x3F);
        pos += 4;
        return cp >= 0x10000 && cp <= 0x10FFFF ? cp : 0xFFFD;
    }
    ++pos;
    return 0xFFFD;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += char(cp);
    } else if (cp < 0x800) {
        out += char(0xC0 | (cp >> 6));
        out += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += char(0xE0 | (cp >> 12));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    } else {
        out += char(0xF0 | (cp >> 18));
        out += char(0x80 | ((cp >> 12) & 0x3F));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    }
}

inline bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

// Number of scalar values in `s` (continuation bytes excluded).
inline size_t scalar_length(std::string_view s) {
    size_t n = 0;
    for (unsigned char b : s)
        if (!is_continuation(b)) ++n;
    return n;
}

// Byte offset of the `scalar`-th code point; s.size() if past the end.
inline size_t byte_offset_of_scalar(std::string_view s, size_t scalar) {
    size_t n = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) {
            if (n == scalar) return i;
            ++n;
        }
    }
    return s.size();
}

// Substring [char_start, char_end) in scalar coordinates.
inline std::string_view scalar_slice(std::string_view s, size_t char_start, size_t char_end) {
    size_t b0 = byte_offset_of_scalar(s, char_start);
    size_t b1 = byte_offset_of_scalar(s, char_end);
    return s.substr(b0, b1 - b0);
}

inline char32_t simple_uppercase(char32_t cp) {
    auto* begin = std::begin(kSimpleUppercase);
    auto* end = std::end(kSimpleUppercase);
    auto it = std::lower_bound(begin, end, cp,
                               [](const std::pair<char32_t, char32_t>& e, char32_t c) {
                                   return e.first < c;
                               });
    if (it != end && it->first == cp) return it->second;
    return cp;
}

// Uppercases only the first code point, MediaWiki title style.
inline std::string uppercase_first(std::string_view s) {
    if (s.empty()) return std::string();
    size_t pos = 0;
    char32_t cp = decode(s, pos);
    std::string out;
    out.reserve(s.size());
    append(out, simple_uppercase(cp));
    out.append(s.substr(pos));
    return out;
}

// Whitespace set used for trimming: ASCII whitespace plus NBSP and
// the ideographic space, which appear in Japanese answer strings.
inline bool is_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
           cp == 0x00A0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 ||
           cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x1680 || cp == 0x0085;
}

inline std::string_view trim(std::string_view s) {
    size_t begin = 0;
    while (begin < s.size()) {
        size_t pos = begin;
        if (!is_space(decode(s, pos))) break;
        begin = pos;
    }
    size_t end = s.size();
    while (end > begin) {
        size_t last = end - 1;
        while (last > begin && is_continuation(static_cast<unsigned char>(s[last]))) --last;
        size_t pos = last;
        if (!is_space(decode(s, pos))) break;
        end = last;
    }
    return s.substr(begin, end - begin);
}

}  // namespace leia::uni

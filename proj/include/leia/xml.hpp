#pragma once

// Minimal streaming XML pull parser, sized for MediaWiki export files.
// Handles elements, attributes, character data, CDATA, comments, the
// XML prolog and the five predefined plus numeric character references.
// Memory use is bounded by the largest single text run, not the file.

#include <cstring>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "leia/util.hpp"

namespace leia {

class XmlReader {
public:
    enum class Event { Start, End, Text, Eof };

    explicit XmlReader(std::istream& in, size_t chunk = 1 << 20) : in_(in), chunk_(chunk) {}

    Event next() {
        if (pending_end_) {
            pending_end_ = false;
            std::string name = stack_.back();
            stack_.pop_back();
            name_ = std::move(name);
            return Event::End;
        }
        compact();
        for (;;) {
            if (!ensure(1)) {
                if (!stack_.empty())
                    fail("unexpected end of input inside <" + stack_.back() + ">");
                return Event::Eof;
            }
            if (buf_[pos_] != '<') return scan_text();

            if (match("<!--")) {
                size_t end = find("-->", pos_ + 4);
                pos_ = end + 3;
                continue;
            }
            if (match("<![CDATA[")) {
                size_t end = find("]]>", pos_ + 9);
                text_.assign(buf_, pos_ + 9, end - (pos_ + 9));
                pos_ = end + 3;
                return Event::Text;
            }
            if (match("<?")) {
                size_t end = find("?>", pos_ + 2);
                pos_ = end + 2;
                continue;
            }
            if (match("<!")) {  // DOCTYPE and friends
                size_t end = find(">", pos_ + 2);
                pos_ = end + 1;
                continue;
            }
            if (match("</")) return scan_end_tag();
            return scan_start_tag();
        }
    }

    const std::string& name() const { return name_; }
    const std::string& text() const { return text_; }

    bool has_attr(std::string_view key) const {
        for (const auto& [k, v] : attrs_)
            if (k == key) return true;
        return false;
    }
    std::string attr(std::string_view key) const {
        for (const auto& [k, v] : attrs_)
            if (k == key) return v;
        return std::string();
    }

    size_t depth() const { return stack_.size(); }
    uint64_t byte_offset() const { return base_offset_ + pos_; }

    // Consumes events until the element just opened by Start is closed.
    void skip_element() {
        size_t target = stack_.size() - 1;
        while (stack_.size() > target) {
            if (next() == Event::Eof) fail("unexpected end of input");
        }
    }

    // After a Start event: concatenates all text up to the matching End.
    // Nested elements are skipped, their content discarded.
    void read_element_text(std::string& out) {
        size_t target = stack_.size() - 1;
        for (;;) {
            Event ev = next();
            if (ev == Event::Text) {
                out += text_;
            } else if (ev == Event::End) {
                if (stack_.size() == target) return;
            } else if (ev == Event::Start) {
                skip_element();
            } else {
                fail("unexpected end of input");
            }
        }
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("XML error at byte " + std::to_string(base_offset_ + pos_) + ": " + msg);
    }

    void compact() {
        if (pos_ > chunk_) {
            base_offset_ += pos_;
            buf_.erase(0, pos_);
            pos_ = 0;
        }
    }

    bool refill() {
        if (eof_) return false;
        size_t old = buf_.size();
        buf_.resize(old + chunk_);
        in_.read(buf_.data() + old, static_cast<std::streamsize>(chunk_));
        size_t got = static_cast<size_t>(in_.gcount());
        buf_.resize(old + got);
        if (got == 0) eof_ = true;
        return got > 0;
    }

    bool ensure(size_t n) {
        while (buf_.size() - pos_ < n) {
            if (!refill()) return buf_.size() - pos_ >= n;
        }
        return true;
    }

    bool match(std::string_view lit) {
        if (!ensure(lit.size())) return false;
        return std::string_view(buf_).substr(pos_, lit.size()) == lit;
    }

    // Index of `lit` at or after `from`; refills as needed, fails at EOF.
    size_t find(std::string_view lit, size_t from) {
        for (;;) {
            size_t hit = buf_.find(lit.data(), from, lit.size());
            if (hit != std::string::npos) return hit;
            size_t rescan = buf_.size() > lit.size() ? buf_.size() - lit.size() + 1 : 0;
            if (!refill()) fail("unterminated construct, expected \"" + std::string(lit) + "\"");
            from = std::max(from, rescan);
        }
    }

    Event scan_text() {
        text_.clear();
        for (;;) {
            const char* base = buf_.data();
            const char* lt = static_cast<const char*>(
                memchr(base + pos_, '<', buf_.size() - pos_));
            if (lt) {
                decode_entities(pos_, size_t(lt - base));
                pos_ = size_t(lt - base);
                return Event::Text;
            }
            // No '<' yet. Decode what cannot be a split entity, keep a
            // 12-byte tail in case a reference straddles the chunk edge.
            size_t end = buf_.size();
            size_t safe = end;
            size_t tail = end > pos_ + 12 ? end - 12 : pos_;
            size_t amp = buf_.rfind('&', end - 1);
            if (amp != std::string::npos && amp >= tail && amp >= pos_) safe = amp;
            decode_entities(pos_, safe);
            pos_ = safe;
            if (!refill()) {
                decode_entities(pos_, buf_.size());
                pos_ = buf_.size();
                return Event::Text;
            }
        }
    }

    void decode_entities(size_t from, size_t to) {
        while (from < to) {
            const char* base = buf_.data();
            const char* amp = static_cast<const char*>(memchr(base + from, '&', to - from));
            if (!amp) {
                text_.append(buf_, from, to - from);
                return;
            }
            size_t a = size_t(amp - base);
            text_.append(buf_, from, a - from);
            size_t semi = buf_.find(';', a + 1);
            if (semi == std::string::npos || semi > a + 12) {
                text_ += '&';  // not a reference; keep literal
                from = a + 1;
                continue;
            }
            std::string_view ent(buf_.data() + a + 1, semi - a - 1);
            if (ent == "lt") text_ += '<';
            else if (ent == "gt") text_ += '>';
            else if (ent == "amp") text_ += '&';
            else if (ent == "quot") text_ += '"';
            else if (ent == "apos") text_ += '\'';
            else if (!ent.empty() && ent[0] == '#') {
                char32_t cp = 0;
                bool ok = ent.size() > 1;
                if (ent[1] == 'x' || ent[1] == 'X') {
                    ok = ent.size() > 2;
                    for (size_t i = 2; ok && i < ent.size(); ++i) {
                        char c = ent[i];
                        int d = c >= '0' && c <= '9'   ? c - '0'
                                : c >= 'a' && c <= 'f' ? c - 'a' + 10
                                : c >= 'A' && c <= 'F' ? c - 'A' + 10
                                                       : -1;
                        if (d < 0) ok = false;
                        else cp = cp * 16 + char32_t(d);
                    }
                } else {
                    for (size_t i = 1; ok && i < ent.size(); ++i) {
                        if (ent[i] < '0' || ent[i] > '9') ok = false;
                        else cp = cp * 10 + char32_t(ent[i] - '0');
                    }
                }
                if (ok && cp <= 0x10FFFF) append_cp(text_, cp);
                else { text_ += '&'; from = a + 1; continue; }
            } else {
                text_ += '&';  // unknown entity, keep literal
                from = a + 1;
                continue;
            }
            from = semi + 1;
        }
    }

    static void append_cp(std::string& out, char32_t cp);

    Event scan_end_tag() {
        size_t gt = find(">", pos_ + 2);
        std::string_view nm = trimmed(pos_ + 2, gt);
        if (stack_.empty()) fail("unmatched </" + std::string(nm) + ">");
        if (stack_.back() != nm)
            fail("mismatched </" + std::string(nm) + ">, open element is <" + stack_.back() + ">");
        name_.assign(nm);
        stack_.pop_back();
        pos_ = gt + 1;
        return Event::End;
    }

    Event scan_start_tag() {
        size_t gt = find(">", pos_ + 1);
        size_t p = pos_ + 1;
        size_t name_end = p;
        while (name_end < gt && !is_ws(buf_[name_end]) && buf_[name_end] != '/') ++name_end;
        if (name_end == p) fail("empty element name");
        name_.assign(buf_, p, name_end - p);
        attrs_.clear();
        p = name_end;
        bool self_close = false;
        while (p < gt) {
            while (p < gt && is_ws(buf_[p])) ++p;
            if (p >= gt) break;
            if (buf_[p] == '/') {
                self_close = true;
                ++p;
                continue;
            }
            size_t eq = p;
            while (eq < gt && buf_[eq] != '=' && !is_ws(buf_[eq])) ++eq;
            if (eq >= gt || buf_[eq] != '=') fail("malformed attribute in <" + name_ + ">");
            std::string key(buf_, p, eq - p);
            size_t vq = eq + 1;
            if (vq >= gt || (buf_[vq] != '"' && buf_[vq] != '\'')) fail("unquoted attribute value");
            char q = buf_[vq];
            size_t vend = buf_.find(q, vq + 1);
            if (vend == std::string::npos || vend > gt) fail("unterminated attribute value");
            std::string saved_text;
            saved_text.swap(text_);
            text_.clear();
            decode_entities(vq + 1, vend);
            attrs_.emplace_back(std::move(key), text_);
            text_.swap(saved_text);
            p = vend + 1;
        }
        pos_ = gt + 1;
        stack_.push_back(name_);
        pending_end_ = self_close;
        return Event::Start;
    }

    std::string_view trimmed(size_t from, size_t to) const {
        while (from < to && is_ws(buf_[from])) ++from;
        while (to > from && is_ws(buf_[to - 1])) --to;
        return std::string_view(buf_).substr(from, to - from);
    }

    static bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

    std::istream& in_;
    size_t chunk_;
    std::string buf_;
    size_t pos_ = 0;
    uint64_t base_offset_ = 0;
    bool eof_ = false;
    bool pending_end_ = false;
    std::string name_, text_;
    std::vector<std::pair<std::string, std::string>> attrs_;
    std::vector<std::string> stack_;
};

inline void XmlReader::append_cp(std::string& out, char32_t cp) {
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

}  // namespace leia

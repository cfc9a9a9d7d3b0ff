#pragma once

// Reference tokenizer: longest-match greedy over a plain vocab file,
// with byte fallback for anything the vocab misses. Exists so the
// pipeline runs end to end without an external model; the packer only
// depends on the small contract below.
//
// Id scheme: 0..255 byte-fallback ids, 256+i for vocab line i, and one
// synthetic separator id one past the last vocab id. The two special
// delimiters must appear in the vocab and are matched atomically: an
// occurrence is never split or absorbed into a longer match.

#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "leia/unicode.hpp"
#include "leia/util.hpp"

namespace leia {

struct TokenWithOffset {
    uint32_t id = 0;
    size_t char_start = 0;
    size_t char_end = 0;  // exclusive

    friend bool operator==(const TokenWithOffset&, const TokenWithOffset&) = default;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<TokenWithOffset> tokenize(std::string_view text) const = 0;
    virtual uint32_t id_for_special(std::string_view literal) const = 0;
    virtual uint32_t separator_id() const = 0;
    virtual std::string describe() const = 0;
};

class VocabTokenizer final : public Tokenizer {
public:
    VocabTokenizer(std::vector<std::string> vocab, std::string special_open,
                   std::string special_close, std::string note = "inline-vocab")
        : open_(std::move(special_open)), close_(std::move(special_close)),
          note_(std::move(note)) {
        nodes_.emplace_back();  // root
        uint32_t next_id = 256;
        for (auto& entry : vocab) {
            if (entry.empty()) continue;
            insert(entry, next_id);
            if (entry == open_ && open_id_ == 0) open_id_ = next_id;
            if (entry == close_ && close_id_ == 0) close_id_ = next_id;
            ++next_id;
        }
        vocab_entries_ = next_id - 256;
        separator_id_ = next_id;
        if (open_id_ == 0 || close_id_ == 0)
            throw Error("vocab is missing a special literal (" + open_ + " / " + close_ + ")");
    }

    static VocabTokenizer from_file(const std::string& path,
                                    std::string special_open = "<translate>",
                                    std::string special_close = "</translate>") {
        std::string data = read_file(path);
        std::vector<std::string> vocab;
        size_t pos = 0;
        while (pos < data.size()) {
            size_t eol = data.find('\n', pos);
            std::string line =
                data.substr(pos, eol == std::string::npos ? data.size() - pos : eol - pos);
            pos = eol == std::string::npos ? data.size() : eol + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) vocab.push_back(std::move(line));
        }
        std::string base = path;
        size_t slash = base.find_last_of('/');
        if (slash != std::string::npos) base = base.substr(slash + 1);
        return VocabTokenizer(std::move(vocab), std::move(special_open), std::move(special_close),
                              "vocab-file:" + base);
    }

    std::vector<TokenWithOffset> tokenize(std::string_view text) const override {
        std::vector<TokenWithOffset> out;
        size_t byte = 0, scalar = 0;
        while (byte < text.size()) {
            std::string_view rest = text.substr(byte);
            // specials take absolute precedence
            if (rest.starts_with(open_)) {
                size_t len = uni::scalar_length(open_);
                out.push_back({open_id_, scalar, scalar + len});
                byte += open_.size();
                scalar += len;
                continue;
            }
            if (rest.starts_with(close_)) {
                size_t len = uni::scalar_length(close_);
                out.push_back({close_id_, scalar, scalar + len});
                byte += close_.size();
                scalar += len;
                continue;
            }
            // longest trie match that does not run into a special
            size_t best_scalars = 0, best_bytes = 0;
            uint32_t best_id = 0;
            uint32_t node = 0;
            size_t b = byte, s = 0;
            while (b < text.size()) {
                std::string_view at = text.substr(b);
                if (at.starts_with(open_) || at.starts_with(close_)) break;
                char32_t cp = uni::decode(text, b);
                uint32_t next = child(node, cp);
                if (next == 0) break;
                node = next;
                ++s;
                if (nodes_[node].id != 0) {
                    best_scalars = s;
                    best_bytes = b - byte;
                    best_id = nodes_[node].id;
                }
            }
            if (best_id != 0) {
                out.push_back({best_id, scalar, scalar + best_scalars});
                byte += best_bytes;
                scalar += best_scalars;
                continue;
            }
            // byte fallback: every byte of this scalar, sharing its range
            size_t start_byte = byte;
            uni::decode(text, byte);
            for (size_t i = start_byte; i < byte; ++i)
                out.push_back({uint32_t(uint8_t(text[i])), scalar, scalar + 1});
            ++scalar;
        }
        return out;
    }

    uint32_t id_for_special(std::string_view literal) const override {
        if (literal == open_) return open_id_;
        if (literal == close_) return close_id_;
        throw Error("not a special literal: " + std::string(literal));
    }

    uint32_t separator_id() const override { return separator_id_; }

    std::string describe() const override {
        std::ostringstream os;
        os << note_ << " entries=" << vocab_entries_ << " byte-fallback ids=0..255";
        return os.str();
    }

    size_t vocab_entries() const { return vocab_entries_; }

private:
    struct Node {
        uint32_t id = 0;  // 0 = not a token end (token ids start at 256)
        std::unordered_map<char32_t, uint32_t> children;
    };

    void insert(std::string_view entry, uint32_t id) {
        uint32_t node = 0;
        size_t pos = 0;
        while (pos < entry.size()) {
            char32_t cp = uni::decode(entry, pos);
            auto [it, added] = nodes_[node].children.emplace(cp, 0);
            if (added) {
                it->second = uint32_t(nodes_.size());
                nodes_.emplace_back();
            }
            node = it->second;
        }
        if (nodes_[node].id == 0) nodes_[node].id = id;  // first occurrence wins
    }

    uint32_t child(uint32_t node, char32_t cp) const {
        const auto& ch = nodes_[node].children;
        auto it = ch.find(cp);
        return it == ch.end() ? 0 : it->second;
    }

    std::vector<Node> nodes_;
    std::string open_, close_, note_;
    uint32_t open_id_ = 0, close_id_ = 0, separator_id_ = 0;
    size_t vocab_entries_ = 0;
};

inline std::shared_ptr<Tokenizer> reference_tokenizer(const std::string& vocab_file,
                                                      std::string special_open = "<translate>",
                                                      std::string special_close = "</translate>") {
    return std::make_shared<VocabTokenizer>(VocabTokenizer::from_file(
        vocab_file, std::move(special_open), std::move(special_close)));
}

}  // namespace leia

#pragma once

// Loss-mask derivation and fixed-length sequence packing.
//
// The mask gates the position being predicted: loss_mask[i] == 0 means
// the training loss must not propagate when token_ids[i] is the target.
// Delimiter tokens are always blocked; English-name tokens optionally.
//
// Packing treats the corpus as one continuous token stream — documents
// joined by an optional separator token (mask 1) — cut every max_len
// tokens, stopping at the global token budget. Document boundaries are
// kept per sequence so packing is reversible.

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leia/augment.hpp"
#include "leia/tokenizer.hpp"
#include "leia/util.hpp"

namespace leia {

struct PackConfig {
    uint32_t max_len = 2048;
    uint64_t token_budget = 200'000'000;
    bool mask_entity_tokens = false;
    bool insert_separator = true;
};

struct DocBoundary {
    uint32_t start = 0;  // index within the sequence where a document begins
    uint64_t page_id = 0;

    friend bool operator==(const DocBoundary&, const DocBoundary&) = default;
};

struct PackedSequence {
    std::vector<uint32_t> token_ids;
    std::vector<uint8_t> loss_mask;  // one byte per token, 0 or 1
    std::vector<DocBoundary> doc_boundaries;

    friend bool operator==(const PackedSequence&, const PackedSequence&) = default;
};

// ---- mask derivation ----

inline std::vector<uint8_t> mask_tokens(const AugmentedDoc& doc,
                                        const std::vector<TokenWithOffset>& tokens,
                                        const PackConfig& config) {
    std::vector<uint8_t> mask(tokens.size(), 1);
    const auto& spans = doc.spans;
    std::vector<uint32_t> special_cover(spans.size(), 0);
    std::vector<uint8_t> special_exact(spans.size(), 1);

    size_t si = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const TokenWithOffset& t = tokens[i];
        while (si < spans.size() && spans[si].char_end <= t.char_start) ++si;
        for (size_t k = si; k < spans.size() && spans[k].char_start < t.char_end; ++k) {
            if (spans[k].char_end <= t.char_start) continue;
            switch (spans[k].kind) {
                case SpanKind::SpecialOpen:
                case SpanKind::SpecialClose:
                    mask[i] = 0;
                    ++special_cover[k];
                    if (t.char_start != spans[k].char_start || t.char_end != spans[k].char_end)
                        special_exact[k] = 0;
                    break;
                case SpanKind::EnglishName:
                    if (config.mask_entity_tokens) mask[i] = 0;
                    break;
                case SpanKind::Anchor:
                    break;
            }
        }
    }
    for (size_t k = 0; k < spans.size(); ++k) {
        if (spans[k].kind != SpanKind::SpecialOpen && spans[k].kind != SpanKind::SpecialClose)
            continue;
        if (special_cover[k] != 1 || special_exact[k] == 0)
            throw SpecialTokenSplit("special span [" + std::to_string(spans[k].char_start) + "," +
                                    std::to_string(spans[k].char_end) + ") covered by " +
                                    std::to_string(special_cover[k]) + " token(s)");
    }
    return mask;
}

// ---- packing ----

class Packer {
public:
    using Sink = std::function<void(PackedSequence&&)>;

    Packer(PackConfig config, uint32_t separator_id, Sink sink)
        : config_(config), separator_id_(separator_id), sink_(std::move(sink)) {
        budget_left_ = config_.token_budget;
    }

    // Feeds one document; returns false once the budget is exhausted
    // (callers may stop streaming input then).
    bool push(const std::vector<uint32_t>& ids, const std::vector<uint8_t>& mask,
              uint64_t page_id) {
        if (ids.empty()) return budget_left_ > 0;
        if (!first_doc_ && config_.insert_separator) {
            if (!append(separator_id_, 1, std::nullopt)) return false;
        }
        first_doc_ = false;
        for (size_t i = 0; i < ids.size(); ++i) {
            std::optional<uint64_t> boundary =
                i == 0 ? std::optional<uint64_t>(page_id) : std::nullopt;
            if (!append(ids[i], mask[i], boundary)) return false;
        }
        return budget_left_ > 0;
    }

    void finish() {
        if (!cur_.token_ids.empty()) emit();
    }

    uint64_t tokens_emitted() const { return tokens_emitted_; }
    uint64_t sequences_emitted() const { return sequences_emitted_; }

private:
    bool append(uint32_t id, uint8_t mask_bit, std::optional<uint64_t> doc_start_page) {
        if (budget_left_ == 0) return false;
        if (doc_start_page)
            cur_.doc_boundaries.push_back({uint32_t(cur_.token_ids.size()), *doc_start_page});
        cur_.token_ids.push_back(id);
        cur_.loss_mask.push_back(mask_bit);
        ++tokens_emitted_;
        --budget_left_;
        if (cur_.token_ids.size() == config_.max_len) emit();
        return budget_left_ > 0;
    }

    void emit() {
        ++sequences_emitted_;
        sink_(std::move(cur_));
        cur_ = PackedSequence{};
    }

    PackConfig config_;
    uint32_t separator_id_;
    Sink sink_;
    PackedSequence cur_;
    uint64_t budget_left_ = 0;
    uint64_t tokens_emitted_ = 0;
    uint64_t sequences_emitted_ = 0;
    bool first_doc_ = true;
};

// ---- serialization ----

struct PackHeader {
    uint32_t max_len = 2048;
    std::string vocab;  // free-form tokenizer note
    uint32_t separator_id = 0;
    std::string mask_convention =
        "label-position: loss_mask[i] gates the loss when token_ids[i] is the prediction target";
    bool insert_separator = true;
    bool mask_entity_tokens = false;
    uint64_t token_budget = 0;

    friend bool operator==(const PackHeader&, const PackHeader&) = default;
};

inline PackHeader make_pack_header(const PackConfig& config, const Tokenizer& tok) {
    PackHeader h;
    h.max_len = config.max_len;
    h.vocab = tok.describe();
    h.separator_id = tok.separator_id();
    h.insert_separator = config.insert_separator;
    h.mask_entity_tokens = config.mask_entity_tokens;
    h.token_budget = config.token_budget;
    return h;
}

inline nlohmann::json to_json(const PackHeader& h) {
    return {{"format", "leia-pack"},
            {"max_len", h.max_len},
            {"vocab", h.vocab},
            {"separator_id", h.separator_id},
            {"mask_convention", h.mask_convention},
            {"insert_separator", h.insert_separator},
            {"mask_entity_tokens", h.mask_entity_tokens},
            {"token_budget", h.token_budget}};
}

inline PackHeader pack_header_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "leia-pack") throw ParseError("not a pack header record");
    PackHeader h;
    h.max_len = j.at("max_len").get<uint32_t>();
    h.vocab = j.at("vocab").get<std::string>();
    h.separator_id = j.at("separator_id").get<uint32_t>();
    h.mask_convention = j.at("mask_convention").get<std::string>();
    h.insert_separator = j.at("insert_separator").get<bool>();
    h.mask_entity_tokens = j.at("mask_entity_tokens").get<bool>();
    h.token_budget = j.at("token_budget").get<uint64_t>();
    return h;
}

// Loss masks pack LSB-first: bit (i % 8) of byte (i / 8) is mask[i].
inline std::vector<uint8_t> pack_mask_bits(const std::vector<uint8_t>& mask) {
    std::vector<uint8_t> out((mask.size() + 7) / 8, 0);
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i] != 0) out[i / 8] |= uint8_t(1u << (i % 8));
    return out;
}

inline std::vector<uint8_t> unpack_mask_bits(const std::vector<uint8_t>& bytes, size_t n) {
    if (bytes.size() != (n + 7) / 8) throw ParseError("mask length mismatch");
    std::vector<uint8_t> mask(n, 0);
    for (size_t i = 0; i < n; ++i) mask[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return mask;
}

// --- JSONL form ---

inline void write_pack_jsonl_header(std::ostream& out, const PackHeader& h) {
    out << to_json(h).dump() << '\n';
}

inline void write_pack_jsonl_sequence(std::ostream& out, const PackedSequence& s) {
    nlohmann::json bounds = nlohmann::json::array();
    for (const DocBoundary& b : s.doc_boundaries)
        bounds.push_back({{"start", b.start}, {"page_id", b.page_id}});
    std::vector<uint8_t> bits = pack_mask_bits(s.loss_mask);
    nlohmann::json j = {{"token_ids", s.token_ids},
                        {"loss_mask", base64_encode(bits.data(), bits.size())},
                        {"doc_boundaries", std::move(bounds)}};
    out << j.dump() << '\n';
}

struct PackFile {
    PackHeader header;
    std::vector<PackedSequence> sequences;

    friend bool operator==(const PackFile&, const PackFile&) = default;
};

inline PackedSequence pack_sequence_from_json(const nlohmann::json& j) {
    PackedSequence s;
    s.token_ids = j.at("token_ids").get<std::vector<uint32_t>>();
    std::vector<uint8_t> bits = base64_decode(j.at("loss_mask").get<std::string>());
    s.loss_mask = unpack_mask_bits(bits, s.token_ids.size());
    for (const auto& b : j.at("doc_boundaries"))
        s.doc_boundaries.push_back(
            {b.at("start").get<uint32_t>(), b.at("page_id").get<uint64_t>()});
    return s;
}

inline PackFile read_pack_jsonl(std::istream& in) {
    PackFile f;
    std::string line;
    uint64_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad JSON at line " + std::to_string(lineno));
        if (!have_header) {
            f.header = pack_header_from_json(j);
            have_header = true;
        } else {
            f.sequences.push_back(pack_sequence_from_json(j));
        }
    }
    if (!have_header) throw ParseError("pack file has no header record");
    return f;
}

// --- binary form ---
//
// "LEIAPCK1", u32 header-JSON length, header JSON bytes, then per
// sequence: u32 n, n×u32 ids, ceil(n/8) mask bytes, u32 b, b×(u32
// start, u64 page_id). All integers little-endian.

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
    char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF),
                 char((v >> 24) & 0xFF)};
    out.write(b, 4);
}
inline void put_u64(std::ostream& out, uint64_t v) {
    put_u32(out, uint32_t(v & 0xFFFFFFFFu));
    put_u32(out, uint32_t(v >> 32));
}
inline uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("truncated pack container");
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}
inline uint64_t get_u64(std::istream& in) {
    uint64_t lo = get_u32(in);
    uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

}  // namespace detail

inline void write_pack_binary_header(std::ostream& out, const PackHeader& h) {
    out.write("LEIAPCK1", 8);
    std::string j = to_json(h).dump();
    detail::put_u32(out, uint32_t(j.size()));
    out.write(j.data(), std::streamsize(j.size()));
}

inline void write_pack_binary_sequence(std::ostream& out, const PackedSequence& s) {
    detail::put_u32(out, uint32_t(s.token_ids.size()));
    for (uint32_t id : s.token_ids) detail::put_u32(out, id);
    std::vector<uint8_t> bits = pack_mask_bits(s.loss_mask);
    out.write(reinterpret_cast<const char*>(bits.data()), std::streamsize(bits.size()));
    detail::put_u32(out, uint32_t(s.doc_boundaries.size()));
    for (const DocBoundary& b : s.doc_boundaries) {
        detail::put_u32(out, b.start);
        detail::put_u64(out, b.page_id);
    }
}

inline PackFile read_pack_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string_view(magic, 8) != "LEIAPCK1")
        throw ParseError("bad pack container magic");
    uint32_t hlen = detail::get_u32(in);
    std::string hjson(hlen, '\0');
    in.read(hjson.data(), hlen);
    if (!in) throw ParseError("truncated pack container header");
    nlohmann::json hj = nlohmann::json::parse(hjson, nullptr, false);
    if (hj.is_discarded()) throw ParseError("bad pack container header JSON");
    PackFile f;
    f.header = pack_header_from_json(hj);
    for (;;) {
        int probe = in.peek();
        if (probe == std::char_traits<char>::eof()) break;
        PackedSequence s;
        uint32_t n = detail::get_u32(in);
        s.token_ids.resize(n);
        for (uint32_t i = 0; i < n; ++i) s.token_ids[i] = detail::get_u32(in);
        std::vector<uint8_t> bits((n + 7) / 8);
        in.read(reinterpret_cast<char*>(bits.data()), std::streamsize(bits.size()));
        if (!in) throw ParseError("truncated pack container sequence");
        s.loss_mask = unpack_mask_bits(bits, n);
        uint32_t nb = detail::get_u32(in);
        for (uint32_t i = 0; i < nb; ++i) {
            uint32_t start = detail::get_u32(in);
            uint64_t page = detail::get_u64(in);
            s.doc_boundaries.push_back({start, page});
        }
        f.sequences.push_back(std::move(s));
    }
    return f;
}

// Converts between the two on-disk forms; content round-trips exactly.
inline void convert_pack_file(std::istream& in, bool in_binary, std::ostream& out,
                              bool out_binary) {
    PackFile f = in_binary ? read_pack_binary(in) : read_pack_jsonl(in);
    if (out_binary) {
        write_pack_binary_header(out, f.header);
        for (const auto& s : f.sequences) write_pack_binary_sequence(out, s);
    } else {
        write_pack_jsonl_header(out, f.header);
        for (const auto& s : f.sequences) write_pack_jsonl_sequence(out, s);
    }
}

// Rebuilds per-document token/mask arrays from packed sequences (the
// packing inverse, used by round-trip checks). Returns (page_id, ids,
// mask) triples in stream order; a trailing separator after a document
// is dropped when the header says separators were inserted.
struct UnpackedDoc {
    uint64_t page_id = 0;
    std::vector<uint32_t> ids;
    std::vector<uint8_t> mask;

    friend bool operator==(const UnpackedDoc&, const UnpackedDoc&) = default;
};

inline std::vector<UnpackedDoc> unpack_documents(const PackFile& f) {
    // global stream positions of document starts
    std::vector<std::pair<uint64_t, uint64_t>> starts;  // (global pos, page_id)
    std::vector<uint32_t> ids;
    std::vector<uint8_t> mask;
    for (const PackedSequence& s : f.sequences) {
        uint64_t base = ids.size();
        for (const DocBoundary& b : s.doc_boundaries) starts.emplace_back(base + b.start, b.page_id);
        ids.insert(ids.end(), s.token_ids.begin(), s.token_ids.end());
        mask.insert(mask.end(), s.loss_mask.begin(), s.loss_mask.end());
    }
    std::vector<UnpackedDoc> docs;
    for (size_t d = 0; d < starts.size(); ++d) {
        uint64_t begin = starts[d].first;
        uint64_t end = d + 1 < starts.size() ? starts[d + 1].first : ids.size();
        if (d + 1 < starts.size() && f.header.insert_separator && end > begin) --end;
        UnpackedDoc doc;
        doc.page_id = starts[d].second;
        doc.ids.assign(ids.begin() + long(begin), ids.begin() + long(end));
        doc.mask.assign(mask.begin() + long(begin), mask.begin() + long(end));
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace leia

#pragma once

// Inter-language link index: (language, normalized title) -> cleaned
// English entity name, built from a Wikidata entity dump's sitelinks.
//
// On disk the index is a sorted flat TSV (lang <TAB> title <TAB> name)
// plus a binary side file of (fnv1a64(lang "\t" title), line offset)
// pairs sorted by hash, so lookups run off a memory map without
// loading the table. A small JSON sidecar carries build metadata.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leia/unicode.hpp"
#include "leia/util.hpp"

namespace leia {

// Canonical title form used as the lookup key: underscores become
// spaces, whitespace runs collapse to one space, surrounding space is
// trimmed, any "#fragment" is dropped, and the first scalar is
// uppercased. An empty result is an error.
inline std::string normalize_title(std::string_view raw) {
    size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string out;
    out.reserve(raw.size());
    size_t pos = 0;
    bool pending_space = false;
    while (pos < raw.size()) {
        char32_t cp = uni::decode(raw, pos);
        if (cp == U'_' || uni::is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (out.empty()) cp = uni::simple_uppercase(cp);
        uni::append(out, cp);
    }
    if (out.empty()) throw EmptyTitleError("title empty after normalization");
    return out;
}

inline const std::vector<std::string>& filtered_prefixes() {
    static const std::vector<std::string> kPrefixes = {
        "Book:",    "Category:",  "Draft:", "File:",      "Help:",
        "List of ", "MediaWiki:", "Portal:", "Special:",  "Talk:",
        "Template:", "User:",     "Wikipedia:", "WikiProject:",
    };
    return kPrefixes;
}

// Accepts or rejects an English title as an insertable entity name.
// Titles under utility namespaces (and "List of ...") are rejected;
// otherwise one trailing parenthetical disambiguator, plus the space
// before it, is removed ("Washington (state)" -> "Washington").
inline std::optional<std::string> filter_entity_name(std::string_view english_title) {
    for (const auto& p : filtered_prefixes())
        if (english_title.starts_with(p)) return std::nullopt;
    std::string_view t = english_title;
    if (!t.empty() && t.back() == ')') {
        // match the final ')' backwards to its opener
        size_t depth = 0;
        size_t i = t.size();
        size_t opener = std::string_view::npos;
        while (i > 0) {
            --i;
            char c = t[i];
            if (c == ')') ++depth;
            else if (c == '(') {
                --depth;
                if (depth == 0) {
                    opener = i;
                    break;
                }
            }
        }
        if (opener != std::string_view::npos) {
            size_t cut = opener;
            if (cut > 0 && t[cut - 1] == ' ') --cut;
            t = t.substr(0, cut);
        }
    }
    if (t.empty()) return std::nullopt;
    return std::string(t);
}

struct InterlangBuildStats {
    uint64_t lines = 0;
    uint64_t entities = 0;    // records that parsed as entity JSON
    uint64_t entries = 0;     // pairs stored
    uint64_t duplicates = 0;  // key collisions (first kept)
    uint64_t malformed = 0;   // lines that failed to parse
    uint64_t filtered = 0;    // English title rejected by the name filter
};

class InterlangMap {
public:
    InterlangMap() = default;

    // ---- building ----

    static InterlangMap build(std::istream& wikidata, std::string_view source_lang,
                              unsigned threads = 1, std::string source_date = "") {
        InterlangMap map;
        map.lang_ = std::string(source_lang);
        map.source_date_ = std::move(source_date);
        std::string sitekey(source_lang);
        for (char& c : sitekey) {
            if (c == '-') c = '_';
        }
        sitekey += "wiki";
        const std::string src_probe = "\"" + sitekey + "\"";
        static const std::string en_probe = "\"enwiki\"";

        struct ParseOut {
            int kind = 0;  // 0 skip, 1 entry, 2 malformed, 3 filtered, 4 empty-title
            std::string key, name;
        };
        auto parse_line = [&](const std::string& line) -> ParseOut {
            ParseOut r;
            std::string_view s = trim_record(line);
            if (s.empty() || s == "[" || s == "]") return r;
            if (s.find(src_probe) == std::string_view::npos ||
                s.find(en_probe) == std::string_view::npos)
                return r;
            nlohmann::json j = nlohmann::json::parse(s, nullptr, /*allow_exceptions=*/false);
            if (j.is_discarded() || !j.is_object()) {
                r.kind = 2;
                return r;
            }
            auto sl = j.find("sitelinks");
            if (sl == j.end() || !sl->is_object()) return r;
            auto src = sl->find(sitekey);
            auto en = sl->find("enwiki");
            if (src == sl->end() || en == sl->end()) return r;
            auto src_title = src->find("title");
            auto en_title = en->find("title");
            if (src_title == src->end() || en_title == en->end() || !src_title->is_string() ||
                !en_title->is_string()) {
                r.kind = 2;
                return r;
            }
            auto clean = filter_entity_name(en_title->get_ref<const std::string&>());
            if (!clean) {
                r.kind = 3;
                return r;
            }
            try {
                r.key = normalize_title(src_title->get_ref<const std::string&>());
            } catch (const EmptyTitleError&) {
                r.kind = 4;
                return r;
            }
            r.kind = 1;
            r.name = std::move(*clean);
            return r;
        };

        auto fold = [&](ParseOut& r) {
            ++map.stats_.lines;
            switch (r.kind) {
                case 1: {
                    ++map.stats_.entities;
                    auto [it, inserted] =
                        map.entries_.emplace(std::move(r.key), std::move(r.name));
                    (void)it;
                    if (inserted) ++map.stats_.entries;
                    else ++map.stats_.duplicates;
                    break;
                }
                case 2:
                    ++map.stats_.malformed;
                    break;
                case 3:
                    ++map.stats_.entities;
                    ++map.stats_.filtered;
                    break;
                case 4:
                    ++map.stats_.malformed;
                    break;
                default:
                    break;
            }
        };

        if (threads <= 1) {
            std::string line;
            while (std::getline(wikidata, line)) {
                ParseOut r = parse_line(line);
                fold(r);
            }
        } else {
            constexpr size_t kBatch = 4096;
            std::vector<std::string> batch;
            std::vector<ParseOut> results;
            batch.reserve(kBatch);
            std::string line;
            bool more = true;
            while (more) {
                batch.clear();
                while (batch.size() < kBatch && (more = bool(std::getline(wikidata, line))))
                    batch.push_back(line);
                if (batch.empty()) break;
                parallel_map_ordered<std::string, ParseOut>(batch, results, threads, parse_line);
                for (auto& r : results) fold(r);
            }
        }
        return map;
    }

    // ---- persistence ----

    void save(const std::string& path) const {
        std::vector<std::pair<std::string_view, std::string_view>> rows;
        rows.reserve(entries_.size());
        for (const auto& [title, name] : entries_) rows.emplace_back(title, name);
        std::sort(rows.begin(), rows.end());

        std::string table;
        std::vector<std::pair<uint64_t, uint64_t>> index;
        index.reserve(rows.size());
        for (const auto& [title, name] : rows) {
            std::string key = lang_;
            key.push_back('\t');
            key.append(title);
            index.emplace_back(fnv1a64(key), table.size());
            table.append(key);
            table.push_back('\t');
            table.append(name);
            table.push_back('\n');
        }
        std::sort(index.begin(), index.end());

        atomic_write_file(path, table);

        std::string side;
        side.reserve(16 + index.size() * 16);
        side.append("LEIAILX1", 8);
        append_u64(side, index.size());
        for (auto [h, off] : index) {
            append_u64(side, h);
            append_u64(side, off);
        }
        atomic_write_file(index_path(path), side);

        nlohmann::json meta{{"lang", lang_},
                            {"source_date", source_date_},
                            {"entries", entries_.size()},
                            {"duplicates", stats_.duplicates},
                            {"malformed", stats_.malformed},
                            {"filtered", stats_.filtered}};
        atomic_write_file(meta_path(path), meta.dump(2) + "\n");
    }

    static InterlangMap load(const std::string& path) {
        InterlangMap map;
        map.table_.open(path);
        std::string side = read_file(index_path(path));
        if (side.size() < 16 || std::string_view(side).substr(0, 8) != "LEIAILX1")
            throw ParseError("bad index file header: " + index_path(path));
        uint64_t count = read_u64(side, 8);
        if (side.size() != 16 + count * 16)
            throw ParseError("index file size mismatch: " + index_path(path));
        map.index_.reserve(count);
        for (uint64_t i = 0; i < count; ++i)
            map.index_.emplace_back(read_u64(side, 16 + i * 16), read_u64(side, 24 + i * 16));
        std::string meta = read_file(meta_path(path));
        nlohmann::json j = nlohmann::json::parse(meta, nullptr, false);
        if (!j.is_discarded() && j.is_object()) {
            map.lang_ = j.value("lang", "");
            map.source_date_ = j.value("source_date", "");
            map.stats_.entries = j.value("entries", uint64_t{0});
            map.stats_.duplicates = j.value("duplicates", uint64_t{0});
        }
        map.loaded_ = true;
        return map;
    }

    // ---- queries ----

    // NotFound is an expected outcome, returned as nullopt. Titles that
    // normalize to nothing (fragment-only links) are also NotFound.
    std::optional<std::string> resolve(std::string_view lang, std::string_view target_title) const {
        std::string title;
        try {
            title = normalize_title(target_title);
        } catch (const EmptyTitleError&) {
            return std::nullopt;
        }
        if (!loaded_) {
            if (lang != lang_) return std::nullopt;
            auto it = entries_.find(title);
            if (it == entries_.end()) return std::nullopt;
            return it->second;
        }
        std::string key(lang);
        key.push_back('\t');
        key.append(title);
        uint64_t h = fnv1a64(key);
        auto lo = std::lower_bound(
            index_.begin(), index_.end(), std::make_pair(h, uint64_t{0}));
        key.push_back('\t');
        std::string_view tbl = table_.view();
        for (auto it = lo; it != index_.end() && it->first == h; ++it) {
            if (it->second >= tbl.size()) continue;
            std::string_view rest = tbl.substr(it->second);
            if (!rest.starts_with(key)) continue;
            rest.remove_prefix(key.size());
            size_t eol = rest.find('\n');
            return std::string(eol == std::string_view::npos ? rest : rest.substr(0, eol));
        }
        return std::nullopt;
    }

    size_t size() const { return loaded_ ? index_.size() : entries_.size(); }
    const InterlangBuildStats& stats() const { return stats_; }
    const std::string& lang() const { return lang_; }

    // Visits (lang, title, name) rows; order is sorted when loaded from
    // disk and unspecified for a freshly built map.
    template <typename F>
    void for_each(F&& fn) const {
        if (!loaded_) {
            for (const auto& [title, name] : entries_) fn(lang_, title, name);
            return;
        }
        std::string_view tbl = table_.view();
        size_t pos = 0;
        while (pos < tbl.size()) {
            size_t eol = tbl.find('\n', pos);
            std::string_view line =
                tbl.substr(pos, eol == std::string_view::npos ? tbl.size() - pos : eol - pos);
            pos = eol == std::string_view::npos ? tbl.size() : eol + 1;
            size_t t1 = line.find('\t');
            size_t t2 = t1 == std::string_view::npos ? std::string_view::npos
                                                     : line.find('\t', t1 + 1);
            if (t2 == std::string_view::npos) continue;
            fn(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1));
        }
    }

    static std::string index_path(const std::string& path) { return path + ".idx"; }
    static std::string meta_path(const std::string& path) { return path + ".meta.json"; }

private:
    static std::string_view trim_record(std::string_view s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        if (!s.empty() && s.back() == ',') s.remove_suffix(1);
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        return s;
    }

    static void append_u64(std::string& out, uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
    }
    static uint64_t read_u64(std::string_view s, size_t at) {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(s[at + i])) << (8 * i);
        return v;
    }

    std::string lang_;
    std::string source_date_;
    std::unordered_map<std::string, std::string> entries_;  // build mode: title -> name
    InterlangBuildStats stats_;
    bool loaded_ = false;
    MappedFile table_;
    std::vector<std::pair<uint64_t, uint64_t>> index_;  // (hash, offset) sorted
};

inline Resolver make_resolver(const InterlangMap& map, std::string lang) {
    return [&map, lang = std::move(lang)](std::string_view target) {
        return map.resolve(lang, target);
    };
}

}  // namespace leia

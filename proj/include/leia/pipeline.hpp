#pragma once

// File-to-file pipeline stages. Every stage streams its input in
// batches, fans work out to `threads` workers, and folds results back
// in input order, so outputs are byte-identical at any thread count.
// Outputs are written to a temp file and renamed into place on
// success; each stage also drops a <output>.counters.json sidecar.

#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leia/augment.hpp"
#include "leia/interlang.hpp"
#include "leia/io.hpp"
#include "leia/pack.hpp"
#include "leia/records.hpp"
#include "leia/stats.hpp"
#include "leia/tokenizer.hpp"
#include "leia/util.hpp"
#include "leia/wiki/dump.hpp"
#include "leia/wiki/wikitext.hpp"

namespace leia {

inline std::string counters_path(const std::string& output_path) {
    return output_path + ".counters.json";
}

inline void write_counters(const std::string& output_path, const Counters& c) {
    atomic_write_file(counters_path(output_path), to_json(c).dump(2) + "\n");
}

inline Counters load_counters(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ParseError("bad counters file: " + path);
    return counters_from_json(j);
}

// ---- extract ----

inline Counters run_extract(const std::string& dump_path, const std::string& out_path,
                            const std::string& lang, unsigned threads) {
    auto in = open_input(dump_path);
    DumpReader reader(*in);
    AtomicFile out(out_path);

    struct PageOut {
        std::string line;
        int skip = 0;  // 0 article, 1 redirect, 2 namespace
        ExtractDiagnostics diags;
    };
    const LangProfile profile = LangProfile::for_lang(lang);
    auto process = [&profile, &lang](const RawPage& page) -> PageOut {
        // per-thread extractor, rebuilt if the language changes between runs
        thread_local std::string tl_lang;
        thread_local std::unique_ptr<WikitextExtractor> tl_extractor;
        if (!tl_extractor || tl_lang != lang) {
            tl_extractor = std::make_unique<WikitextExtractor>(profile);
            tl_lang = lang;
        }
        WikitextExtractor& extractor = *tl_extractor;
        PageOut r;
        auto result = extractor.extract(page, lang);
        if (std::holds_alternative<SkipReason>(result)) {
            r.skip = std::get<SkipReason>(result) == SkipReason::Redirect ? 1 : 2;
        } else {
            const Article& art = std::get<Article>(result);
            r.line = to_json(art).dump();
            r.line.push_back('\n');
        }
        r.diags = extractor.take_diagnostics();
        return r;
    };

    Counters c;
    auto fold = [&](PageOut& r) {
        ++c.pages_seen;
        if (r.skip == 1) ++c.pages_skipped_redirect;
        else if (r.skip == 2) ++c.pages_skipped_namespace;
        else {
            ++c.articles;
            out.stream() << r.line;
        }
        for (const auto& [k, v] : r.diags) c.diagnostics[k] += v;
    };

    constexpr size_t kBatch = 64;
    std::vector<RawPage> batch;
    std::vector<PageOut> results;
    RawPage page;
    bool more = true;
    while (more) {
        batch.clear();
        while (batch.size() < kBatch && (more = reader.next(page))) batch.push_back(std::move(page));
        if (batch.empty()) break;
        if (threads <= 1) {
            for (RawPage& p : batch) {
                PageOut r = process(p);
                fold(r);
            }
        } else {
            parallel_map_ordered<RawPage, PageOut>(batch, results, threads, process);
            for (PageOut& r : results) fold(r);
        }
    }
    out.commit();
    write_counters(out_path, c);
    return c;
}

// ---- build-map ----

inline Counters run_build_map(const std::string& wikidata_path, const std::string& map_path,
                              const std::string& lang, unsigned threads,
                              const std::string& source_date = "") {
    auto in = open_input(wikidata_path);
    InterlangMap map = InterlangMap::build(*in, lang, threads, source_date);
    map.save(map_path);
    Counters c;
    const InterlangBuildStats& s = map.stats();
    c.diagnostics["map_lines"] = s.lines;
    c.diagnostics["map_entities"] = s.entities;
    c.diagnostics["map_entries"] = s.entries;
    c.diagnostics["map_duplicates"] = s.duplicates;
    c.diagnostics["map_malformed"] = s.malformed;
    c.diagnostics["map_filtered"] = s.filtered;
    write_counters(map_path, c);
    return c;
}

// ---- augment ----

inline Counters run_augment(const std::string& articles_path, const std::string& map_path,
                            const std::string& out_path, const AugmentConfig& config,
                            const std::string& lang, unsigned threads) {
    InterlangMap map = InterlangMap::load(map_path);
    Resolver resolver = make_resolver(map, lang);
    auto in = open_input(articles_path);
    AtomicFile out(out_path);

    struct DocOut {
        std::string line;
        AugmentCounters counters;
    };
    auto process = [&](const std::string& raw) -> DocOut {
        DocOut r;
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad article JSON record");
        Article art = article_from_json(j);
        AugmentedDoc doc = augment(art, resolver, config);
        r.counters = doc.counters;
        r.line = to_json(doc).dump();
        r.line.push_back('\n');
        return r;
    };

    Counters c;
    auto fold = [&](DocOut& r) {
        c.links_total += r.counters.links;
        c.links_resolved += r.counters.resolved;
        c.insertions += r.counters.insertions;
        c.skips += r.counters.skips;
        out.stream() << r.line;
    };

    constexpr size_t kBatch = 256;
    std::vector<std::string> batch;
    std::vector<DocOut> results;
    std::string line;
    bool more = true;
    while (more) {
        batch.clear();
        while (batch.size() < kBatch && (more = bool(std::getline(*in, line)))) {
            if (!line.empty()) batch.push_back(std::move(line));
        }
        if (batch.empty()) continue;
        if (threads <= 1) {
            for (const std::string& l : batch) {
                DocOut r = process(l);
                fold(r);
            }
        } else {
            parallel_map_ordered<std::string, DocOut>(batch, results, threads, process);
            for (DocOut& r : results) fold(r);
        }
    }
    out.commit();
    write_counters(out_path, c);
    return c;
}

// ---- pack ----

inline Counters run_pack(const std::string& augmented_path, const std::string& vocab_path,
                         const std::string& out_path, bool binary, const PackConfig& config,
                         unsigned threads) {
    auto tokenizer = reference_tokenizer(vocab_path);
    auto in = open_input(augmented_path);
    AtomicFile out(out_path);

    PackHeader header = make_pack_header(config, *tokenizer);
    if (binary) write_pack_binary_header(out.stream(), header);
    else write_pack_jsonl_header(out.stream(), header);

    Packer packer(config, tokenizer->separator_id(), [&](PackedSequence&& s) {
        if (binary) write_pack_binary_sequence(out.stream(), s);
        else write_pack_jsonl_sequence(out.stream(), s);
    });

    struct TokOut {
        uint64_t page_id = 0;
        std::vector<uint32_t> ids;
        std::vector<uint8_t> mask;
    };
    auto process = [&](const std::string& raw) -> TokOut {
        TokOut r;
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad augmented JSON record");
        AugmentedDoc doc = augmented_from_json(j);
        r.page_id = doc.page_id;
        std::vector<TokenWithOffset> tokens = tokenizer->tokenize(doc.text);
        r.mask = mask_tokens(doc, tokens, config);
        r.ids.reserve(tokens.size());
        for (const TokenWithOffset& t : tokens) r.ids.push_back(t.id);
        return r;
    };

    constexpr size_t kBatch = 256;
    std::vector<std::string> batch;
    std::vector<TokOut> results;
    std::string line;
    bool more = true;
    bool budget_open = true;
    while (more && budget_open) {
        batch.clear();
        while (batch.size() < kBatch && (more = bool(std::getline(*in, line)))) {
            if (!line.empty()) batch.push_back(std::move(line));
        }
        if (batch.empty()) continue;
        if (threads <= 1) {
            for (const std::string& l : batch) {
                TokOut r = process(l);
                if (!packer.push(r.ids, r.mask, r.page_id)) {
                    budget_open = false;
                    break;
                }
            }
        } else {
            parallel_map_ordered<std::string, TokOut>(batch, results, threads, process);
            for (TokOut& r : results) {
                if (!packer.push(r.ids, r.mask, r.page_id)) {
                    budget_open = false;
                    break;
                }
            }
        }
    }
    packer.finish();
    out.commit();

    Counters c;
    c.tokens_emitted = packer.tokens_emitted();
    c.sequences = packer.sequences_emitted();
    write_counters(out_path, c);
    return c;
}

// ---- stats ----

inline CorpusReport run_stats(const std::vector<std::string>& counter_files,
                              const std::string& report_json_path,
                              const std::string& report_table_path) {
    Counters total;
    for (const std::string& path : counter_files) total += load_counters(path);
    CorpusReport report = finalize_report(total);
    atomic_write_file(report_json_path, to_json(report).dump(2) + "\n");
    atomic_write_file(report_table_path, format_report_table(report));
    return report;
}

}  // namespace leia

#pragma once

// Pipeline counters and the corpus report. Counters form a commutative
// monoid (operator+=) so shards merge in any order; rates are computed
// once at reporting time and printed with six decimals.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "leia/util.hpp"

namespace leia {

struct Counters {
    uint64_t articles = 0;
    uint64_t pages_seen = 0;
    uint64_t pages_skipped_redirect = 0;
    uint64_t pages_skipped_namespace = 0;
    uint64_t links_total = 0;
    uint64_t links_resolved = 0;
    uint64_t insertions = 0;
    uint64_t skips = 0;
    uint64_t tokens_emitted = 0;
    uint64_t sequences = 0;
    std::map<std::string, uint64_t> diagnostics;

    Counters& operator+=(const Counters& o) {
        articles += o.articles;
        pages_seen += o.pages_seen;
        pages_skipped_redirect += o.pages_skipped_redirect;
        pages_skipped_namespace += o.pages_skipped_namespace;
        links_total += o.links_total;
        links_resolved += o.links_resolved;
        insertions += o.insertions;
        skips += o.skips;
        tokens_emitted += o.tokens_emitted;
        sequences += o.sequences;
        for (const auto& [k, v] : o.diagnostics) diagnostics[k] += v;
        return *this;
    }

    friend bool operator==(const Counters&, const Counters&) = default;
};

struct CorpusReport {
    Counters counters;
    double resolution_rate = 0.0;
    double empirical_skip_rate = 0.0;
};

inline double round6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::strtod(buf, nullptr);
}

inline CorpusReport finalize_report(const Counters& c) {
    CorpusReport r;
    r.counters = c;
    r.resolution_rate =
        c.links_total == 0 ? 0.0 : round6(double(c.links_resolved) / double(c.links_total));
    r.empirical_skip_rate =
        c.links_resolved == 0 ? 0.0 : round6(double(c.skips) / double(c.links_resolved));
    return r;
}

// accumulate: fold a stream of per-shard counters into one report.
template <typename Iterable>
CorpusReport accumulate(const Iterable& shards) {
    Counters total;
    for (const auto& c : shards) total += c;
    return finalize_report(total);
}

inline nlohmann::json to_json(const Counters& c) {
    return {{"articles", c.articles},
            {"pages_seen", c.pages_seen},
            {"pages_skipped_redirect", c.pages_skipped_redirect},
            {"pages_skipped_namespace", c.pages_skipped_namespace},
            {"links_total", c.links_total},
            {"links_resolved", c.links_resolved},
            {"insertions", c.insertions},
            {"skips", c.skips},
            {"tokens_emitted", c.tokens_emitted},
            {"sequences", c.sequences},
            {"diagnostics", c.diagnostics}};
}

inline Counters counters_from_json(const nlohmann::json& j) {
    Counters c;
    c.articles = j.value("articles", uint64_t{0});
    c.pages_seen = j.value("pages_seen", uint64_t{0});
    c.pages_skipped_redirect = j.value("pages_skipped_redirect", uint64_t{0});
    c.pages_skipped_namespace = j.value("pages_skipped_namespace", uint64_t{0});
    c.links_total = j.value("links_total", uint64_t{0});
    c.links_resolved = j.value("links_resolved", uint64_t{0});
    c.insertions = j.value("insertions", uint64_t{0});
    c.skips = j.value("skips", uint64_t{0});
    c.tokens_emitted = j.value("tokens_emitted", uint64_t{0});
    c.sequences = j.value("sequences", uint64_t{0});
    if (j.contains("diagnostics"))
        c.diagnostics = j.at("diagnostics").get<std::map<std::string, uint64_t>>();
    return c;
}

inline nlohmann::json to_json(const CorpusReport& r) {
    nlohmann::json j = to_json(r.counters);
    j["resolution_rate"] = r.resolution_rate;
    j["empirical_skip_rate"] = r.empirical_skip_rate;
    return j;
}

inline CorpusReport report_from_json(const nlohmann::json& j) {
    CorpusReport r;
    r.counters = counters_from_json(j);
    r.resolution_rate = j.value("resolution_rate", 0.0);
    r.empirical_skip_rate = j.value("empirical_skip_rate", 0.0);
    return r;
}

inline std::string format_report_table(const CorpusReport& r) {
    std::string out;
    char line[128];
    auto row_u = [&](const char* name, uint64_t v) {
        std::snprintf(line, sizeof line, "%-28s %20" PRIu64 "\n", name, v);
        out += line;
    };
    auto row_f = [&](const char* name, double v) {
        std::snprintf(line, sizeof line, "%-28s %20.6f\n", name, v);
        out += line;
    };
    const Counters& c = r.counters;
    out += "corpus report\n";
    out += "=============\n";
    row_u("articles", c.articles);
    row_u("pages_seen", c.pages_seen);
    row_u("pages_skipped_redirect", c.pages_skipped_redirect);
    row_u("pages_skipped_namespace", c.pages_skipped_namespace);
    row_u("links_total", c.links_total);
    row_u("links_resolved", c.links_resolved);
    row_f("resolution_rate", r.resolution_rate);
    row_u("insertions", c.insertions);
    row_u("skips", c.skips);
    row_f("empirical_skip_rate", r.empirical_skip_rate);
    row_u("tokens_emitted", c.tokens_emitted);
    row_u("sequences", c.sequences);
    if (!c.diagnostics.empty()) {
        out += "diagnostics\n";
        out += "-----------\n";
        for (const auto& [k, v] : c.diagnostics) row_u(k.c_str(), v);
    }
    return out;
}

}  // namespace leia

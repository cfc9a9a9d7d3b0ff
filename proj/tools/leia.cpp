// Command-line front end for the pipeline: extract | build-map |
// augment | pack | stats | eval | all. A JSON config file supplies
// defaults; flags override it. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 external-service error.

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "leia/eval_runner.hpp"
#include "leia/evalkit.hpp"
#include "leia/pipeline.hpp"
#include "leia/scorer.hpp"
#include "leia/version.hpp"

namespace {

using nlohmann::json;

// ---- logging ----

struct Logger {
    bool json_logs = false;

    void info(const std::string& stage, const std::string& msg,
              const json& extra = json::object()) const {
        if (json_logs) {
            json line{{"level", "info"}, {"stage", stage}, {"msg", msg}};
            for (auto it = extra.begin(); it != extra.end(); ++it) line[it.key()] = it.value();
            std::cerr << line.dump() << '\n';
        } else {
            std::cerr << "[" << stage << "] " << msg;
            if (!extra.empty()) std::cerr << " " << extra.dump();
            std::cerr << '\n';
        }
    }

    void error(const std::string& stage, const std::string& msg) const {
        if (json_logs) {
            std::cerr << json{{"level", "error"}, {"stage", stage}, {"msg", msg}}.dump() << '\n';
        } else {
            std::cerr << "[" << stage << "] error: " << msg << '\n';
        }
    }
};

// ---- config ----

struct Cfg {
    json root = json::object();

    static Cfg load(const std::string& path) {
        Cfg c;
        if (path.empty()) return c;
        c.root = json::parse(leia::read_file(path), nullptr, false);
        if (c.root.is_discarded() || !c.root.is_object())
            throw leia::ParseError("config file is not a JSON object: " + path);
        return c;
    }

    const json* at(std::initializer_list<const char*> keys) const {
        const json* cur = &root;
        for (const char* k : keys) {
            if (!cur->is_object()) return nullptr;
            auto it = cur->find(k);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        }
        return cur;
    }

    template <typename T>
    T get(std::initializer_list<const char*> keys, T fallback) const {
        const json* v = at(keys);
        if (v == nullptr) return fallback;
        return v->get<T>();
    }
};

template <typename T>
T pick(const std::optional<T>& flag, const Cfg& cfg, std::initializer_list<const char*> keys,
       T fallback) {
    if (flag) return *flag;
    return cfg.get<T>(keys, fallback);
}

// ---- digests ----

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw leia::IoError("cannot open for digest: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        std::streamsize got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buf, size_t(got));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(size_t(len) * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

// ---- option bundles ----

struct CommonOpts {
    std::string config_path;
    unsigned threads = 1;
    bool json_logs = false;
};

int run_guarded(const Logger& log, const std::string& stage, const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const leia::ScorerUnavailable& e) {
        log.error(stage, e.what());
        return 3;
    } catch (const leia::ScorerProtocol& e) {
        log.error(stage, e.what());
        return 3;
    } catch (const std::exception& e) {
        log.error(stage, e.what());
        return 2;
    }
}

uint64_t now_ms() {
    return uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now().time_since_epoch())
                        .count());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LEIA training-corpus pipeline and evaluation kit"};
    app.set_version_flag("--version", std::string("leia ") + leia::kVersion);
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "JSON config file with per-stage defaults");
    app.add_option("--threads", common.threads, "worker threads per stage")->check(CLI::Range(1u, 256u));
    app.add_flag("--json-logs", common.json_logs, "machine-readable log lines on stderr");
    // Let the global options above appear after the subcommand name too
    // ("leia all --config c.json" and "leia --config c.json all" both work).
    app.fallthrough();

    // extract
    auto* cmd_extract = app.add_subcommand("extract", "dump XML -> articles JSONL");
    std::optional<std::string> x_dump, x_out, x_lang;
    cmd_extract->add_option("--dump", x_dump, "pages-articles XML export (.xml/.bz2/.gz)");
    cmd_extract->add_option("--out", x_out, "output articles JSONL path");
    cmd_extract->add_option("--lang", x_lang, "language code of the dump");

    // build-map
    auto* cmd_map = app.add_subcommand("build-map", "Wikidata dump -> inter-language index");
    std::optional<std::string> m_wikidata, m_map, m_lang, m_date;
    cmd_map->add_option("--wikidata", m_wikidata, "Wikidata entity dump (.json/.bz2/.gz)");
    cmd_map->add_option("--map", m_map, "output index path (TSV + .idx side file)");
    cmd_map->add_option("--lang", m_lang, "source language code");
    cmd_map->add_option("--source-date", m_date, "dump date recorded in metadata");

    // augment
    auto* cmd_aug = app.add_subcommand("augment", "articles JSONL -> augmented JSONL");
    std::optional<std::string> a_articles, a_map, a_out, a_lang, a_strategy;
    std::optional<double> a_pskip;
    std::optional<uint64_t> a_seed;
    bool a_no_special = false;
    cmd_aug->add_option("--articles", a_articles, "articles JSONL from extract");
    cmd_aug->add_option("--map", a_map, "inter-language index path");
    cmd_aug->add_option("--out", a_out, "output augmented JSONL path");
    cmd_aug->add_option("--lang", a_lang, "language code");
    cmd_aug->add_option("--strategy", a_strategy, "left | right | replace")
        ->check(CLI::IsMember({"left", "right", "replace"}));
    cmd_aug->add_option("--p-skip", a_pskip, "per-link skip probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd_aug->add_option("--seed", a_seed, "seed for the per-link skip draw");
    cmd_aug->add_flag("--no-special-tokens", a_no_special, "insert bare names without delimiters");

    // pack
    auto* cmd_pack = app.add_subcommand("pack", "augmented JSONL -> packed sequences");
    std::optional<std::string> p_augmented, p_vocab, p_out;
    std::optional<uint64_t> p_maxlen, p_budget;
    bool p_mask_entities = false, p_no_separator = false, p_binary = false;
    cmd_pack->add_option("--augmented", p_augmented, "augmented JSONL from augment");
    cmd_pack->add_option("--vocab", p_vocab, "tokenizer vocab file (one token per line)");
    cmd_pack->add_option("--out", p_out, "output packed file path");
    cmd_pack->add_option("--max-len", p_maxlen, "sequence length")->check(CLI::Range(uint64_t{2}, uint64_t{1} << 20));
    cmd_pack->add_option("--token-budget", p_budget, "total emitted-token budget");
    cmd_pack->add_flag("--mask-entity-tokens", p_mask_entities, "also block loss on name tokens");
    cmd_pack->add_flag("--no-separator", p_no_separator, "do not insert separators between docs");
    cmd_pack->add_flag("--binary", p_binary, "write the binary container instead of JSONL");

    // convert (pack file format converter)
    auto* cmd_conv = app.add_subcommand("convert", "pack JSONL <-> binary container");
    std::string c_in, c_out;
    cmd_conv->add_option("--in", c_in, "input pack file")->required();
    cmd_conv->add_option("--out", c_out, "output pack file")->required();
    bool c_to_binary = false, c_to_jsonl = false;
    cmd_conv->add_flag("--to-binary", c_to_binary, "output the binary container");
    cmd_conv->add_flag("--to-jsonl", c_to_jsonl, "output the JSONL form");

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "merge stage counters into a corpus report");
    std::vector<std::string> s_counters;
    std::string s_manifest, s_out_json = "report.json", s_out_table = "report.txt";
    cmd_stats->add_option("--counters", s_counters, "stage counters JSON files");
    cmd_stats->add_option("--manifest", s_manifest, "run manifest listing counter files");
    cmd_stats->add_option("--out-json", s_out_json, "report JSON output path");
    cmd_stats->add_option("--out-table", s_out_table, "report text table output path");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "few-shot evaluation against a scorer endpoint");
    std::optional<std::string> e_task, e_dataset, e_fewshot, e_templates, e_scorer, e_replay,
        e_out;
    std::optional<uint64_t> e_shots, e_seed, e_runs, e_inflight;
    cmd_eval->add_option("--task", e_task, "task id (xcodah, xcsqa, jcommonsenseqa, jaqket, jemhopqa, niilc)");
    cmd_eval->add_option("--dataset", e_dataset, "evaluation dataset (JSONL)");
    cmd_eval->add_option("--fewshot", e_fewshot, "few-shot pool (JSONL) for tasks with a dedicated set");
    cmd_eval->add_option("--templates-dir", e_templates, "directory with the verbatim template files");
    cmd_eval->add_option("--shots", e_shots, "few-shot example count");
    cmd_eval->add_option("--seed", e_seed, "sampling seed");
    cmd_eval->add_option("--runs", e_runs, "independent run count");
    cmd_eval->add_option("--scorer-url", e_scorer, "scorer endpoint base URL");
    cmd_eval->add_option("--replay", e_replay, "replay fixture instead of a live scorer");
    cmd_eval->add_option("--in-flight", e_inflight, "max concurrent scorer requests");
    cmd_eval->add_option("--out", e_out, "write the result JSON to this path");

    // all
    auto* cmd_all = app.add_subcommand("all", "extract -> build-map -> augment -> pack -> stats");
    std::optional<std::string> all_outdir;
    cmd_all->add_option("--out-dir", all_outdir, "output directory for the full run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and usage hint
        return 1;
    }

    Logger log{common.json_logs};
    Cfg cfg;
    try {
        cfg = Cfg::load(common.config_path);
    } catch (const std::exception& e) {
        log.error("config", e.what());
        return 2;
    }
    unsigned threads = common.threads;
    if (threads == 1 && cfg.at({"threads"}) != nullptr)
        threads = cfg.get<unsigned>({"threads"}, 1);

    auto augment_config = [&](const Cfg& c) {
        leia::AugmentConfig ac;
        std::string strat = pick<std::string>(a_strategy, c, {"augment", "strategy"}, "right");
        auto s = leia::strategy_from_name(strat);
        if (!s) throw leia::Error("unknown strategy: " + strat);
        ac.strategy = *s;
        ac.p_skip = pick<double>(a_pskip, c, {"augment", "p_skip"}, 0.0);
        ac.seed = pick<uint64_t>(a_seed, c, {"augment", "seed"}, 0);
        bool use_special = c.get<bool>({"augment", "use_special_tokens"}, true);
        if (a_no_special) use_special = false;
        ac.use_special_tokens = use_special;
        return ac;
    };
    auto pack_config = [&](const Cfg& c) {
        leia::PackConfig pc;
        pc.max_len = uint32_t(pick<uint64_t>(p_maxlen, c, {"pack", "max_len"}, 2048));
        pc.token_budget = pick<uint64_t>(p_budget, c, {"pack", "token_budget"}, 200'000'000ULL);
        pc.mask_entity_tokens = p_mask_entities || c.get<bool>({"pack", "mask_entity_tokens"}, false);
        pc.insert_separator = !p_no_separator && c.get<bool>({"pack", "insert_separator"}, true);
        return pc;
    };

    if (*cmd_extract) {
        std::string dump = pick<std::string>(x_dump, cfg, {"inputs", "dump"}, "");
        std::string out = pick<std::string>(x_out, cfg, {"outputs", "articles"}, "articles.jsonl");
        std::string lang = pick<std::string>(x_lang, cfg, {"lang"}, "");
        if (dump.empty() || lang.empty()) {
            log.error("extract", "need --dump and --lang (or config inputs.dump / lang)");
            return 1;
        }
        return run_guarded(log, "extract", [&] {
            leia::Counters c = leia::run_extract(dump, out, lang, threads);
            log.info("extract", "done", leia::to_json(c));
        });
    }

    if (*cmd_map) {
        std::string wikidata = pick<std::string>(m_wikidata, cfg, {"inputs", "wikidata"}, "");
        std::string map = pick<std::string>(m_map, cfg, {"outputs", "map"}, "interlang.tsv");
        std::string lang = pick<std::string>(m_lang, cfg, {"lang"}, "");
        std::string date = pick<std::string>(m_date, cfg, {"inputs", "wikidata_date"}, "");
        if (wikidata.empty() || lang.empty()) {
            log.error("build-map", "need --wikidata and --lang (or config inputs.wikidata / lang)");
            return 1;
        }
        return run_guarded(log, "build-map", [&] {
            leia::Counters c = leia::run_build_map(wikidata, map, lang, threads, date);
            log.info("build-map", "done", leia::to_json(c));
        });
    }

    if (*cmd_aug) {
        std::string articles = pick<std::string>(a_articles, cfg, {"outputs", "articles"}, "articles.jsonl");
        std::string map = pick<std::string>(a_map, cfg, {"outputs", "map"}, "interlang.tsv");
        std::string out = pick<std::string>(a_out, cfg, {"outputs", "augmented"}, "augmented.jsonl");
        std::string lang = pick<std::string>(a_lang, cfg, {"lang"}, "");
        if (lang.empty()) {
            log.error("augment", "need --lang (or config lang)");
            return 1;
        }
        return run_guarded(log, "augment", [&] {
            leia::AugmentConfig ac = augment_config(cfg);
            leia::Counters c = leia::run_augment(articles, map, out, ac, lang, threads);
            log.info("augment", "done", leia::to_json(c));
        });
    }

    if (*cmd_pack) {
        std::string augmented = pick<std::string>(p_augmented, cfg, {"outputs", "augmented"}, "augmented.jsonl");
        std::string vocab = pick<std::string>(p_vocab, cfg, {"inputs", "vocab"}, "");
        std::string out = pick<std::string>(p_out, cfg, {"outputs", "packed"}, "packed.jsonl");
        bool binary = p_binary || cfg.get<bool>({"pack", "binary"}, false);
        if (vocab.empty()) {
            log.error("pack", "need --vocab (or config inputs.vocab)");
            return 1;
        }
        return run_guarded(log, "pack", [&] {
            leia::PackConfig pc = pack_config(cfg);
            leia::Counters c = leia::run_pack(augmented, vocab, out, binary, pc, threads);
            log.info("pack", "done", leia::to_json(c));
        });
    }

    if (*cmd_conv) {
        if (c_to_binary == c_to_jsonl) {
            log.error("convert", "pass exactly one of --to-binary / --to-jsonl");
            return 1;
        }
        return run_guarded(log, "convert", [&] {
            std::ifstream in(c_in, std::ios::binary);
            if (!in) throw leia::IoError("cannot open " + c_in);
            char probe[8] = {};
            in.read(probe, 8);
            bool in_binary = std::string_view(probe, size_t(in.gcount())) == "LEIAPCK1";
            in.clear();
            in.seekg(0);
            leia::AtomicFile out(c_out);
            leia::convert_pack_file(in, in_binary, out.stream(), c_to_binary);
            out.commit();
            log.info("convert", "done");
        });
    }

    if (*cmd_stats) {
        return run_guarded(log, "stats", [&] {
            std::vector<std::string> files = s_counters;
            if (!s_manifest.empty()) {
                json m = json::parse(leia::read_file(s_manifest), nullptr, false);
                if (m.is_discarded()) throw leia::ParseError("bad manifest: " + s_manifest);
                for (const auto& f : m.value("counter_files", std::vector<std::string>{}))
                    files.push_back(f);
            }
            if (files.empty()) throw leia::Error("no counters given (--counters or --manifest)");
            leia::CorpusReport r = leia::run_stats(files, s_out_json, s_out_table);
            std::cout << leia::format_report_table(r);
        });
    }

    if (*cmd_eval) {
        std::string task_id = pick<std::string>(e_task, cfg, {"eval", "task"}, "");
        auto task = leia::find_task(task_id);
        if (!task) {
            log.error("eval", "unknown or missing task id: '" + task_id + "'");
            return 1;
        }
        std::string dataset = pick<std::string>(e_dataset, cfg, {"eval", "dataset"}, "");
        std::string fewshot = pick<std::string>(e_fewshot, cfg, {"eval", "fewshot"}, "");
        std::string templates =
            pick<std::string>(e_templates, cfg, {"eval", "templates_dir"}, "templates");
        size_t shots = pick<uint64_t>(e_shots, cfg, {"eval", "shots"}, 0);
        uint64_t seed = pick<uint64_t>(e_seed, cfg, {"eval", "seed"}, 0);
        size_t runs = pick<uint64_t>(e_runs, cfg, {"eval", "runs"}, 1);
        unsigned in_flight = unsigned(pick<uint64_t>(e_inflight, cfg, {"eval", "in_flight"}, 1));
        std::string replay = pick<std::string>(e_replay, cfg, {"eval", "replay"}, "");
        std::string scorer_url = pick<std::string>(e_scorer, cfg, {"eval", "scorer_url"}, "");
        if (scorer_url.empty()) {
            const char* env = std::getenv("LEIA_SCORER_URL");
            if (env != nullptr) scorer_url = env;
        }
        if (dataset.empty()) {
            log.error("eval", "need --dataset (or config eval.dataset)");
            return 1;
        }
        if (replay.empty() && scorer_url.empty()) {
            log.error("eval", "need --scorer-url, LEIA_SCORER_URL, or --replay");
            return 1;
        }
        if (shots > 0 && !task->pool_is_test_set && fewshot.empty()) {
            log.error("eval", "task '" + task_id + "' draws shots from a dedicated set; pass --fewshot");
            return 1;
        }
        return run_guarded(log, "eval", [&] {
            leia::EvalJob job;
            job.task = *task;
            job.tmpl = leia::load_template(task_id, templates + "/" + task->template_file);
            job.shots = shots;
            job.seed = seed;
            job.runs = runs;
            job.in_flight = in_flight;
            size_t n_examples = 0;
            {
                std::ifstream in(dataset, std::ios::binary);
                if (!in) throw leia::IoError("cannot open " + dataset);
                if (task->generative) {
                    job.gen_test = leia::load_gen_jsonl(in);
                    n_examples = job.gen_test.size();
                } else {
                    job.mc_test = leia::load_mc_jsonl(in);
                    n_examples = job.mc_test.size();
                }
            }
            if (!fewshot.empty()) {
                std::ifstream in(fewshot, std::ios::binary);
                if (!in) throw leia::IoError("cannot open " + fewshot);
                if (task->generative) job.gen_pool = leia::load_gen_jsonl(in);
                else job.mc_pool = leia::load_mc_jsonl(in);
            }
            std::unique_ptr<leia::ScorerClient> client;
            if (!replay.empty()) {
                std::ifstream in(replay, std::ios::binary);
                if (!in) throw leia::IoError("cannot open " + replay);
                client = std::make_unique<leia::ReplayScorer>(in);
            } else {
                client = std::make_unique<leia::HttpScorer>(scorer_url);
            }
            leia::EvalResult result = leia::run_eval(job, *client);
            json out = leia::to_json(result, task_id, n_examples);
            std::cout << out.dump(2) << '\n';
            if (e_out && !e_out->empty()) leia::atomic_write_file(*e_out, out.dump(2) + "\n");
        });
    }

    if (*cmd_all) {
        std::string outdir = pick<std::string>(all_outdir, cfg, {"outputs", "dir"}, "out");
        std::string dump = cfg.get<std::string>({"inputs", "dump"}, "");
        std::string wikidata = cfg.get<std::string>({"inputs", "wikidata"}, "");
        std::string vocab = cfg.get<std::string>({"inputs", "vocab"}, "");
        std::string lang = cfg.get<std::string>({"lang"}, "");
        if (dump.empty() || wikidata.empty() || vocab.empty() || lang.empty()) {
            log.error("all", "config must provide inputs.dump, inputs.wikidata, inputs.vocab, lang");
            return 1;
        }
        return run_guarded(log, "all", [&] {
            std::filesystem::create_directories(outdir);
            std::string articles = outdir + "/articles.jsonl";
            std::string map = outdir + "/interlang.tsv";
            std::string augmented = outdir + "/augmented.jsonl";
            bool binary = cfg.get<bool>({"pack", "binary"}, false);
            std::string packed = outdir + (binary ? "/packed.bin" : "/packed.jsonl");
            std::string report_json = outdir + "/report.json";
            std::string report_table = outdir + "/report.txt";

            json timings = json::object();
            json counters = json::object();
            auto timed = [&](const char* stage, auto&& fn) {
                uint64_t t0 = now_ms();
                leia::Counters c = fn();
                timings[stage] = now_ms() - t0;
                counters[stage] = leia::to_json(c);
                log.info(stage, "done", leia::to_json(c));
            };
            timed("extract", [&] { return leia::run_extract(dump, articles, lang, threads); });
            timed("build_map", [&] {
                return leia::run_build_map(wikidata, map, lang, threads,
                                           cfg.get<std::string>({"inputs", "wikidata_date"}, ""));
            });
            timed("augment", [&] {
                return leia::run_augment(articles, map, augmented, augment_config(cfg), lang,
                                         threads);
            });
            timed("pack", [&] {
                return leia::run_pack(augmented, vocab, packed, binary, pack_config(cfg), threads);
            });

            std::vector<std::string> counter_files = {
                leia::counters_path(articles), leia::counters_path(map),
                leia::counters_path(augmented), leia::counters_path(packed)};
            uint64_t t0 = now_ms();
            leia::CorpusReport report = leia::run_stats(counter_files, report_json, report_table);
            timings["stats"] = now_ms() - t0;
            std::cout << leia::format_report_table(report);

            json manifest{{"tool_version", leia::kVersion},
                          {"config", cfg.root},
                          {"lang", lang},
                          {"threads", threads},
                          {"inputs",
                           json{{dump, sha256_file(dump)},
                                {wikidata, sha256_file(wikidata)},
                                {vocab, sha256_file(vocab)}}},
                          {"outputs",
                           json{{articles, sha256_file(articles)},
                                {map, sha256_file(map)},
                                {augmented, sha256_file(augmented)},
                                {packed, sha256_file(packed)},
                                {report_json, sha256_file(report_json)}}},
                          {"counter_files", counter_files},
                          {"counters", counters},
                          {"timings_ms", timings}};
            leia::atomic_write_file(outdir + "/manifest.json", manifest.dump(2) + "\n");
            log.info("all", "manifest written", json{{"path", outdir + "/manifest.json"}});
        });
    }

    return 1;  // unreachable: require_subcommand(1)
}

#pragma once

// Few-shot QA evaluation: prompt construction from verbatim template
// files, candidate selection by highest log-probability, character
// F-measure for generative answers, and Student's-t confidence
// intervals over runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "leia/rng.hpp"
#include "leia/unicode.hpp"
#include "leia/util.hpp"

namespace leia {

// ---- examples ----

struct MCExample {
    std::string question;  // full candidate text is the "question" for sentence-completion tasks
    std::vector<std::string> choices;
    int gold_index = 0;
};

struct GenExample {
    std::string question;
    std::vector<std::string> gold_answers;
};

// ---- templates ----

struct PromptTemplate {
    std::string task_id;
    std::string text;                 // placeholders: {question} {answer} {choice0..N}
    std::string fewshot_joiner = "\n\n";
};

inline PromptTemplate load_template(const std::string& task_id, const std::string& path) {
    PromptTemplate t;
    t.task_id = task_id;
    t.text = read_file(path);
    return t;
}

using Bindings = std::unordered_map<std::string, std::string>;

// Substitutes {name} placeholders; any placeholder without a binding is
// an error, so prompts can never leak raw braces.
inline std::string render_template(std::string_view text, const Bindings& values) {
    std::string out;
    out.reserve(text.size() + 64);
    size_t pos = 0;
    while (pos < text.size()) {
        char c = text[pos];
        if (c != '{') {
            out.push_back(c);
            ++pos;
            continue;
        }
        size_t close = text.find('}', pos + 1);
        if (close == std::string_view::npos)
            throw TemplateUnderflow("unterminated placeholder in template");
        std::string name(text.substr(pos + 1, close - pos - 1));
        auto it = values.find(name);
        if (it == values.end()) throw TemplateUnderflow("unbound placeholder {" + name + "}");
        out += it->second;
        pos = close + 1;
    }
    return out;
}

// ---- seeded sampling ----

// Draws k distinct indices from [0, n) \ {exclude} (exclude < 0 keeps
// all), by partial Fisher–Yates on a std::mt19937_64 stream. The draw
// depends only on (n, k, seed, exclude).
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, uint64_t seed,
                                                      long exclude = -1) {
    std::vector<size_t> idx;
    idx.reserve(n);
    for (size_t i = 0; i < n; ++i)
        if (exclude < 0 || i != size_t(exclude)) idx.push_back(i);
    if (k > idx.size()) throw TemplateUnderflow("few-shot pool smaller than shot count");
    std::mt19937_64 eng(seed);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + size_t(eng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

// ---- answer rendering ----

enum class AnswerStyle { ChoiceText, ChoiceIndex };

inline std::string answer_text(const MCExample& ex, int choice, AnswerStyle style) {
    if (style == AnswerStyle::ChoiceIndex) return std::to_string(choice);
    return ex.choices[size_t(choice)];
}

inline Bindings bind_mc(const MCExample& ex, const std::string& answer) {
    Bindings b{{"question", ex.question}, {"answer", answer}};
    for (size_t i = 0; i < ex.choices.size(); ++i)
        b["choice" + std::to_string(i)] = ex.choices[i];
    return b;
}

inline Bindings bind_gen(const GenExample& ex, const std::string& answer) {
    return {{"question", ex.question}, {"answer", answer}};
}

// ---- prompt construction ----
//
// k solved examples drawn without replacement from the pool (seeded,
// optionally excluding the query itself when the pool is the test set),
// joined by blank lines, followed by the query with {answer} empty.

inline std::string build_prompt(const PromptTemplate& tmpl, const MCExample& example,
                                const std::vector<MCExample>& fewshot, size_t k, uint64_t seed,
                                AnswerStyle style, long exclude = -1) {
    std::string out;
    for (size_t i : sample_without_replacement(fewshot.size(), k, seed, exclude)) {
        const MCExample& shot = fewshot[i];
        out += render_template(tmpl.text, bind_mc(shot, answer_text(shot, shot.gold_index, style)));
        out += tmpl.fewshot_joiner;
    }
    out += render_template(tmpl.text, bind_mc(example, ""));
    return out;
}

inline std::string build_prompt(const PromptTemplate& tmpl, const GenExample& example,
                                const std::vector<GenExample>& fewshot, size_t k, uint64_t seed,
                                long exclude = -1) {
    std::string out;
    for (size_t i : sample_without_replacement(fewshot.size(), k, seed, exclude)) {
        const GenExample& shot = fewshot[i];
        out += render_template(tmpl.text, bind_gen(shot, shot.gold_answers.front()));
        out += tmpl.fewshot_joiner;
    }
    out += render_template(tmpl.text, bind_gen(example, ""));
    return out;
}

// ---- metrics ----

inline int select_answer(const std::vector<double>& scores) {
    if (scores.empty()) throw Error("select_answer: empty score list");
    size_t best = 0;
    for (size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return int(best);
}

// Character-level F-measure over Unicode scalars: multiset precision /
// recall against each gold, harmonic mean, maximum across golds.
// Surrounding whitespace is trimmed first.
inline double char_f(std::string_view prediction, const std::vector<std::string>& golds) {
    auto count_chars = [](std::string_view s) {
        std::unordered_map<char32_t, uint32_t> m;
        size_t pos = 0;
        while (pos < s.size()) ++m[uni::decode(s, pos)];
        return m;
    };
    std::string_view pred = uni::trim(prediction);
    auto pc = count_chars(pred);
    size_t plen = 0;
    for (const auto& [cp, n] : pc) plen += n;
    double best = 0.0;
    for (const std::string& gold_raw : golds) {
        std::string_view gold = uni::trim(gold_raw);
        auto gc = count_chars(gold);
        size_t glen = 0, inter = 0;
        for (const auto& [cp, n] : gc) {
            glen += n;
            auto it = pc.find(cp);
            if (it != pc.end()) inter += std::min<uint32_t>(n, it->second);
        }
        if (plen == 0 || glen == 0) continue;  // F = 0 for this gold
        double p = double(inter) / double(plen);
        double r = double(inter) / double(glen);
        if (p + r > 0) best = std::max(best, 2 * p * r / (p + r));
    }
    return best;
}

// Two-sided 97.5% Student-t quantiles for df 1..30; larger df use a
// Cornish–Fisher expansion around the normal quantile.
inline double t_quantile_975(size_t df) {
    static constexpr double kTable[30] = {
        12.7062047364, 4.3026527297, 3.1824463053, 2.7764451052, 2.5705818356,
        2.4469118511,  2.3646242516, 2.3060041352, 2.2621571629, 2.2281388520,
        2.2009851601,  2.1788128297, 2.1603686565, 2.1447866879, 2.1314495456,
        2.1199052992,  2.1098155778, 2.1009220402, 2.0930240544, 2.0859634473,
        2.0796138447,  2.0738730679, 2.0686576104, 2.0638985616, 2.0595385528,
        2.0555294386,  2.0518305165, 2.0484071418, 2.0452296421, 2.0422724563,
    };
    if (df == 0) throw Error("t quantile needs df >= 1");
    if (df <= 30) return kTable[df - 1];
    const double z = 1.9599639845400545;
    const double z3 = z * z * z, z5 = z3 * z * z;
    double d = double(df);
    return z + (z3 + z) / (4 * d) + (5 * z5 + 16 * z3 + 3 * z) / (96 * d * d);
}

struct CiResult {
    double mean = 0.0;
    double half_width = 0.0;
};

inline CiResult ci95(const std::vector<double>& values) {
    if (values.size() < 2) throw InsufficientRuns("ci95 needs at least 2 runs");
    double n = double(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    double s = std::sqrt(ss / (n - 1));
    double t = t_quantile_975(values.size() - 1);
    return {mean, t * s / std::sqrt(n)};
}

enum class MetricKind { Accuracy, CharF };

struct EvalResult {
    MetricKind metric = MetricKind::Accuracy;
    std::vector<double> per_run;
    double mean = 0.0;
    double ci95_half_width = 0.0;  // 0 when n_runs < 2
    size_t n_runs = 0;
};

inline EvalResult summarize_runs(MetricKind metric, std::vector<double> per_run) {
    EvalResult r;
    r.metric = metric;
    r.n_runs = per_run.size();
    r.per_run = std::move(per_run);
    if (r.n_runs >= 2) {
        CiResult ci = ci95(r.per_run);
        r.mean = ci.mean;
        r.ci95_half_width = ci.half_width;
    } else if (r.n_runs == 1) {
        r.mean = r.per_run[0];
    }
    return r;
}

// ---- dataset loaders ----
//
// Multiple-choice lines come in two shapes, detected per line:
//   distributed:  {"question":{"stem":…,"choices":[{"label":…,"text":…}]},"answerKey":…}
//   plain:        {"question":…,"choices":[…],"gold_index":…}
// Generative lines: {"question":…,"answers":[…]}.

inline MCExample mc_from_json(const nlohmann::json& j) {
    MCExample ex;
    const auto& q = j.at("question");
    if (q.is_object()) {
        ex.question = q.value("stem", "");
        std::string answer_key = j.at("answerKey").get<std::string>();
        int gold = -1;
        for (const auto& ch : q.at("choices")) {
            std::string label = ch.at("label").get<std::string>();
            ex.choices.push_back(ch.at("text").get<std::string>());
            if (label == answer_key) gold = int(ex.choices.size()) - 1;
        }
        if (gold < 0) throw ParseError("answerKey does not match any choice label");
        ex.gold_index = gold;
    } else {
        ex.question = q.get<std::string>();
        ex.choices = j.at("choices").get<std::vector<std::string>>();
        ex.gold_index = j.at("gold_index").get<int>();
    }
    if (ex.choices.size() < 2) throw ParseError("multiple-choice example needs >= 2 choices");
    if (ex.gold_index < 0 || size_t(ex.gold_index) >= ex.choices.size())
        throw ParseError("gold_index out of range");
    return ex;
}

inline GenExample gen_from_json(const nlohmann::json& j) {
    GenExample ex;
    ex.question = j.at("question").get<std::string>();
    ex.gold_answers = j.at("answers").get<std::vector<std::string>>();
    if (ex.gold_answers.empty()) throw ParseError("generative example needs >= 1 gold answer");
    return ex;
}

template <typename T, typename Fn>
std::vector<T> load_jsonl_examples(std::istream& in, Fn&& from_json) {
    std::vector<T> out;
    std::string line;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad JSON at line " + std::to_string(lineno));
        out.push_back(from_json(j));
    }
    return out;
}

inline std::vector<MCExample> load_mc_jsonl(std::istream& in) {
    return load_jsonl_examples<MCExample>(in, mc_from_json);
}

inline std::vector<GenExample> load_gen_jsonl(std::istream& in) {
    return load_jsonl_examples<GenExample>(in, gen_from_json);
}

// ---- task registry ----

struct TaskSpec {
    std::string id;
    bool generative = false;
    AnswerStyle style = AnswerStyle::ChoiceText;
    std::string template_file;
    bool pool_is_test_set = false;  // few-shot examples drawn from the eval set itself
};

inline const std::vector<TaskSpec>& task_registry() {
    static const std::vector<TaskSpec> kTasks = {
        {"xcodah", false, AnswerStyle::ChoiceText, "xcodah.txt", true},
        {"xcsqa", false, AnswerStyle::ChoiceText, "xcsqa.txt", true},
        {"jcommonsenseqa", false, AnswerStyle::ChoiceText, "jcommonsenseqa.txt", false},
        {"jaqket", false, AnswerStyle::ChoiceIndex, "jaqket.txt", false},
        {"jemhopqa", true, AnswerStyle::ChoiceText, "jemhopqa.txt", false},
        {"niilc", true, AnswerStyle::ChoiceText, "niilc.txt", false},
    };
    return kTasks;
}

inline std::optional<TaskSpec> find_task(std::string_view id) {
    for (const TaskSpec& t : task_registry())
        if (t.id == id) return t;
    return std::nullopt;
}

}  // namespace leia

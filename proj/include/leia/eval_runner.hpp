#pragma once

// Drives a full evaluation: N independent runs over a dataset, each
// with its own few-shot draw, scored against a ScorerClient. Requests
// may go out concurrently (bounded); per-example results are assembled
// in dataset order so output is identical at any in-flight limit.

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leia/evalkit.hpp"
#include "leia/rng.hpp"
#include "leia/scorer.hpp"
#include "leia/util.hpp"

namespace leia {

struct EvalJob {
    TaskSpec task;
    PromptTemplate tmpl;
    std::vector<MCExample> mc_test;
    std::vector<MCExample> mc_pool;  // ignored when task.pool_is_test_set
    std::vector<GenExample> gen_test;
    std::vector<GenExample> gen_pool;
    size_t shots = 0;
    uint64_t seed = 0;
    size_t runs = 1;
    unsigned in_flight = 1;
};

namespace detail {
inline constexpr uint64_t kEvalRunSalt = 0x6576616cULL;  // distinguishes run streams
}

inline uint64_t eval_run_seed(uint64_t seed, size_t run) {
    return mix_key(seed, detail::kEvalRunSalt, run);
}

inline std::vector<std::string> mc_candidates(const MCExample& ex, AnswerStyle style) {
    std::vector<std::string> out;
    out.reserve(ex.choices.size());
    for (size_t c = 0; c < ex.choices.size(); ++c)
        out.push_back(style == AnswerStyle::ChoiceIndex ? std::to_string(c) : ex.choices[c]);
    return out;
}

inline double eval_one_run_mc(const EvalJob& job, ScorerClient& client, uint64_t run_seed) {
    const std::vector<MCExample>& pool = job.task.pool_is_test_set ? job.mc_test : job.mc_pool;
    std::vector<size_t> index(job.mc_test.size());
    std::iota(index.begin(), index.end(), size_t{0});
    std::vector<uint8_t> correct;
    parallel_map_ordered<size_t, uint8_t>(
        index, correct, job.in_flight, [&](const size_t& i) -> uint8_t {
            const MCExample& ex = job.mc_test[i];
            long exclude = job.task.pool_is_test_set ? long(i) : -1;
            std::string prompt =
                build_prompt(job.tmpl, ex, pool, job.shots, run_seed, job.task.style, exclude);
            std::vector<double> scores = client.score(prompt, mc_candidates(ex, job.task.style));
            return select_answer(scores) == ex.gold_index ? 1 : 0;
        });
    uint64_t hits = 0;
    for (uint8_t c : correct) hits += c;
    return job.mc_test.empty() ? 0.0 : double(hits) / double(job.mc_test.size());
}

inline double eval_one_run_gen(const EvalJob& job, ScorerClient& client, uint64_t run_seed) {
    const std::vector<GenExample>& pool =
        job.task.pool_is_test_set ? job.gen_test : job.gen_pool;
    std::vector<size_t> index(job.gen_test.size());
    std::iota(index.begin(), index.end(), size_t{0});
    std::vector<double> fs;
    parallel_map_ordered<size_t, double>(
        index, fs, job.in_flight, [&](const size_t& i) -> double {
            const GenExample& ex = job.gen_test[i];
            long exclude = job.task.pool_is_test_set ? long(i) : -1;
            std::string prompt =
                build_prompt(job.tmpl, ex, pool, job.shots, run_seed, exclude);
            return char_f(client.generate(prompt), ex.gold_answers);
        });
    double sum = 0.0;
    for (double f : fs) sum += f;
    return fs.empty() ? 0.0 : sum / double(fs.size());
}

inline EvalResult run_eval(const EvalJob& job, ScorerClient& client) {
    std::vector<double> per_run;
    per_run.reserve(job.runs);
    for (size_t r = 0; r < job.runs; ++r) {
        uint64_t rs = eval_run_seed(job.seed, r);
        per_run.push_back(job.task.generative ? eval_one_run_gen(job, client, rs)
                                              : eval_one_run_mc(job, client, rs));
    }
    return summarize_runs(job.task.generative ? MetricKind::CharF : MetricKind::Accuracy,
                          std::move(per_run));
}

inline nlohmann::json to_json(const EvalResult& r, const std::string& task_id,
                              size_t n_examples) {
    return {{"task", task_id},
            {"metric", r.metric == MetricKind::Accuracy ? "accuracy" : "char_f"},
            {"per_run", r.per_run},
            {"mean", r.mean},
            {"ci95_half_width", r.ci95_half_width},
            {"n_runs", r.n_runs},
            {"n_examples", n_examples}};
}

}  // namespace leia

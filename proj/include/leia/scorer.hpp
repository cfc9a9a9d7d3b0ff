#pragma once

// Clients for the external scoring endpoint. The HTTP client speaks a
// minimal JSON protocol over POST:
//
//   /score    {"prompt": p, "candidates": [c…]} -> {"logprobs": [f…]}
//   /generate {"prompt": p}                     -> {"text": t}
//
// Transport failures (connect errors, non-2xx statuses) retry with
// exponential backoff up to a bounded attempt count, then raise
// ScorerUnavailable. Replies that parse but break the contract — wrong
// count, non-finite numbers, missing fields — raise ScorerProtocol
// immediately. The replay client serves recorded fixtures for offline
// tests and deterministic CI.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "leia/util.hpp"

namespace leia {

class ScorerClient {
public:
    virtual ~ScorerClient() = default;
    virtual std::vector<double> score(const std::string& prompt,
                                      const std::vector<std::string>& candidates) = 0;
    virtual std::string generate(const std::string& prompt) = 0;
};

struct HttpScorerOptions {
    int max_attempts = 4;
    int backoff_initial_ms = 100;  // doubles per retry
    int timeout_sec = 60;
};

class HttpScorer final : public ScorerClient {
public:
    explicit HttpScorer(std::string base_url, HttpScorerOptions options = {})
        : base_url_(std::move(base_url)), options_(options) {}

    std::vector<double> score(const std::string& prompt,
                              const std::vector<std::string>& candidates) override {
        if (candidates.empty()) throw Error("score: no candidates");
        nlohmann::json req{{"prompt", prompt}, {"candidates", candidates}};
        nlohmann::json resp = post("/score", req);
        auto it = resp.find("logprobs");
        if (it == resp.end() || !it->is_array())
            throw ScorerProtocol("scorer reply lacks a logprobs array");
        if (it->size() != candidates.size())
            throw ScorerProtocol("scorer returned " + std::to_string(it->size()) +
                                 " scores for " + std::to_string(candidates.size()) +
                                 " candidates");
        std::vector<double> out;
        out.reserve(it->size());
        for (const auto& v : *it) {
            if (!v.is_number()) throw ScorerProtocol("non-numeric score");
            double d = v.get<double>();
            if (!std::isfinite(d)) throw ScorerProtocol("non-finite score");
            out.push_back(d);
        }
        return out;
    }

    std::string generate(const std::string& prompt) override {
        nlohmann::json resp = post("/generate", nlohmann::json{{"prompt", prompt}});
        auto it = resp.find("text");
        if (it == resp.end() || !it->is_string())
            throw ScorerProtocol("scorer reply lacks a text field");
        return it->get<std::string>();
    }

private:
    // One client per request keeps concurrent calls independent.
    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        std::string payload = body.dump();
        int delay = options_.backoff_initial_ms;
        std::string last_error;
        for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
                delay *= 2;
            }
            httplib::Client cli(base_url_);
            cli.set_connection_timeout(options_.timeout_sec, 0);
            cli.set_read_timeout(options_.timeout_sec, 0);
            auto res = cli.Post(path, payload, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.is_object())
                throw ScorerProtocol("scorer reply is not a JSON object");
            return j;
        }
        throw ScorerUnavailable("scorer at " + base_url_ + " unreachable after " +
                                std::to_string(options_.max_attempts) +
                                " attempts (last: " + last_error + ")");
    }

    std::string base_url_;
    HttpScorerOptions options_;
};

// Replays recorded scorer traffic. Fixture lines:
//   {"prompt":…,"candidates":[…],"logprobs":[…]}
//   {"prompt":…,"text":…}
class ReplayScorer final : public ScorerClient {
public:
    explicit ReplayScorer(std::istream& fixture) {
        std::string line;
        uint64_t lineno = 0;
        while (std::getline(fixture, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw ParseError("bad replay fixture line " + std::to_string(lineno));
            if (j.contains("logprobs")) {
                scores_[score_key(j.at("prompt").get<std::string>(),
                                  j.at("candidates").get<std::vector<std::string>>())] =
                    j.at("logprobs").get<std::vector<double>>();
            } else if (j.contains("text")) {
                generations_[j.at("prompt").get<std::string>()] = j.at("text").get<std::string>();
            } else {
                throw ParseError("replay fixture line " + std::to_string(lineno) +
                                 " has neither logprobs nor text");
            }
        }
    }

    std::vector<double> score(const std::string& prompt,
                              const std::vector<std::string>& candidates) override {
        auto it = scores_.find(score_key(prompt, candidates));
        if (it == scores_.end()) throw Error("replay fixture has no recording for this request");
        if (it->second.size() != candidates.size())
            throw ScorerProtocol("replayed score count mismatch");
        return it->second;
    }

    std::string generate(const std::string& prompt) override {
        auto it = generations_.find(prompt);
        if (it == generations_.end())
            throw Error("replay fixture has no generation for this prompt");
        return it->second;
    }

private:
    static std::string score_key(const std::string& prompt,
                                 const std::vector<std::string>& candidates) {
        std::string key = prompt;
        for (const auto& c : candidates) {
            key.push_back('\x1f');
            key += c;
        }
        return key;
    }

    std::unordered_map<std::string, std::vector<double>> scores_;
    std::unordered_map<std::string, std::string> generations_;
};

}  // namespace leia

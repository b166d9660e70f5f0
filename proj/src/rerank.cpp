#include "skillrank/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {
using nlohmann::json;

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    const auto path_start =
        endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}
}  // namespace

std::vector<double> RerankProvider::scores(
    std::string_view query_text, const std::vector<std::string>& candidate_texts) const {
    std::vector<double> out;
    out.reserve(candidate_texts.size());
    for (const auto& text : candidate_texts) out.push_back(score(query_text, text));
    return out;
}

std::string build_rerank_prompt(std::string_view query_text, const Skill& skill,
                                const FieldCaps& caps, SkillFormat format) {
    std::string prompt =
        "<Instruct>: Given a task description, judge whether the skill document is "
        "relevant and useful for completing the task";
    prompt += "\n\n<Query>: ";
    prompt += query_text;
    prompt += "\n\n<Document>: ";
    prompt += flatten_skill(skill, format, caps);
    return prompt;
}

std::string build_judge_candidate(std::size_t number, const Skill& skill,
                                  const FieldCaps& caps, SkillFormat format) {
    std::string block = "[" + std::to_string(number) + "] Name: " + skill.name;
    block += "\nDescription: " + utf8_prefix(skill.description, caps.description_chars);
    if (format == SkillFormat::full) {
        block += "\nBody: " + utf8_prefix(skill.body, caps.body_chars);
    }
    return block;
}

std::string build_judge_user_message(std::string_view query_text,
                                     const std::vector<std::string>& candidate_blocks) {
    std::string message(query_text);
    for (const auto& block : candidate_blocks) {
        message += "\n\n";
        message += block;
    }
    return message;
}

std::optional<int> parse_judge_reply(std::string_view reply) {
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
            const bool negative = i > 0 && reply[i - 1] == '-';
            long value = 0;
            while (i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i]))) {
                value = value * 10 + (reply[i] - '0');
                if (value > 1000000) break;  // implausible candidate count
                ++i;
            }
            return static_cast<int>(negative ? -value : value);
        }
    }
    return std::nullopt;
}

Ranking rerank_scored(std::string_view query_text, const Ranking& candidates,
                      const RerankProvider& provider,
                      const std::vector<std::string>& candidate_texts) {
    if (candidates.empty()) throw ValidationError("rerank_scored: no candidates");
    if (candidate_texts.size() != candidates.size()) {
        throw ValidationError("rerank_scored: candidate texts and hits differ in length");
    }

    std::vector<double> scores;
    try {
        scores = provider.scores(query_text, candidate_texts);
    } catch (const ProviderError& e) {
        throw ProviderError("rerank_scored: provider '" + provider.name() +
                            "' failed for query '" + std::string(query_text.substr(0, 60)) +
                            "': " + e.what());
    }
    if (scores.size() != candidates.size()) {
        throw ProviderError("rerank_scored: provider returned " +
                            std::to_string(scores.size()) + " scores for " +
                            std::to_string(candidates.size()) + " candidates");
    }

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    Ranking out;
    out.query_id = candidates.query_id;
    out.hits.reserve(order.size());
    for (const std::size_t i : order) {
        out.hits.push_back({candidates.hits[i].skill_id, scores[i]});
    }
    return out;
}

JudgeResult rerank_judge(std::string_view query_text, const Ranking& candidates,
                         const JudgeProvider& judge,
                         const std::vector<std::string>& candidate_texts) {
    if (candidates.empty()) throw ValidationError("rerank_judge: no candidates");
    if (candidate_texts.size() != candidates.size()) {
        throw ValidationError("rerank_judge: candidate texts and hits differ in length");
    }

    JudgeResult result;
    result.ranking = candidates;

    std::optional<int> choice;
    try {
        choice = judge.choose(query_text, candidate_texts);
    } catch (const ProviderError&) {
        choice = std::nullopt;
    }
    if (!choice || *choice < 1 || static_cast<std::size_t>(*choice) > candidates.size()) {
        result.flagged = true;
        return result;
    }

    const auto picked = static_cast<std::size_t>(*choice - 1);
    if (picked > 0) {
        const ScoredHit chosen = result.ranking.hits[picked];
        result.ranking.hits.erase(result.ranking.hits.begin() +
                                  static_cast<std::ptrdiff_t>(picked));
        result.ranking.hits.insert(result.ranking.hits.begin(), chosen);
    }
    return result;
}

double LexicalOverlapScorer::score(std::string_view query_text,
                                   std::string_view candidate_text) const {
    const auto query_tokens = tokenize(query_text);
    if (query_tokens.empty()) return 0.0;
    const auto candidate_tokens = tokenize(candidate_text);
    const std::unordered_set<std::string> vocabulary(candidate_tokens.begin(),
                                                     candidate_tokens.end());
    std::size_t found = 0;
    for (const auto& token : query_tokens) found += vocabulary.count(token);
    return static_cast<double>(found) / static_cast<double>(query_tokens.size());
}

HttpRerankProvider::HttpRerankProvider(HttpRerankConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("http rerank provider: endpoint is required");
    }
}

double HttpRerankProvider::score(std::string_view query_text,
                                 std::string_view candidate_text) const {
    return scores(query_text, {std::string(candidate_text)}).front();
}

std::vector<double> HttpRerankProvider::scores(
    std::string_view query_text, const std::vector<std::string>& candidate_texts) const {
    const auto [host, prefix] = split_endpoint(config_.endpoint);
    httplib::Client client(host);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["query"] = std::string(query_text);
    body["documents"] = candidate_texts;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(prefix + config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("scores")) {
            last_error = "malformed response body";
            continue;
        }
        const auto& values = reply.at("scores");
        if (values.size() != candidate_texts.size()) {
            last_error = "score count mismatch";
            continue;
        }
        std::vector<double> out;
        out.reserve(values.size());
        for (const auto& v : values) out.push_back(v.get<double>());
        return out;
    }
    throw ProviderError("rerank service failed after " + std::to_string(config_.retries + 1) +
                        " attempts (" + last_error + ")");
}

ChatJudgeProvider::ChatJudgeProvider(ChatConfig config) : client_(std::move(config)) {}

std::string ChatJudgeProvider::name() const {
    return "chat-judge:" + client_.config().model;
}

std::optional<int> ChatJudgeProvider::choose(
    std::string_view query_text, const std::vector<std::string>& candidate_texts) const {
    const std::string reply = client_.complete(
        {{"system", std::string(kJudgeSystemPrompt)},
         {"user", build_judge_user_message(query_text, candidate_texts)}});
    return parse_judge_reply(reply);
}

}  // namespace skillrank

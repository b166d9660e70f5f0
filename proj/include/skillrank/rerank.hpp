#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillrank/chat.hpp"
#include "skillrank/corpus.hpp"
#include "skillrank/types.hpp"

namespace skillrank {

// Scores one (query, candidate) pair; higher = more relevant. Must be
// deterministic per pair within one run.
class RerankProvider {
public:
    virtual ~RerankProvider() = default;
    virtual std::string name() const = 0;
    virtual double score(std::string_view query_text, std::string_view candidate_text) const = 0;
    virtual std::vector<double> scores(std::string_view query_text,
                                       const std::vector<std::string>& candidate_texts) const;
};

// Listwise judge: picks the single best candidate (1-based index), or
// refuses (nullopt).
class JudgeProvider {
public:
    virtual ~JudgeProvider() = default;
    virtual std::string name() const = 0;
    virtual std::optional<int> choose(std::string_view query_text,
                                      const std::vector<std::string>& candidate_texts) const = 0;
};

// Three-block reranker input: <Instruct> line, <Query> block, <Document>
// block holding the candidate flattened with the reranker caps
// (description 500, body 2000).
std::string build_rerank_prompt(std::string_view query_text, const Skill& skill,
                                const FieldCaps& caps = kRerankerCaps,
                                SkillFormat format = SkillFormat::full);

inline constexpr std::string_view kJudgeSystemPrompt =
    "You are an expert at matching tasks to reusable skill definitions. Given a task "
    "query and a numbered list of candidate skills, identify the SINGLE most relevant "
    "skill that best solves the task.\n\n"
    "Respond with ONLY the number (e.g. '3') of the best matching skill, nothing else.";

// "[i] Name: ...\nDescription: ...\nBody: ..." block for one candidate,
// using the same field caps as the reranker.
std::string build_judge_candidate(std::size_t number, const Skill& skill,
                                  const FieldCaps& caps = kRerankerCaps,
                                  SkillFormat format = SkillFormat::full);

std::string build_judge_user_message(std::string_view query_text,
                                     const std::vector<std::string>& candidate_blocks);

// First integer token in the reply, or nullopt if there is none.
std::optional<int> parse_judge_reply(std::string_view reply);

// Candidates reordered by descending provider score; ties keep the input
// (encoder) order. Throws ProviderError naming the failing candidate.
Ranking rerank_scored(std::string_view query_text, const Ranking& candidates,
                      const RerankProvider& provider,
                      const std::vector<std::string>& candidate_texts);

struct JudgeResult {
    Ranking ranking;
    bool flagged = false;  // judge refused or answered out of range
};

// Moves the judged candidate to rank 1; everyone else keeps encoder order.
// Scores are carried over from the input.
JudgeResult rerank_judge(std::string_view query_text, const Ranking& candidates,
                         const JudgeProvider& judge,
                         const std::vector<std::string>& candidate_texts);

// Model-free scorer: fraction of query tokens present in the candidate.
class LexicalOverlapScorer : public RerankProvider {
public:
    std::string name() const override { return "lexical-overlap"; }
    double score(std::string_view query_text, std::string_view candidate_text) const override;
};

struct HttpRerankConfig {
    std::string endpoint;
    std::string path = "/rerank";
    int retries = 2;
    int timeout_seconds = 60;
    std::string api_key_env = "SKILLRANK_API_KEY";
};

// POSTs {"query": ..., "documents": [...]} and expects {"scores": [...]}.
class HttpRerankProvider : public RerankProvider {
public:
    explicit HttpRerankProvider(HttpRerankConfig config);
    std::string name() const override { return "http:" + config_.endpoint + config_.path; }
    double score(std::string_view query_text, std::string_view candidate_text) const override;
    std::vector<double> scores(std::string_view query_text,
                               const std::vector<std::string>& candidate_texts) const override;

private:
    HttpRerankConfig config_;
};

// Judge backed by a chat-completion service, using the judge prompts above.
class ChatJudgeProvider : public JudgeProvider {
public:
    explicit ChatJudgeProvider(ChatConfig config);
    std::string name() const override;
    std::optional<int> choose(std::string_view query_text,
                              const std::vector<std::string>& candidate_texts) const override;

private:
    ChatClient client_;
};

}  // namespace skillrank

#include "skillrank/pipeline.hpp"

namespace skillrank {

namespace {

// Candidate skills resolved from the pool, in ranking order.
std::vector<const Skill*> resolve_candidates(const SkillPool& pool, const IdIndex& by_id,
                                             const Ranking& candidates) {
    std::vector<const Skill*> skills;
    skills.reserve(candidates.size());
    for (const auto& hit : candidates.hits) {
        const auto it = by_id.find(hit.skill_id);
        if (it == by_id.end()) {
            throw ValidationError("rerank: candidate '" + hit.skill_id +
                                  "' is not in the pool");
        }
        skills.push_back(&pool.skills[it->second]);
    }
    return skills;
}

}  // namespace

ScoredRerankStage::ScoredRerankStage(const SkillPool& pool, const RerankProvider& provider,
                                     FieldCaps caps, SkillFormat format)
    : pool_(pool), by_id_(build_id_index(pool)), provider_(provider), caps_(caps),
      format_(format) {}

Ranking ScoredRerankStage::apply(std::string_view query_text, const Ranking& candidates,
                                 bool& flagged) const {
    flagged = false;
    const auto skills = resolve_candidates(pool_, by_id_, candidates);
    std::vector<std::string> texts;
    texts.reserve(skills.size());
    for (const Skill* skill : skills) {
        texts.push_back(flatten_skill(*skill, format_, caps_));
    }
    return rerank_scored(query_text, candidates, provider_, texts);
}

JudgeRerankStage::JudgeRerankStage(const SkillPool& pool, const JudgeProvider& judge,
                                   FieldCaps caps, SkillFormat format)
    : pool_(pool), by_id_(build_id_index(pool)), judge_(judge), caps_(caps),
      format_(format) {}

Ranking JudgeRerankStage::apply(std::string_view query_text, const Ranking& candidates,
                                bool& flagged) const {
    const auto skills = resolve_candidates(pool_, by_id_, candidates);
    std::vector<std::string> blocks;
    blocks.reserve(skills.size());
    for (std::size_t i = 0; i < skills.size(); ++i) {
        blocks.push_back(build_judge_candidate(i + 1, *skills[i], caps_, format_));
    }
    JudgeResult result = rerank_judge(query_text, candidates, judge_, blocks);
    flagged = result.flagged;
    return std::move(result.ranking);
}

RouteResult route(std::string_view query_text, const Retriever& retriever,
                  const RerankStage* reranker, std::size_t k, std::string query_id) {
    if (k == 0) throw ValidationError("route: k must be >= 1");
    RouteResult result;
    result.ranking = retriever.search(query_text, k);
    result.ranking.query_id = query_id;
    if (reranker != nullptr && !result.ranking.empty()) {
        result.ranking = reranker->apply(query_text, result.ranking, result.judge_flagged);
        result.ranking.query_id = std::move(query_id);
    }
    return result;
}

}  // namespace skillrank

#include "skillrank/forge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <set>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {

// Deterministic across platforms (std::sample and the distributions are
// not): partial Fisher-Yates driven directly by the engine.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> candidates,
                                                    std::size_t count,
                                                    std::mt19937_64& rng) {
    const std::size_t take = std::min(count, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
                                      rng() % static_cast<std::uint64_t>(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(take);
    return candidates;
}

// Word-level 3-gram set; short texts contribute one gram for the whole
// sequence.
std::set<std::string> gram_set(std::string_view text) {
    const std::string lowered = to_lower(text);
    const auto words = split_words(lowered);
    std::set<std::string> grams;
    if (words.empty()) return grams;
    if (words.size() < 3) {
        std::string gram(words[0]);
        for (std::size_t i = 1; i < words.size(); ++i) {
            gram += ' ';
            gram += words[i];
        }
        grams.insert(std::move(gram));
        return grams;
    }
    for (std::size_t i = 0; i + 3 <= words.size(); ++i) {
        std::string gram(words[i]);
        gram += ' ';
        gram += words[i + 1];
        gram += ' ';
        gram += words[i + 2];
        grams.insert(std::move(gram));
    }
    return grams;
}

// Whole-token, case-insensitive occurrence; boundaries are non-alphanumeric.
bool contains_word_ci(std::string_view haystack, std::string_view token) {
    const std::string h = to_lower(haystack);
    const std::string t = to_lower(token);
    if (t.empty()) return false;
    std::size_t pos = 0;
    while ((pos = h.find(t, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 || !std::isalnum(static_cast<unsigned char>(h[pos - 1]));
        const std::size_t end = pos + t.size();
        const bool right_ok =
            end == h.size() || !std::isalnum(static_cast<unsigned char>(h[end]));
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

// Which filter layer removes a candidate negative, if any.
enum class FilterLayer { none, name, trigram, embedding };

FilterLayer classify_false_negative(const Skill& negative,
                                    const std::vector<const Skill*>& gt_skills,
                                    const VectorIndex& vectors,
                                    const FilterThresholds& thresholds) {
    // Name layer: exact name match with any ground-truth skill.
    for (const Skill* gt : gt_skills) {
        if (negative.name == gt->name) return FilterLayer::name;
    }
    for (const Skill* gt : gt_skills) {
        if (trigram_jaccard(negative.body, gt->body) > thresholds.trigram) {
            return FilterLayer::trigram;
        }
    }
    const auto neg_row = vectors.find(negative.id);
    if (!neg_row) {
        throw Error("false-negative filter: no embedding for skill '" + negative.id + "'");
    }
    for (const Skill* gt : gt_skills) {
        const auto gt_row = vectors.find(gt->id);
        if (!gt_row) {
            throw Error("false-negative filter: no embedding for skill '" + gt->id + "'");
        }
        const float cosine =
            vectors.rows().row(static_cast<Eigen::Index>(*neg_row))
                .dot(vectors.rows().row(static_cast<Eigen::Index>(*gt_row)));
        if (cosine > thresholds.cosine) return FilterLayer::embedding;
    }
    return FilterLayer::none;
}

void count_layer(FilterReport& report, FilterLayer layer) {
    switch (layer) {
        case FilterLayer::name: ++report.removed_by_name; break;
        case FilterLayer::trigram: ++report.removed_by_trigram; break;
        case FilterLayer::embedding: ++report.removed_by_embedding; break;
        case FilterLayer::none: break;
    }
}

}  // namespace

std::string_view negative_source_name(NegativeSource source) {
    switch (source) {
        case NegativeSource::semantic: return "semantic";
        case NegativeSource::lexical: return "lexical";
        case NegativeSource::taxonomy: return "taxonomy";
        case NegativeSource::random: return "random";
    }
    return "random";
}

NegativeSource negative_source_from_name(std::string_view name) {
    if (name == "semantic") return NegativeSource::semantic;
    if (name == "lexical") return NegativeSource::lexical;
    if (name == "taxonomy") return NegativeSource::taxonomy;
    if (name == "random") return NegativeSource::random;
    throw ValidationError("unknown negative source '" + std::string(name) + "'");
}

NegativeMiner::NegativeMiner(const SkillPool& pool, const VectorIndex& vectors,
                             const Bm25Index& bm25, const EmbeddingProvider& provider,
                             MinerConfig config, std::unordered_set<std::string> deny_list)
    : pool_(pool), vectors_(vectors), bm25_(bm25), provider_(provider),
      config_(std::move(config)), deny_list_(std::move(deny_list)),
      by_id_(build_id_index(pool)) {
    // Lexical scoring addresses BM25 documents by pool position, so the
    // index must describe this exact pool.
    if (bm25_.doc_count() != pool_.size()) {
        throw ValidationError("mine_negatives: bm25 index covers " +
                              std::to_string(bm25_.doc_count()) + " documents, pool has " +
                              std::to_string(pool_.size()));
    }
    for (std::size_t i = 0; i < pool_.size(); ++i) {
        if (bm25_.ids()[i] != pool_.skills[i].id) {
            throw ValidationError("mine_negatives: bm25 index order diverges from the pool "
                                  "at position " +
                                  std::to_string(i));
        }
    }
    if (vectors_.size() != pool_.size()) {
        throw ValidationError("mine_negatives: vector index covers " +
                              std::to_string(vectors_.size()) + " skills, pool has " +
                              std::to_string(pool_.size()));
    }

    std::map<std::string, std::vector<std::size_t>> grouped;
    for (std::size_t i = 0; i < pool_.skills.size(); ++i) {
        grouped[pool_.skills[i].category].push_back(i);
    }
    by_category_.assign(grouped.begin(), grouped.end());
}

TrainingExample NegativeMiner::mine(std::string_view query_text, std::string_view positive_id,
                                    std::uint64_t seed, std::string query_id) const {
    const auto positive_it = by_id_.find(std::string(positive_id));
    if (positive_it == by_id_.end()) {
        throw ValidationError("mine_negatives: positive '" + std::string(positive_id) +
                              "' is not in the pool");
    }
    const Skill& positive = pool_.skills[positive_it->second];
    const std::size_t need = config_.mix.total();
    if (pool_.size() < need + 1) {
        throw ValidationError("mine_negatives: pool too small for " + std::to_string(need) +
                              " negatives");
    }

    std::mt19937_64 rng(seed);
    std::unordered_set<std::string> picked;
    picked.insert(positive.id);

    auto eligible = [&](std::size_t index) {
        const Skill& skill = pool_.skills[index];
        return picked.count(skill.id) == 0 && deny_list_.count(skill.id) == 0;
    };

    // Cosine neighborhood of the query, shared by the semantic and lexical
    // sources.
    const std::string prepared =
        config_.instruction.apply(truncate_query(query_text, config_.caps));
    const Vector query_vec = provider_.embed_query(prepared);
    const Ranking neighbors = vectors_.search_exact(query_vec, config_.neighborhood);

    std::vector<std::size_t> neighborhood;
    neighborhood.reserve(neighbors.size());
    for (const auto& hit : neighbors.hits) {
        const auto it = by_id_.find(hit.skill_id);
        if (it != by_id_.end()) neighborhood.push_back(it->second);
    }

    TrainingExample example;
    example.query_id = std::move(query_id);
    example.query_text = std::string(query_text);
    example.positive_id = positive.id;

    auto take = [&](const std::vector<std::size_t>& indexes, NegativeSource source) {
        for (const std::size_t index : indexes) {
            example.negatives.push_back({pool_.skills[index].id, source});
            picked.insert(pool_.skills[index].id);
        }
    };

    // Per-source candidate pools, computed lazily in backfill order.
    auto semantic_candidates = [&]() {
        std::vector<std::size_t> out;
        for (const std::size_t index : neighborhood) {
            if (eligible(index)) out.push_back(index);
        }
        return out;
    };
    auto lexical_candidates = [&]() {
        // BM25 over the same cosine neighborhood, best lexical match first.
        const auto query_tokens = tokenize(query_text);
        std::vector<std::pair<double, std::size_t>> scored;
        for (const std::size_t index : neighborhood) {
            if (!eligible(index)) continue;
            const double score = bm25_.score_document(query_tokens, index);
            if (score > 0.0) scored.push_back({score, index});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<std::size_t> out;
        out.reserve(scored.size());
        for (const auto& [score, index] : scored) out.push_back(index);
        return out;
    };
    auto taxonomy_candidates = [&]() {
        std::vector<std::size_t> out;
        for (const auto& [category, indexes] : by_category_) {
            if (category != positive.category) continue;
            for (const std::size_t index : indexes) {
                if (eligible(index) && pool_.skills[index].name != positive.name) {
                    out.push_back(index);
                }
            }
        }
        return out;
    };
    auto random_candidates = [&]() {
        std::vector<std::size_t> out;
        for (const auto& [category, indexes] : by_category_) {
            if (category == positive.category) continue;
            for (const std::size_t index : indexes) {
                if (eligible(index)) out.push_back(index);
            }
        }
        return out;
    };

    struct SourcePlan {
        NegativeSource source;
        std::size_t want;
        bool ranked;  // ranked sources take the head, sampled sources draw
    };
    const SourcePlan plan[] = {
        {NegativeSource::semantic, config_.mix.semantic, false},
        {NegativeSource::lexical, config_.mix.lexical, true},
        {NegativeSource::taxonomy, config_.mix.taxonomy, false},
        {NegativeSource::random, config_.mix.random, false},
    };

    auto candidates_for = [&](NegativeSource source) {
        switch (source) {
            case NegativeSource::semantic: return semantic_candidates();
            case NegativeSource::lexical: return lexical_candidates();
            case NegativeSource::taxonomy: return taxonomy_candidates();
            case NegativeSource::random: return random_candidates();
        }
        return std::vector<std::size_t>{};
    };

    std::size_t deficit = 0;
    for (const SourcePlan& step : plan) {
        const std::size_t want = step.want + deficit;  // earlier deficits roll forward
        auto candidates = candidates_for(step.source);
        std::vector<std::size_t> chosen;
        if (step.ranked) {
            chosen.assign(candidates.begin(),
                          candidates.begin() +
                              static_cast<std::ptrdiff_t>(std::min(want, candidates.size())));
        } else {
            chosen = sample_without_replacement(std::move(candidates), want, rng);
        }
        take(chosen, step.source);
        deficit = want - chosen.size();
    }
    if (deficit > 0) {
        // Every source ran dry; fall back to any eligible skill.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (eligible(i)) rest.push_back(i);
        }
        take(sample_without_replacement(std::move(rest), deficit, rng),
             NegativeSource::random);
    }
    if (example.negatives.size() != need) {
        throw ValidationError("mine_negatives: only " +
                              std::to_string(example.negatives.size()) + " of " +
                              std::to_string(need) + " negatives available");
    }

    // The mix was met exactly iff nothing rolled forward.
    std::size_t counts[4] = {0, 0, 0, 0};
    for (const Negative& negative : example.negatives) {
        ++counts[static_cast<int>(negative.source)];
    }
    example.flagged = counts[0] != config_.mix.semantic || counts[1] != config_.mix.lexical ||
                      counts[2] != config_.mix.taxonomy || counts[3] != config_.mix.random;
    return example;
}

double trigram_jaccard(std::string_view text_a, std::string_view text_b) {
    const auto grams_a = gram_set(text_a);
    const auto grams_b = gram_set(text_b);
    if (grams_a.empty() || grams_b.empty()) return 0.0;
    std::size_t intersection = 0;
    for (const auto& gram : grams_a) intersection += grams_b.count(gram);
    const std::size_t unions = grams_a.size() + grams_b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

FilterResult filter_false_negatives(const std::vector<TrainingExample>& examples,
                                    const SkillPool& pool, const GtLookup& gt_lookup,
                                    const VectorIndex& vectors,
                                    const FilterThresholds& thresholds) {
    const IdIndex by_id = build_id_index(pool);
    auto skill_for = [&](const std::string& id) -> const Skill& {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ValidationError("false-negative filter: skill '" + id +
                                  "' is not in the pool");
        }
        return pool.skills[it->second];
    };

    FilterResult result;
    result.examples.reserve(examples.size());
    for (const TrainingExample& example : examples) {
        std::vector<const Skill*> gt_skills;
        const auto it =
            example.query_id.empty() ? gt_lookup.end() : gt_lookup.find(example.query_id);
        if (it != gt_lookup.end()) {
            for (const auto& id : it->second) gt_skills.push_back(&skill_for(id));
        } else {
            gt_skills.push_back(&skill_for(example.positive_id));
        }

        TrainingExample kept = example;
        kept.negatives.clear();
        for (const Negative& negative : example.negatives) {
            ++result.report.total_seen;
            const FilterLayer layer = classify_false_negative(
                skill_for(negative.skill_id), gt_skills, vectors, thresholds);
            if (layer == FilterLayer::none) {
                kept.negatives.push_back(negative);
            } else {
                count_layer(result.report, layer);
            }
        }
        result.examples.push_back(std::move(kept));
    }
    return result;
}

ListwiseBuildResult build_listwise_groups(const std::vector<TaskQuery>& queries,
                                          const Retriever& retriever, std::size_t group_size,
                                          const SkillPool& pool, const VectorIndex& vectors,
                                          const FilterThresholds& thresholds) {
    if (group_size == 0) throw ValidationError("build_listwise_groups: group size must be >= 1");
    const IdIndex by_id = build_id_index(pool);

    ListwiseBuildResult result;
    for (const TaskQuery& query : queries) {
        std::vector<const Skill*> gt_skills;
        std::unordered_set<std::string> gt_ids(query.gt_ids.begin(), query.gt_ids.end());
        for (const auto& id : gt_ids) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ValidationError("build_listwise_groups: GT skill '" + id +
                                      "' is not in the pool");
            }
            gt_skills.push_back(&pool.skills[it->second]);
        }

        // Retrieve deep enough to refill what the filter removes.
        const std::size_t fetch = std::min(pool.size(), group_size * 3);
        const Ranking retrieved = retriever.search(query.text, fetch);

        ListwiseGroup group;
        group.query_id = query.id;
        group.query_text = query.text;
        bool has_positive = false;
        for (const auto& hit : retrieved.hits) {
            if (group.candidates.size() == group_size) break;
            ++result.filter.total_seen;
            if (gt_ids.count(hit.skill_id)) {
                group.candidates.push_back({hit.skill_id, 1});
                has_positive = true;
                continue;
            }
            const auto it = by_id.find(hit.skill_id);
            if (it == by_id.end()) {
                throw ValidationError("build_listwise_groups: candidate '" + hit.skill_id +
                                      "' is not in the pool");
            }
            const FilterLayer layer = classify_false_negative(pool.skills[it->second],
                                                              gt_skills, vectors, thresholds);
            if (layer == FilterLayer::none) {
                group.candidates.push_back({hit.skill_id, 0});
            } else {
                count_layer(result.filter, layer);
                ++result.replaced;
            }
        }

        if (group.candidates.size() < group_size) {
            ++result.dropped_short;
            continue;
        }
        if (!has_positive) {
            ++result.dropped_no_positive;
            continue;
        }
        result.groups.push_back(std::move(group));
    }
    return result;
}

std::string_view query_style_name(QueryStyle style) {
    switch (style) {
        case QueryStyle::scenario: return "scenario";
        case QueryStyle::developer: return "developer";
        case QueryStyle::indirect: return "indirect";
    }
    return "scenario";
}

QueryStyle query_style_from_name(std::string_view name) {
    if (name == "scenario") return QueryStyle::scenario;
    if (name == "developer") return QueryStyle::developer;
    if (name == "indirect") return QueryStyle::indirect;
    throw ValidationError("unknown query style '" + std::string(name) + "'");
}

LengthBounds style_bounds(QueryStyle style) {
    switch (style) {
        case QueryStyle::scenario: return {80, 250};
        case QueryStyle::developer: return {40, 120};
        case QueryStyle::indirect: return {50, 180};
    }
    return {80, 250};
}

std::string_view qc_kind_name(QCKind kind) {
    switch (kind) {
        case QCKind::name_leak: return "name_leak";
        case QCKind::cli_leak: return "cli_leak";
        case QCKind::length: return "length";
    }
    return "length";
}

std::vector<std::string> extract_cli_tokens(std::string_view body) {
    std::vector<std::string> tokens;
    std::set<std::string> seen;
    bool in_fence = false;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const std::size_t end = body.find('\n', pos);
        std::string_view line =
            body.substr(pos, (end == std::string_view::npos ? body.size() : end) - pos);
        pos = end == std::string_view::npos ? body.size() + 1 : end + 1;

        std::string_view trimmed = line;
        while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t')) {
            trimmed.remove_prefix(1);
        }
        if (trimmed.substr(0, 3) == "```") {
            in_fence = !in_fence;
            continue;
        }
        if (!in_fence || trimmed.empty()) continue;

        // Shell prompt markers are not commands.
        while (!trimmed.empty() &&
               (trimmed.front() == '$' || trimmed.front() == '#' || trimmed.front() == '>' ||
                trimmed.front() == ' ' || trimmed.front() == '\t')) {
            trimmed.remove_prefix(1);
        }
        const std::size_t split = trimmed.find_first_of(" \t");
        std::string token = to_lower(
            trimmed.substr(0, split == std::string_view::npos ? trimmed.size() : split));
        if (token.size() < 3) continue;
        const bool has_letter = std::any_of(token.begin(), token.end(), [](unsigned char c) {
            return std::isalpha(c) != 0;
        });
        if (!has_letter) continue;
        if (seen.insert(token).second) tokens.push_back(std::move(token));
    }
    return tokens;
}

std::vector<QCViolation> qc_check(std::string_view query_text, const Skill& skill,
                                  QueryStyle style) {
    std::vector<QCViolation> violations;

    if (!skill.name.empty() && contains_ci(query_text, skill.name)) {
        violations.push_back({QCKind::name_leak, "skill name '" + skill.name + "' in query"});
    }

    std::string leaked;
    for (const auto& token : extract_cli_tokens(skill.body)) {
        if (contains_word_ci(query_text, token)) {
            if (!leaked.empty()) leaked += ", ";
            leaked += token;
        }
    }
    if (!leaked.empty()) {
        violations.push_back({QCKind::cli_leak, "command tokens in query: " + leaked});
    }

    const LengthBounds bounds = style_bounds(style);
    const std::size_t words = word_count(query_text);
    if (words < bounds.min_words || words > bounds.max_words) {
        violations.push_back({QCKind::length,
                              std::to_string(words) + " words outside [" +
                                  std::to_string(bounds.min_words) + ", " +
                                  std::to_string(bounds.max_words) + "] for style '" +
                                  std::string(query_style_name(style)) + "'"});
    }
    return violations;
}

ChatEquivalenceJudge::ChatEquivalenceJudge(ChatConfig config) : client_(std::move(config)) {}

std::string ChatEquivalenceJudge::name() const {
    return "chat-equivalence:" + client_.config().model;
}

std::optional<bool> ChatEquivalenceJudge::equivalent(const Skill& gt,
                                                     const Skill& candidate) const {
    auto render = [](const Skill& skill) {
        return "name: " + skill.name + "\ndescription: " +
               utf8_prefix(skill.description, 500) + "\nbody:\n" +
               utf8_prefix(skill.body, 2000);
    };
    const std::string system =
        "You compare two skill documents for a coding agent platform and decide whether "
        "they provide functionally equivalent capabilities. Answer with exactly one word: "
        "'equivalent' or 'distinct'.";
    const std::string user = "Skill A:\n" + render(gt) + "\n\nSkill B:\n" + render(candidate) +
                             "\n\nAre these two skills functionally equivalent?";
    std::string reply;
    try {
        reply = to_lower(client_.complete({{"system", system}, {"user", user}}));
    } catch (const ProviderError&) {
        return std::nullopt;
    }
    if (reply.find("distinct") != std::string::npos) return false;
    if (reply.find("equivalent") != std::string::npos) return true;
    return std::nullopt;
}

FunctionalDedupResult remove_functional_duplicates(const SkillPool& pool,
                                                   const std::vector<std::string>& gt_skills,
                                                   const Bm25Index& bm25,
                                                   const EquivalenceJudge& judge,
                                                   std::size_t top_n) {
    const IdIndex by_id = build_id_index(pool);
    const std::unordered_set<std::string> protected_ids(gt_skills.begin(), gt_skills.end());

    FunctionalDedupResult result;
    std::unordered_set<std::string> removed_ids;
    for (const auto& gt_id : gt_skills) {
        const auto it = by_id.find(gt_id);
        if (it == by_id.end()) {
            throw ValidationError("functional dedup: GT skill '" + gt_id +
                                  "' is not in the pool");
        }
        const Skill& gt = pool.skills[it->second];
        const std::string query_text = gt.name + " | " + gt.description + " | " + gt.body;
        const Ranking neighbors = bm25.search(query_text, top_n + protected_ids.size() + 1);

        std::size_t judged = 0;
        for (const auto& hit : neighbors.hits) {
            if (judged == top_n) break;
            if (protected_ids.count(hit.skill_id)) continue;  // never remove ground truth
            ++judged;
            if (removed_ids.count(hit.skill_id)) continue;
            const auto candidate_it = by_id.find(hit.skill_id);
            const std::optional<bool> verdict =
                judge.equivalent(gt, pool.skills[candidate_it->second]);
            if (!verdict.has_value()) {
                result.skipped.push_back({gt_id, hit.skill_id});
            } else if (*verdict) {
                removed_ids.insert(hit.skill_id);
                result.removed.push_back({gt_id, hit.skill_id});
            }
        }
    }

    result.pool.tier = pool.tier;
    for (const Skill& skill : pool.skills) {
        if (!removed_ids.count(skill.id)) result.pool.skills.push_back(skill);
    }
    return result;
}

}  // namespace skillrank

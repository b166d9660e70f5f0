#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skillrank/bm25.hpp"
#include "skillrank/chat.hpp"
#include "skillrank/corpus.hpp"
#include "skillrank/metrics.hpp"
#include "skillrank/pipeline.hpp"
#include "skillrank/types.hpp"
#include "skillrank/vector_index.hpp"

namespace skillrank {

enum class NegativeSource { semantic, lexical, taxonomy, random };

std::string_view negative_source_name(NegativeSource source);
NegativeSource negative_source_from_name(std::string_view name);

struct Negative {
    std::string skill_id;
    NegativeSource source = NegativeSource::random;
};

// One unit of contrastive supervision: a query, its positive skill, and
// source-tagged hard negatives.
struct TrainingExample {
    std::string query_id;  // optional; empty when the query has no id
    std::string query_text;
    std::string positive_id;
    std::vector<Negative> negatives;
    bool flagged = false;  // a source ran dry and was backfilled
};

// Negatives per source: semantic neighbors, lexical (BM25) confounders,
// same-category distractors, and one easy random negative.
struct NegativeMix {
    std::size_t semantic = 4;
    std::size_t lexical = 3;
    std::size_t taxonomy = 2;
    std::size_t random = 1;

    std::size_t total() const { return semantic + lexical + taxonomy + random; }
};

struct MinerConfig {
    NegativeMix mix;
    std::size_t neighborhood = 50;  // cosine top-N candidate window
    QueryInstruction instruction;
    FieldCaps caps = kEncoderCaps;
};

// Multi-source hard-negative mining over one pool. Sampling is seeded per
// call; the same seed reproduces the example byte for byte.
class NegativeMiner {
public:
    // `deny_list` holds skill ids excluded from supervision entirely
    // (e.g. benchmark-labeled skills).
    NegativeMiner(const SkillPool& pool, const VectorIndex& vectors, const Bm25Index& bm25,
                  const EmbeddingProvider& provider, MinerConfig config = {},
                  std::unordered_set<std::string> deny_list = {});

    TrainingExample mine(std::string_view query_text, std::string_view positive_id,
                         std::uint64_t seed, std::string query_id = {}) const;

private:
    const SkillPool& pool_;
    const VectorIndex& vectors_;
    const Bm25Index& bm25_;
    const EmbeddingProvider& provider_;
    MinerConfig config_;
    std::unordered_set<std::string> deny_list_;
    IdIndex by_id_;
    // category -> skill indexes in pool order, categories sorted, so every
    // draw is reproducible.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> by_category_;
};

// Jaccard similarity of word-3-gram sets after lowercasing and whitespace
// tokenization. Texts shorter than 3 words contribute their full token
// sequence as one gram; an empty text is dissimilar to everything.
double trigram_jaccard(std::string_view text_a, std::string_view text_b);

struct FilterThresholds {
    double trigram = 0.6;
    double cosine = 0.92;
};

// Per-layer removal counts; layers run name -> trigram -> embedding and a
// pair removed early is never re-counted later.
struct FilterReport {
    std::size_t removed_by_name = 0;
    std::size_t removed_by_trigram = 0;
    std::size_t removed_by_embedding = 0;
    std::size_t total_seen = 0;

    std::size_t total_removed() const {
        return removed_by_name + removed_by_trigram + removed_by_embedding;
    }
};

// query_id -> ground-truth skill ids. Examples whose query_id is absent (or
// empty) fall back to {positive_id} as the ground truth.
using GtLookup = std::unordered_map<std::string, std::vector<std::string>>;

struct FilterResult {
    std::vector<TrainingExample> examples;
    FilterReport report;
};

// Drops mined negatives that are functionally the ground truth: same name,
// near-duplicate body (trigram Jaccard > 0.6), or embedding cosine > 0.92.
// Embeddings resolve through `vectors` by skill id; a missing embedding is
// an error naming the skill.
FilterResult filter_false_negatives(const std::vector<TrainingExample>& examples,
                                    const SkillPool& pool, const GtLookup& gt_lookup,
                                    const VectorIndex& vectors,
                                    const FilterThresholds& thresholds = {});

struct LabeledCandidate {
    std::string skill_id;
    int label = 0;  // 1 iff ground truth for the query
};

// Fixed-size candidate list with binary relevance labels for listwise
// reranker training.
struct ListwiseGroup {
    std::string query_id;
    std::string query_text;
    std::vector<LabeledCandidate> candidates;
};

struct ListwiseBuildResult {
    std::vector<ListwiseGroup> groups;
    std::size_t dropped_no_positive = 0;
    std::size_t dropped_short = 0;  // pool exhausted before refilling to K
    std::size_t replaced = 0;       // filtered members replaced by next candidates
    FilterReport filter;
};

// Labels each query's retriever candidates against its gt_ids, applies the
// false-negative filter to the negatives, and refills from the next ranked
// candidates so every retained group has exactly `group_size` members and
// at least one positive.
ListwiseBuildResult build_listwise_groups(const std::vector<TaskQuery>& queries,
                                          const Retriever& retriever, std::size_t group_size,
                                          const SkillPool& pool, const VectorIndex& vectors,
                                          const FilterThresholds& thresholds = {});

enum class QueryStyle { scenario, developer, indirect };

std::string_view query_style_name(QueryStyle style);
QueryStyle query_style_from_name(std::string_view name);

struct LengthBounds {
    std::size_t min_words = 0;
    std::size_t max_words = 0;
};

// scenario 80-250, developer 40-120, indirect 50-180 words.
LengthBounds style_bounds(QueryStyle style);

enum class QCKind { name_leak, cli_leak, length };

std::string_view qc_kind_name(QCKind kind);

struct QCViolation {
    QCKind kind;
    std::string detail;
};

// Command tokens from fenced code regions of a skill body: the first token
// of each non-empty line, shell prompt markers stripped, at least three
// characters with at least one letter.
std::vector<std::string> extract_cli_tokens(std::string_view body);

// Checks one generated query against its source skill: skill-name leakage
// (case-insensitive substring), CLI command-name leakage, and style length
// bounds.
std::vector<QCViolation> qc_check(std::string_view query_text, const Skill& skill,
                                  QueryStyle style);

// Pairwise functional-equivalence call; nullopt = judge failure, in which
// case the pair is skipped and flagged, never silently removed.
class EquivalenceJudge {
public:
    virtual ~EquivalenceJudge() = default;
    virtual std::string name() const = 0;
    virtual std::optional<bool> equivalent(const Skill& gt, const Skill& candidate) const = 0;
};

// Chat-backed equivalence judge answering "equivalent" / "distinct".
class ChatEquivalenceJudge : public EquivalenceJudge {
public:
    explicit ChatEquivalenceJudge(ChatConfig config);
    std::string name() const override;
    std::optional<bool> equivalent(const Skill& gt, const Skill& candidate) const override;

private:
    ChatClient client_;
};

struct RemovedPair {
    std::string gt_id;
    std::string removed_id;
};

struct FunctionalDedupResult {
    SkillPool pool;
    std::vector<RemovedPair> removed;
    std::vector<RemovedPair> skipped;  // judge failures, flagged for review
};

// For each GT skill, judges its BM25 top-`top_n` pool neighbors for
// functional equivalence and removes the equivalents. GT skills themselves
// are never removed.
FunctionalDedupResult remove_functional_duplicates(const SkillPool& pool,
                                                   const std::vector<std::string>& gt_skills,
                                                   const Bm25Index& bm25,
                                                   const EquivalenceJudge& judge,
                                                   std::size_t top_n = 5);

}  // namespace skillrank

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skillrank/corpus.hpp"
#include "skillrank/pipeline.hpp"
#include "skillrank/types.hpp"

namespace skillrank {

// Evaluation/training query with its ground-truth skill set and strata labels.
struct TaskQuery {
    std::string id;
    std::string text;
    std::vector<std::string> gt_ids;
    std::string tier;        // "easy" / "hard" / "" when untiered
    std::string difficulty;  // free-form label, "" when absent
};

struct QueryRelevance {
    std::string query_id;
    std::unordered_set<std::string> gt_ids;
    std::string tier;
    std::string difficulty;

    bool single_skill() const { return gt_ids.size() == 1; }
};

// Insertion-ordered so every aggregation folds deterministically.
class RelevanceSet {
public:
    RelevanceSet() = default;
    static RelevanceSet from_queries(const std::vector<TaskQuery>& queries);

    void add(QueryRelevance relevance);
    const QueryRelevance* find(std::string_view query_id) const;
    const std::vector<QueryRelevance>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<QueryRelevance> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// --- per-query metrics ---------------------------------------------------

// 1 iff any ground-truth skill sits at rank 1. Empty rankings score 0 and
// are flagged by evaluate_run rather than rejected.
int hit_at_1(const Ranking& ranking, const std::unordered_set<std::string>& gt);

// Reciprocal rank of the best-ranked ground-truth skill within the top 10.
double mrr_at_10(const Ranking& ranking, const std::unordered_set<std::string>& gt);

// |gt intersect top-K| / |gt|; a ranking shorter than K uses its full length.
double recall_at_k(const Ranking& ranking, const std::unordered_set<std::string>& gt,
                   std::size_t k);

// 1 iff the entire ground-truth set appears in the top 10.
int fc_at_10(const Ranking& ranking, const std::unordered_set<std::string>& gt);

// --- aggregation ----------------------------------------------------------

struct MetricValues {
    double hit1 = 0.0;
    double mrr10 = 0.0;
    double r10 = 0.0;
    double r20 = 0.0;
    double r50 = 0.0;
    double fc10 = 0.0;
    std::size_t count = 0;
};

struct MetricsReport {
    MetricValues overall;
    // Stratum key -> unweighted per-query mean, e.g. "tier=easy",
    // "skills=multi", "difficulty=hard", "desc_quartile=Q2".
    std::map<std::string, MetricValues> strata;
    // Mean of the easy and hard tier rows, present when both exist.
    std::optional<MetricValues> tier_average;
    std::vector<std::string> missing_query_ids;   // in relevance, not in run
    std::vector<std::string> empty_ranking_ids;   // scored all-zero, flagged
    // Metric horizon ("r10"/"r20"/"r50") -> queries whose ranking was
    // shorter than the horizon; mirrors the '--'-style marked cells.
    std::map<std::string, std::size_t> depth_limited;
};

// Extra stratum labels per query id (e.g. description quartiles).
using StrataLabels = std::unordered_map<std::string, std::vector<std::string>>;

// Unweighted per-query means per stratum and overall. Every ranking's
// query_id must exist in `relevance`; relevance entries without rankings are
// reported in missing_query_ids, never silently skipped.
MetricsReport evaluate_run(const std::vector<Ranking>& rankings,
                           const RelevanceSet& relevance,
                           const StrataLabels* extra_strata = nullptr);

struct Decomposition {
    std::size_t both_correct = 0;
    std::size_t fixed = 0;     // encoder missed rank 1, pipeline hit
    std::size_t degraded = 0;  // encoder hit rank 1, pipeline missed
    std::size_t both_missed = 0;

    std::size_t total() const { return both_correct + fixed + degraded + both_missed; }
    std::size_t encoder_hits() const { return both_correct + degraded; }
    std::size_t pipeline_hits() const { return both_correct + fixed; }
};

// Buckets per-query Hit@1 pairs from two runs over the same query set.
Decomposition decompose(const std::vector<Ranking>& encoder_rankings,
                        const std::vector<Ranking>& pipeline_rankings,
                        const RelevanceSet& relevance);

struct TopkAblationRow {
    std::size_t k = 0;
    MetricsReport report;
    double retriever_recall_at_k = 0.0;  // mean |GT ∩ top-K| / |GT| headroom curve
    double retriever_any_gt_at_k = 0.0;  // fraction of queries with a GT in top-K;
                                         // the Hit@1 ceiling for any reranker
};

// One evaluate_run per K over identical queries, plus the retriever's
// Recall@K curve for the headroom plot.
std::vector<TopkAblationRow> topk_ablation(const std::vector<TaskQuery>& queries,
                                           const Retriever& retriever,
                                           const RerankStage* reranker,
                                           const std::vector<std::size_t>& k_values,
                                           const RelevanceSet& relevance);

struct QuartileStrata {
    // Cut points c1 <= c2 <= c3 on GT-description word counts: Q1 <= c1,
    // Q2 <= c2, Q3 <= c3, Q4 above.
    std::array<std::size_t, 3> cut_points{};
    // Per GT skill (with a non-empty description) its quartile 1..4.
    std::map<std::string, int> skill_quartile;
    // Per query: quartile of its longest-description GT skill.
    std::map<std::string, int> query_quartile;
    bool degenerate = false;  // cut points collapsed
};

QuartileStrata quartile_stratify(const RelevanceSet& relevance, const SkillPool& pool);

// evaluate_run-compatible labels ("desc_quartile=Qn") from a stratification.
StrataLabels quartile_labels(const QuartileStrata& strata);

// --- report rendering -------------------------------------------------------

// Aligned text table, one row per named report: E/H/A Hit@1, A-MRR@10,
// A-R@{10,20,50}, A-FC@10. Falls back to overall values for untiered runs;
// depth-limited cells are marked with '*'.
std::string format_comparison_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Full single-run dump: overall plus every stratum row.
std::string format_report(const MetricsReport& report);

// Category-count contribution table for a decomposition.
std::string format_decomposition(const Decomposition& d);

// Machine-readable JSON encoding of a report.
std::string report_to_json(const MetricsReport& report);

}  // namespace skillrank

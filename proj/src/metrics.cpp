#include "skillrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {

using nlohmann::json;

struct PerQuery {
    MetricValues values;  // count unused here
    bool empty = false;
    std::size_t depth = 0;
};

PerQuery score_query(const Ranking& ranking, const QueryRelevance& relevance) {
    PerQuery out;
    out.depth = ranking.size();
    out.empty = ranking.empty();
    out.values.hit1 = hit_at_1(ranking, relevance.gt_ids);
    out.values.mrr10 = mrr_at_10(ranking, relevance.gt_ids);
    out.values.r10 = recall_at_k(ranking, relevance.gt_ids, 10);
    out.values.r20 = recall_at_k(ranking, relevance.gt_ids, 20);
    out.values.r50 = recall_at_k(ranking, relevance.gt_ids, 50);
    out.values.fc10 = fc_at_10(ranking, relevance.gt_ids);
    return out;
}

struct Accumulator {
    MetricValues sum;

    void add(const MetricValues& v) {
        sum.hit1 += v.hit1;
        sum.mrr10 += v.mrr10;
        sum.r10 += v.r10;
        sum.r20 += v.r20;
        sum.r50 += v.r50;
        sum.fc10 += v.fc10;
        ++sum.count;
    }

    MetricValues mean() const {
        MetricValues m = sum;
        if (m.count > 0) {
            const auto n = static_cast<double>(m.count);
            m.hit1 /= n;
            m.mrr10 /= n;
            m.r10 /= n;
            m.r20 /= n;
            m.r50 /= n;
            m.fc10 /= n;
        }
        return m;
    }
};

std::string fmt3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

json metric_values_to_json(const MetricValues& v) {
    return {{"hit@1", v.hit1},   {"mrr@10", v.mrr10}, {"recall@10", v.r10},
            {"recall@20", v.r20}, {"recall@50", v.r50}, {"fc@10", v.fc10},
            {"queries", v.count}};
}

}  // namespace

RelevanceSet RelevanceSet::from_queries(const std::vector<TaskQuery>& queries) {
    RelevanceSet set;
    for (const TaskQuery& query : queries) {
        QueryRelevance relevance;
        relevance.query_id = query.id;
        relevance.gt_ids.insert(query.gt_ids.begin(), query.gt_ids.end());
        relevance.tier = query.tier;
        relevance.difficulty = query.difficulty;
        set.add(std::move(relevance));
    }
    return set;
}

void RelevanceSet::add(QueryRelevance relevance) {
    if (relevance.gt_ids.empty()) {
        throw ValidationError("relevance for query '" + relevance.query_id +
                              "' has no ground-truth skills");
    }
    const auto [it, inserted] = by_id_.emplace(relevance.query_id, entries_.size());
    if (!inserted) {
        throw ValidationError("duplicate relevance entry for query '" + relevance.query_id +
                              "'");
    }
    entries_.push_back(std::move(relevance));
}

const QueryRelevance* RelevanceSet::find(std::string_view query_id) const {
    const auto it = by_id_.find(std::string(query_id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

int hit_at_1(const Ranking& ranking, const std::unordered_set<std::string>& gt) {
    if (ranking.empty()) return 0;
    return gt.count(ranking.hits.front().skill_id) ? 1 : 0;
}

double mrr_at_10(const Ranking& ranking, const std::unordered_set<std::string>& gt) {
    const std::size_t horizon = std::min<std::size_t>(10, ranking.size());
    for (std::size_t r = 0; r < horizon; ++r) {
        if (gt.count(ranking.hits[r].skill_id)) {
            return 1.0 / static_cast<double>(r + 1);
        }
    }
    return 0.0;
}

double recall_at_k(const Ranking& ranking, const std::unordered_set<std::string>& gt,
                   std::size_t k) {
    if (k == 0) throw ValidationError("recall_at_k: k must be >= 1");
    if (gt.empty()) throw ValidationError("recall_at_k: empty ground-truth set");
    const std::size_t horizon = std::min(k, ranking.size());
    std::size_t found = 0;
    for (std::size_t r = 0; r < horizon; ++r) {
        if (gt.count(ranking.hits[r].skill_id)) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(gt.size());
}

int fc_at_10(const Ranking& ranking, const std::unordered_set<std::string>& gt) {
    const std::size_t horizon = std::min<std::size_t>(10, ranking.size());
    std::size_t found = 0;
    for (std::size_t r = 0; r < horizon; ++r) {
        if (gt.count(ranking.hits[r].skill_id)) ++found;
    }
    return found == gt.size() ? 1 : 0;
}

MetricsReport evaluate_run(const std::vector<Ranking>& rankings, const RelevanceSet& relevance,
                           const StrataLabels* extra_strata) {
    MetricsReport report;
    Accumulator overall;
    std::map<std::string, Accumulator> strata;
    std::unordered_set<std::string> seen;

    // Fold in relevance order so aggregation is deterministic regardless of
    // how the rankings were produced or shuffled.
    std::unordered_map<std::string, const Ranking*> by_id;
    for (const Ranking& ranking : rankings) {
        const QueryRelevance* entry = relevance.find(ranking.query_id);
        if (entry == nullptr) {
            throw ValidationError("evaluate_run: unknown query id '" + ranking.query_id +
                                  "'");
        }
        if (!by_id.emplace(ranking.query_id, &ranking).second) {
            throw ValidationError("evaluate_run: duplicate ranking for query '" +
                                  ranking.query_id + "'");
        }
    }

    for (const QueryRelevance& entry : relevance.entries()) {
        const auto it = by_id.find(entry.query_id);
        if (it == by_id.end()) {
            report.missing_query_ids.push_back(entry.query_id);
            continue;
        }
        const Ranking& ranking = *it->second;
        const PerQuery scored = score_query(ranking, entry);
        if (scored.empty) report.empty_ranking_ids.push_back(entry.query_id);
        if (scored.depth < 10) ++report.depth_limited["r10"];
        if (scored.depth < 20) ++report.depth_limited["r20"];
        if (scored.depth < 50) ++report.depth_limited["r50"];

        overall.add(scored.values);
        std::vector<std::string> keys;
        if (!entry.tier.empty()) keys.push_back("tier=" + entry.tier);
        keys.push_back(entry.single_skill() ? "skills=single" : "skills=multi");
        if (!entry.difficulty.empty()) keys.push_back("difficulty=" + entry.difficulty);
        if (extra_strata != nullptr) {
            const auto extra = extra_strata->find(entry.query_id);
            if (extra != extra_strata->end()) {
                keys.insert(keys.end(), extra->second.begin(), extra->second.end());
            }
        }
        for (const auto& key : keys) strata[key].add(scored.values);
    }

    report.overall = overall.mean();
    for (const auto& [key, acc] : strata) report.strata.emplace(key, acc.mean());

    const auto easy = report.strata.find("tier=easy");
    const auto hard = report.strata.find("tier=hard");
    if (easy != report.strata.end() && hard != report.strata.end()) {
        MetricValues avg;
        avg.hit1 = (easy->second.hit1 + hard->second.hit1) / 2.0;
        avg.mrr10 = (easy->second.mrr10 + hard->second.mrr10) / 2.0;
        avg.r10 = (easy->second.r10 + hard->second.r10) / 2.0;
        avg.r20 = (easy->second.r20 + hard->second.r20) / 2.0;
        avg.r50 = (easy->second.r50 + hard->second.r50) / 2.0;
        avg.fc10 = (easy->second.fc10 + hard->second.fc10) / 2.0;
        avg.count = easy->second.count + hard->second.count;
        report.tier_average = avg;
    }
    return report;
}

Decomposition decompose(const std::vector<Ranking>& encoder_rankings,
                        const std::vector<Ranking>& pipeline_rankings,
                        const RelevanceSet& relevance) {
    if (encoder_rankings.size() != pipeline_rankings.size()) {
        throw ValidationError("decompose: run sizes differ");
    }
    std::unordered_map<std::string, const Ranking*> pipeline_by_id;
    for (const Ranking& ranking : pipeline_rankings) {
        pipeline_by_id.emplace(ranking.query_id, &ranking);
    }

    Decomposition d;
    for (const Ranking& encoder : encoder_rankings) {
        const QueryRelevance* entry = relevance.find(encoder.query_id);
        if (entry == nullptr) {
            throw ValidationError("decompose: unknown query id '" + encoder.query_id + "'");
        }
        const auto it = pipeline_by_id.find(encoder.query_id);
        if (it == pipeline_by_id.end()) {
            throw ValidationError("decompose: query '" + encoder.query_id +
                                  "' missing from pipeline run");
        }
        const int enc = hit_at_1(encoder, entry->gt_ids);
        const int pipe = hit_at_1(*it->second, entry->gt_ids);
        if (enc == 1 && pipe == 1) ++d.both_correct;
        else if (enc == 0 && pipe == 1) ++d.fixed;
        else if (enc == 1 && pipe == 0) ++d.degraded;
        else ++d.both_missed;
    }
    return d;
}

std::vector<TopkAblationRow> topk_ablation(const std::vector<TaskQuery>& queries,
                                           const Retriever& retriever,
                                           const RerankStage* reranker,
                                           const std::vector<std::size_t>& k_values,
                                           const RelevanceSet& relevance) {
    std::vector<TopkAblationRow> rows;
    rows.reserve(k_values.size());
    for (const std::size_t k : k_values) {
        TopkAblationRow row;
        row.k = k;
        std::vector<Ranking> rankings;
        rankings.reserve(queries.size());
        std::size_t covered = 0;
        double recall_sum = 0.0;
        for (const TaskQuery& query : queries) {
            const RouteResult routed = route(query.text, retriever, reranker, k, query.id);
            rankings.push_back(routed.ranking);

            const Ranking retrieved = retriever.search(query.text, k);
            const QueryRelevance* entry = relevance.find(query.id);
            if (entry == nullptr) {
                throw ValidationError("topk_ablation: unknown query id '" + query.id + "'");
            }
            recall_sum += recall_at_k(retrieved, entry->gt_ids, k);
            for (const auto& hit : retrieved.hits) {
                if (entry->gt_ids.count(hit.skill_id)) {
                    ++covered;
                    break;
                }
            }
        }
        row.report = evaluate_run(rankings, relevance);
        if (!queries.empty()) {
            const auto n = static_cast<double>(queries.size());
            row.retriever_recall_at_k = recall_sum / n;
            row.retriever_any_gt_at_k = static_cast<double>(covered) / n;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

QuartileStrata quartile_stratify(const RelevanceSet& relevance, const SkillPool& pool) {
    const IdIndex by_id = build_id_index(pool);

    // Distinct GT skills with extractable (non-empty) descriptions.
    std::map<std::string, std::size_t> skill_words;
    for (const QueryRelevance& entry : relevance.entries()) {
        for (const auto& gt : entry.gt_ids) {
            const auto it = by_id.find(gt);
            if (it == by_id.end()) {
                throw ValidationError("quartile_stratify: GT skill '" + gt +
                                      "' missing from pool");
            }
            const std::size_t words = word_count(pool.skills[it->second].description);
            if (words > 0) skill_words.emplace(gt, words);
        }
    }
    if (skill_words.empty()) {
        throw ValidationError("quartile_stratify: no GT skill has a description");
    }

    std::vector<std::size_t> sorted;
    sorted.reserve(skill_words.size());
    for (const auto& [id, words] : skill_words) sorted.push_back(words);
    std::sort(sorted.begin(), sorted.end());

    QuartileStrata out;
    const std::size_t n = sorted.size();
    for (std::size_t q = 1; q <= 3; ++q) {
        const auto rank = static_cast<std::size_t>(
            std::ceil(static_cast<double>(q * n) / 4.0));
        out.cut_points[q - 1] = sorted[std::max<std::size_t>(rank, 1) - 1];
    }
    out.degenerate = !(out.cut_points[0] < out.cut_points[1] &&
                       out.cut_points[1] < out.cut_points[2]);

    auto quartile_of = [&](std::size_t words) {
        if (words <= out.cut_points[0]) return 1;
        if (words <= out.cut_points[1]) return 2;
        if (words <= out.cut_points[2]) return 3;
        return 4;
    };
    for (const auto& [id, words] : skill_words) {
        out.skill_quartile.emplace(id, quartile_of(words));
    }
    for (const QueryRelevance& entry : relevance.entries()) {
        std::size_t best_words = 0;
        bool any = false;
        for (const auto& gt : entry.gt_ids) {
            const auto it = skill_words.find(gt);
            if (it != skill_words.end()) {
                best_words = std::max(best_words, it->second);
                any = true;
            }
        }
        if (any) out.query_quartile.emplace(entry.query_id, quartile_of(best_words));
    }
    return out;
}

StrataLabels quartile_labels(const QuartileStrata& strata) {
    StrataLabels labels;
    for (const auto& [query_id, quartile] : strata.query_quartile) {
        labels[query_id].push_back("desc_quartile=Q" + std::to_string(quartile));
    }
    return labels;
}

std::string format_comparison_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_width = 6;
    for (const auto& [name, report] : rows) name_width = std::max(name_width, name.size());

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_width) + 2) << "System" << std::right
       << std::setw(9) << "E-Hit@1" << std::setw(9) << "H-Hit@1" << std::setw(9) << "A-Hit@1"
       << std::setw(10) << "A-MRR@10" << std::setw(8) << "A-R@10" << std::setw(8) << "A-R@20"
       << std::setw(8) << "A-R@50" << std::setw(9) << "A-FC@10" << '\n';

    for (const auto& [name, report] : rows) {
        const auto easy = report.strata.find("tier=easy");
        const auto hard = report.strata.find("tier=hard");
        // Untiered runs fall back to overall in every column.
        const MetricValues& avg =
            report.tier_average ? *report.tier_average : report.overall;
        auto cell = [&](double v, const char* horizon) {
            std::string s = fmt3(v);
            if (horizon != nullptr) {
                const auto it = report.depth_limited.find(horizon);
                if (it != report.depth_limited.end() && it->second > 0) s += "*";
            }
            return s;
        };
        os << std::left << std::setw(static_cast<int>(name_width) + 2) << name << std::right
           << std::setw(9)
           << fmt3(easy != report.strata.end() ? easy->second.hit1 : report.overall.hit1)
           << std::setw(9)
           << fmt3(hard != report.strata.end() ? hard->second.hit1 : report.overall.hit1)
           << std::setw(9) << fmt3(avg.hit1) << std::setw(10) << fmt3(avg.mrr10)
           << std::setw(8) << cell(avg.r10, "r10") << std::setw(8) << cell(avg.r20, "r20")
           << std::setw(8) << cell(avg.r50, "r50") << std::setw(9) << fmt3(avg.fc10) << '\n';
    }
    bool any_marked = false;
    for (const auto& [name, report] : rows) any_marked |= !report.depth_limited.empty();
    if (any_marked) {
        os << "* evaluated over available ranking depth (shorter than the metric horizon)\n";
    }
    return os.str();
}

std::string format_report(const MetricsReport& report) {
    std::ostringstream os;
    auto row = [&](const std::string& label, const MetricValues& v) {
        os << std::left << std::setw(24) << label << std::right << std::setw(8)
           << fmt3(v.hit1) << std::setw(9) << fmt3(v.mrr10) << std::setw(8) << fmt3(v.r10)
           << std::setw(8) << fmt3(v.r20) << std::setw(8) << fmt3(v.r50) << std::setw(8)
           << fmt3(v.fc10) << std::setw(7) << v.count << '\n';
    };
    os << std::left << std::setw(24) << "Stratum" << std::right << std::setw(8) << "Hit@1"
       << std::setw(9) << "MRR@10" << std::setw(8) << "R@10" << std::setw(8) << "R@20"
       << std::setw(8) << "R@50" << std::setw(8) << "FC@10" << std::setw(7) << "N" << '\n';
    row("overall", report.overall);
    if (report.tier_average) row("average(easy,hard)", *report.tier_average);
    for (const auto& [key, values] : report.strata) row(key, values);
    if (!report.missing_query_ids.empty()) {
        os << "missing rankings for " << report.missing_query_ids.size() << " queries\n";
    }
    if (!report.empty_ranking_ids.empty()) {
        os << "empty rankings (scored 0, flagged) for " << report.empty_ranking_ids.size()
           << " queries\n";
    }
    return os.str();
}

std::string format_decomposition(const Decomposition& d) {
    const auto n = static_cast<double>(d.total());
    auto pct = [&](std::size_t c) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(1)
           << (n == 0.0 ? 0.0 : static_cast<double>(c) / n * 100.0);
        return os.str();
    };
    std::ostringstream os;
    os << std::left << std::setw(20) << "Category" << std::right << std::setw(6) << "n"
       << std::setw(8) << "%" << '\n';
    os << std::left << std::setw(20) << "Both correct" << std::right << std::setw(6)
       << d.both_correct << std::setw(8) << pct(d.both_correct) << '\n';
    os << std::left << std::setw(20) << "Reranker fixed" << std::right << std::setw(6)
       << d.fixed << std::setw(8) << pct(d.fixed) << '\n';
    os << std::left << std::setw(20) << "Reranker degraded" << std::right << std::setw(6)
       << d.degraded << std::setw(8) << pct(d.degraded) << '\n';
    os << std::left << std::setw(20) << "Both missed" << std::right << std::setw(6)
       << d.both_missed << std::setw(8) << pct(d.both_missed) << '\n';
    os << std::left << std::setw(20) << "Encoder Hit@1" << std::right << std::setw(6)
       << d.encoder_hits() << std::setw(8) << pct(d.encoder_hits()) << '\n';
    os << std::left << std::setw(20) << "Pipeline Hit@1" << std::right << std::setw(6)
       << d.pipeline_hits() << std::setw(8) << pct(d.pipeline_hits()) << '\n';
    return os.str();
}

std::string report_to_json(const MetricsReport& report) {
    json out;
    out["overall"] = metric_values_to_json(report.overall);
    json strata = json::object();
    for (const auto& [key, values] : report.strata) {
        strata[key] = metric_values_to_json(values);
    }
    out["strata"] = std::move(strata);
    if (report.tier_average) {
        out["tier_average"] = metric_values_to_json(*report.tier_average);
    }
    out["missing_query_ids"] = report.missing_query_ids;
    out["empty_ranking_ids"] = report.empty_ranking_ids;
    out["depth_limited"] = report.depth_limited;
    return out.dump(2);
}

}  // namespace skillrank

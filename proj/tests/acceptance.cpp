// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "skillrank/bench.hpp"
#include "skillrank/cli.hpp"
#include "skillrank/forge.hpp"
#include "skillrank/io.hpp"
#include "skillrank/metrics.hpp"
#include "skillrank/objectives.hpp"
#include "skillrank/text.hpp"

#include <json.hpp>

using namespace skillrank;
using nlohmann::json;

namespace {

struct Check {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& message) {
        if (!ok) failures.push_back(message);
    }

    template <typename T>
    void equal(const T& actual, const T& expected, const std::string& what) {
        if (!(actual == expected)) {
            std::ostringstream os;
            os << what << ": got " << actual << ", expected " << expected;
            failures.push_back(os.str());
        }
    }

    void close(double actual, double expected, double tolerance, const std::string& what) {
        if (std::abs(actual - expected) > tolerance) {
            std::ostringstream os;
            os.precision(12);
            os << what << ": |" << actual << " - " << expected << "| > " << tolerance;
            failures.push_back(os.str());
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::filesystem::path scratch_dir() {
#ifdef TEST_TMP_DIR
    const std::filesystem::path base{TEST_TMP_DIR};
#else
    const std::filesystem::path base = std::filesystem::temp_directory_path();
#endif
    const auto dir = base / "acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Skill quick_skill(std::string id, std::string name, std::string description,
                  std::string body, std::string category) {
    Skill skill;
    skill.id = std::move(id);
    skill.name = std::move(name);
    skill.description = std::move(description);
    skill.body = std::move(body);
    skill.category = std::move(category);
    return skill;
}

SkillPool taxonomy_pool(std::size_t categories, std::size_t per_category,
                        std::uint64_t seed) {
    static const char* kTopics[] = {"git",    "docker", "audio", "video",  "pdf",
                                    "chart",  "deploy", "backup", "scan",  "notify",
                                    "sql",    "http",   "image", "text",   "mail",
                                    "crypto", "queue",  "cache", "search", "report"};
    static const char* kVerbs[] = {"convert", "extract", "sync",   "merge", "inspect",
                                   "archive", "stream",  "filter", "split", "render"};
    std::mt19937_64 rng(seed);
    SkillPool pool;
    for (std::size_t c = 0; c < categories; ++c) {
        const std::string topic = kTopics[c % 20];
        for (std::size_t i = 0; i < per_category; ++i) {
            const std::string verb = kVerbs[rng() % 10];
            const std::string other = kVerbs[rng() % 10];
            Skill skill;
            skill.id = topic + "-" + verb + "-" + std::to_string(c) + "-" + std::to_string(i);
            skill.name = topic + "-" + verb + "-" + std::to_string(i);
            skill.description = verb + " " + topic + " resources with " + other + " support";
            skill.body = "Use this skill to " + verb + " " + topic + " data. It can also " +
                         other + " related files and report " + topic + " status. Variant " +
                         std::to_string(rng() % 89) + ".";
            skill.category = "cat-" + topic;
            pool.skills.push_back(std::move(skill));
        }
    }
    return pool;
}

// --- criteria ---------------------------------------------------------------

// Metric oracle equivalence: 200 randomized instances, exact match with a
// from-scratch recomputation, under one second.
void criterion_metric_oracle(Check& check) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240801);
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t pool_size = 10 + rng() % 91;  // <= 100 candidates
        const std::size_t gt_count = 1 + rng() % 7;     // 1..7 GT skills

        std::unordered_set<std::string> gt;
        while (gt.size() < gt_count) {
            gt.insert("s" + std::to_string(rng() % pool_size));
        }
        Ranking ranking;
        ranking.query_id = "q";
        const std::size_t depth = rng() % (pool_size + 1);
        std::vector<std::size_t> ids(pool_size);
        std::iota(ids.begin(), ids.end(), 0u);
        for (std::size_t r = 0; r < depth; ++r) {
            const std::size_t pick = rng() % ids.size();
            ranking.hits.push_back(
                {"s" + std::to_string(ids[pick]), 1.0 - 0.001 * static_cast<double>(r)});
            ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(pick));
        }

        // independent brute-force recomputation
        auto is_gt = [&](const std::string& id) { return gt.count(id) > 0; };
        const int oracle_hit1 =
            !ranking.hits.empty() && is_gt(ranking.hits[0].skill_id) ? 1 : 0;
        double oracle_mrr = 0.0;
        for (std::size_t r = 0; r < std::min<std::size_t>(ranking.hits.size(), 10); ++r) {
            if (is_gt(ranking.hits[r].skill_id)) {
                oracle_mrr = 1.0 / static_cast<double>(r + 1);
                break;
            }
        }
        auto oracle_recall = [&](std::size_t k) {
            std::size_t found = 0;
            for (std::size_t r = 0; r < std::min(ranking.hits.size(), k); ++r) {
                if (is_gt(ranking.hits[r].skill_id)) ++found;
            }
            return static_cast<double>(found) / static_cast<double>(gt.size());
        };
        std::size_t found10 = 0;
        for (std::size_t r = 0; r < std::min<std::size_t>(ranking.hits.size(), 10); ++r) {
            if (is_gt(ranking.hits[r].skill_id)) ++found10;
        }
        const int oracle_fc = found10 == gt.size() ? 1 : 0;

        // exact equality, zero tolerance
        check.require(hit_at_1(ranking, gt) == oracle_hit1, "hit@1 mismatch");
        check.require(mrr_at_10(ranking, gt) == oracle_mrr, "mrr@10 mismatch");
        for (const std::size_t k : {10u, 20u, 50u}) {
            check.require(recall_at_k(ranking, gt, k) == oracle_recall(k),
                          "recall@" + std::to_string(k) + " mismatch");
        }
        check.require(fc_at_10(ranking, gt) == oracle_fc, "fc@10 mismatch");
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 1.0,
                  "metric oracle run took " + std::to_string(elapsed) + "s (limit 1s)");
}

// Exact dense retrieval equals full-scan argsort on a 1,000 x 16 stub pool.
void criterion_dense_brute_force(Check& check) {
    const auto start = std::chrono::steady_clock::now();
    const SkillPool pool = taxonomy_pool(20, 50, 17);  // 1000 skills
    const HashedTfProvider provider(16);
    EmbedPoolOptions options;
    const VectorIndex index = embed_pool(pool, provider, options);
    check.equal(index.size(), std::size_t{1000}, "pool size");
    check.equal(index.dimension(), std::size_t{16}, "dimension");

    std::mt19937_64 rng(555);
    static const char* kWords[] = {"convert", "git",   "pdf",  "stream", "merge",
                                   "filter",  "audio", "scan", "backup", "status"};
    for (int q = 0; q < 100; ++q) {
        std::string text;
        const std::size_t len = 2 + rng() % 6;
        for (std::size_t w = 0; w < len; ++w) {
            if (!text.empty()) text += ' ';
            text += kWords[rng() % 10];
        }
        const Vector query = provider.embed_query(text);
        const Ranking ranking = index.search_exact(query, 20);

        // full-scan argsort with the same scores, independent selection path
        const Eigen::VectorXf scores = index.rows() * query;
        std::vector<std::uint32_t> order(index.size());
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
        });
        check.equal(ranking.size(), std::size_t{20}, "top-20 size");
        for (std::size_t r = 0; r < 20; ++r) {
            check.require(ranking.hits[r].skill_id == index.ids()[order[r]],
                          "rank " + std::to_string(r) + " differs from argsort (query " +
                              std::to_string(q) + ")");
        }
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 5.0,
                  "dense brute-force run took " + std::to_string(elapsed) + "s (limit 5s)");
}

// BM25 against frozen hand-evaluated scores, then rank agreement with a
// brute-force scorer on 50 random corpora.
void criterion_bm25_oracle(Check& check) {
    const std::vector<std::string> ids = {"d0", "d1", "d2", "d3", "d4"};
    const std::vector<std::string> docs = {
        "the quick brown fox", "quick brown foxes leap", "lazy dogs sleep",
        "the quick dog barks loudly", "brown bears sleep in winter"};
    const Bm25Index index = Bm25Index::from_documents(ids, docs);
    const Ranking ranking = index.search("quick brown dog", 5);

    // Hand-evaluated Okapi scores (k1=1.2, b=0.75, avgdl=4.2):
    //   d3 = idf(quick)+idf(dog) weighted at dl=5 -> 1.786113209188536
    //   d0 = d1 = idf(quick)+idf(brown) at dl=4   -> 1.099410080964687
    //   d4 = idf(brown) at dl=5                   -> 0.500032898270083
    //   d2 shares no token and is omitted.
    check.equal(ranking.size(), std::size_t{4}, "hand corpus result size");
    const std::vector<std::pair<std::string, double>> expected = {
        {"d3", 1.786113209188536},
        {"d0", 1.099410080964687},
        {"d1", 1.099410080964687},
        {"d4", 0.500032898270083}};
    for (std::size_t r = 0; r < expected.size() && r < ranking.size(); ++r) {
        check.equal(ranking.hits[r].skill_id, expected[r].first,
                    "hand corpus rank " + std::to_string(r));
        check.close(ranking.hits[r].score, expected[r].second, 1e-9,
                    "hand corpus score " + expected[r].first);
    }

    // rank order vs brute force on 50 randomized corpora
    std::mt19937_64 rng(808);
    static const char* kWords[] = {"alpha", "beta", "gamma", "delta", "omega",
                                   "sync",  "git",  "pdf",   "merge", "scan"};
    auto random_text = [&](std::size_t max_len) {
        std::string text;
        const std::size_t len = 1 + rng() % max_len;
        for (std::size_t w = 0; w < len; ++w) {
            if (!text.empty()) text += ' ';
            text += kWords[rng() % 10];
        }
        return text;
    };
    for (int corpus = 0; corpus < 50; ++corpus) {
        const std::size_t count = 3 + rng() % 10;
        std::vector<std::string> corpus_ids, corpus_docs;
        for (std::size_t d = 0; d < count; ++d) {
            corpus_ids.push_back("doc" + std::to_string(d));
            corpus_docs.push_back(random_text(9));
        }
        const Bm25Index corpus_index = Bm25Index::from_documents(corpus_ids, corpus_docs);
        const std::string query = random_text(4);
        const Ranking result = corpus_index.search(query, count);

        // brute force: score every document from raw text
        std::vector<std::vector<std::string>> token_lists;
        double total_len = 0.0;
        for (const auto& doc : corpus_docs) {
            token_lists.push_back(tokenize(doc));
            total_len += static_cast<double>(token_lists.back().size());
        }
        const double avgdl = total_len / static_cast<double>(count);
        auto brute_score = [&](std::size_t d) {
            double score = 0.0;
            for (const auto& term : tokenize(query)) {
                double df = 0.0;
                for (const auto& tokens : token_lists) {
                    if (std::find(tokens.begin(), tokens.end(), term) != tokens.end()) {
                        df += 1.0;
                    }
                }
                const auto tf = static_cast<double>(
                    std::count(token_lists[d].begin(), token_lists[d].end(), term));
                if (tf == 0.0) continue;
                const double idf =
                    std::log((static_cast<double>(count) - df + 0.5) / (df + 0.5) + 1.0);
                const double dl = static_cast<double>(token_lists[d].size());
                score += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * dl / avgdl));
            }
            return score;
        };
        std::vector<std::size_t> order(count);
        std::iota(order.begin(), order.end(), 0u);
        std::vector<double> scores(count);
        for (std::size_t d = 0; d < count; ++d) scores[d] = brute_score(d);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[a] > scores[b];
        });
        std::vector<std::string> expected_ids;
        for (const std::size_t d : order) {
            if (scores[d] > 0.0) expected_ids.push_back(corpus_ids[d]);
        }
        std::vector<std::string> actual_ids;
        for (const auto& hit : result.hits) actual_ids.push_back(hit.skill_id);
        check.require(actual_ids == expected_ids,
                      "rank order mismatch on random corpus " + std::to_string(corpus));
    }
}

// Analytic gradients vs central finite differences, plus uniform-input
// closed forms.
void criterion_gradients(Check& check) {
    std::mt19937_64 rng(31415);
    auto uniform = [&rng](double lo, double hi) {
        const double unit = static_cast<double>(rng() >> 11) / static_cast<double>(1ULL << 53);
        return lo + unit * (hi - lo);
    };

    double worst_nce = 0.0, worst_lw = 0.0, worst_pw = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
        const Eigen::Index batch = 3 + static_cast<Eigen::Index>(rng() % 4);
        Eigen::MatrixXd sim(batch, batch);
        for (Eigen::Index r = 0; r < batch; ++r) {
            for (Eigen::Index c = 0; c < batch; ++c) sim(r, c) = uniform(-1.0, 1.0);
        }
        const LossFn nce_fn = [batch](const Eigen::VectorXd& x) {
            const Eigen::MatrixXd m =
                Eigen::Map<const Eigen::MatrixXd>(x.data(), batch, batch);
            const InfoNceResult r = info_nce(m, 0.05);
            return std::make_pair(r.loss,
                                  Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                      r.grad.data(), r.grad.size())));
        };
        worst_nce = std::max(
            worst_nce,
            finite_diff_check(nce_fn, Eigen::Map<Eigen::VectorXd>(sim.data(), sim.size())));

        Eigen::VectorXd scores(20);
        for (Eigen::Index j = 0; j < 20; ++j) scores[j] = uniform(-5.0, 5.0);
        const auto positive = static_cast<Eigen::Index>(rng() % 20);
        const LossFn lw_fn = [positive](const Eigen::VectorXd& x) {
            const ListwiseResult r = listwise_ce(x, positive, 1.0);
            return std::make_pair(r.loss, r.grad);
        };
        worst_lw = std::max(worst_lw, finite_diff_check(lw_fn, scores));

        Eigen::VectorXd labels(20);
        for (Eigen::Index j = 0; j < 20; ++j) labels[j] = (rng() % 2) ? 1.0 : 0.0;
        const LossFn pw_fn = [labels](const Eigen::VectorXd& x) {
            const ListwiseResult r = pointwise_bce(x, labels);
            return std::make_pair(r.loss, r.grad);
        };
        worst_pw = std::max(worst_pw, finite_diff_check(pw_fn, scores));
    }
    check.require(worst_nce < 1e-6,
                  "info_nce finite-difference error " + std::to_string(worst_nce));
    check.require(worst_lw < 1e-6,
                  "listwise_ce finite-difference error " + std::to_string(worst_lw));
    check.require(worst_pw < 1e-6,
                  "pointwise_bce finite-difference error " + std::to_string(worst_pw));

    // uniform-input closed forms to 1e-10
    const Eigen::MatrixXd uniform_sim = Eigen::MatrixXd::Constant(2, 2, 0.3);
    check.close(info_nce(uniform_sim, 0.05).loss, std::log(2.0), 1e-10, "info_nce ln 2");
    const Eigen::VectorXd uniform_scores = Eigen::VectorXd::Constant(20, 0.7);
    check.close(listwise_ce(uniform_scores, 3, 1.0).loss, std::log(20.0), 1e-10,
                "listwise_ce ln 20");
    Eigen::VectorXd labels = Eigen::VectorXd::Zero(20);
    labels[5] = 1.0;
    check.close(pointwise_bce(Eigen::VectorXd::Zero(20), labels).loss, std::log(2.0), 1e-10,
                "pointwise_bce ln 2");
}

// Planted false-negative fixture: exactly (3, 2, 1) per layer, with
// layer-order precedence.
void criterion_filter_fixture(Check& check) {
    const std::string gold_body =
        "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu xi omicron "
        "pi rho sigma tau upsilon";
    const std::string reversed_body =
        "upsilon tau sigma rho pi omicron xi nu mu lambda kappa iota theta eta zeta epsilon "
        "delta gamma beta alpha";

    SkillPool pool;
    pool.skills = {
        quick_skill("gold", "gold-converter", "", gold_body, "cat-a"),
        // three name duplicates; the first also clones the body (removable at
        // two layers, must count once under name)
        quick_skill("name-dup-1", "gold-converter", "", gold_body, "cat-a"),
        quick_skill("name-dup-2", "gold-converter", "", "different body text one", "cat-a"),
        quick_skill("name-dup-3", "gold-converter", "", "different body text two", "cat-a"),
        // two high-Jaccard bodies under fresh names
        quick_skill("body-copy-1", "other-name-1", "", gold_body, "cat-b"),
        quick_skill("body-copy-2", "other-name-2", "",
                    "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu "
                    "xi omicron pi rho sigma tau omega",
                    "cat-b"),
        // one high-cosine pair: same bag of words, different order
        quick_skill("bag-twin", "x1", "", reversed_body, "cat-b"),
        quick_skill("clean", "clean-skill", "", "unrelated vocabulary entirely elsewhere",
                    "cat-c"),
    };
    const HashedTfProvider provider(64);
    const VectorIndex vectors = embed_pool(pool, provider, {});

    check.require(trigram_jaccard(pool.skills[5].body, gold_body) > 0.6,
                  "body-copy-2 fixture must exceed the trigram threshold");
    check.require(trigram_jaccard(reversed_body, gold_body) <= 0.6,
                  "bag-twin fixture must stay under the trigram threshold");

    TrainingExample example;
    example.query_id = "q";
    example.query_text = "convert greek letters";
    example.positive_id = "gold";
    for (const char* id : {"name-dup-1", "name-dup-2", "name-dup-3", "body-copy-1",
                           "body-copy-2", "bag-twin", "clean"}) {
        example.negatives.push_back({id, NegativeSource::semantic});
    }

    const FilterResult result = filter_false_negatives({example}, pool, {}, vectors);
    check.equal(result.report.removed_by_name, std::size_t{3}, "name layer");
    check.equal(result.report.removed_by_trigram, std::size_t{2}, "trigram layer");
    check.equal(result.report.removed_by_embedding, std::size_t{1}, "embedding layer");
    check.equal(result.report.total_removed(), std::size_t{6}, "total removed");
    check.equal(result.report.total_seen, std::size_t{7}, "total seen");
    check.equal(result.examples[0].negatives.size(), std::size_t{1}, "survivors");
    check.require(result.examples[0].negatives[0].skill_id == "clean",
                  "only the clean negative survives");
}

// 500 seeded mining calls on a 200-skill taxonomy: exact {4,3,2,1} mix on
// unflagged examples, positive excluded, byte-reproducible.
void criterion_negative_mix(Check& check) {
    const SkillPool pool = taxonomy_pool(20, 10, 99);  // 200 skills
    const HashedTfProvider provider(64);
    const VectorIndex vectors = embed_pool(pool, provider, {});
    const Bm25Index bm25 = Bm25Index::build(pool, kEncoderCaps);
    const NegativeMiner miner(pool, vectors, bm25, provider, {});

    std::size_t unflagged = 0;
    for (int call = 0; call < 500; ++call) {
        const Skill& positive = pool.skills[static_cast<std::size_t>(call) % pool.size()];
        const std::string query =
            "need to " + positive.description + " for project " + std::to_string(call);
        const auto seed = static_cast<std::uint64_t>(1000 + call);

        const TrainingExample example = miner.mine(query, positive.id, seed, "q");
        const TrainingExample again = miner.mine(query, positive.id, seed, "q");
        check.require(example_to_json_line(example) == example_to_json_line(again),
                      "seed " + std::to_string(seed) + " not byte-reproducible");

        std::size_t counts[4] = {0, 0, 0, 0};
        for (const auto& negative : example.negatives) {
            ++counts[static_cast<int>(negative.source)];
            check.require(negative.skill_id != positive.id, "positive among negatives");
        }
        if (!example.flagged) {
            ++unflagged;
            check.require(counts[0] == 4 && counts[1] == 3 && counts[2] == 2 && counts[3] == 1,
                          "unflagged example with mix {" + std::to_string(counts[0]) + "," +
                              std::to_string(counts[1]) + "," + std::to_string(counts[2]) +
                              "," + std::to_string(counts[3]) + "}");
        }
    }
    // the contract is on unflagged examples; an all-flagged run would be vacuous
    check.require(unflagged >= 450, "only " + std::to_string(unflagged) +
                                        "/500 examples met the mix without backfill");
}

// Oracle reranker: pipeline Hit@1 equals the retriever's any-GT coverage at
// every K, and candidates never escape the retriever's window.
void criterion_two_stage_ceiling(Check& check) {
    const SkillPool pool = taxonomy_pool(12, 12, 7);
    const Bm25Index bm25 = Bm25Index::build(pool, kEncoderCaps);
    const Bm25Retriever retriever(bm25);

    std::vector<TaskQuery> queries;
    std::mt19937_64 rng(2);
    for (int q = 0; q < 40; ++q) {
        const Skill& gt = pool.skills[rng() % pool.size()];
        TaskQuery query;
        query.id = "q" + std::to_string(q);
        // partially-matching query so the GT lands at varying ranks
        query.text = gt.description + " " + std::to_string(rng() % 50);
        query.gt_ids = {gt.id};
        queries.push_back(std::move(query));
    }
    const RelevanceSet relevance = RelevanceSet::from_queries(queries);

    for (const std::size_t k : {10u, 20u, 50u}) {
        std::size_t covered = 0;
        std::size_t pipeline_hits = 0;
        for (const TaskQuery& query : queries) {
            const Ranking retrieved = retriever.search(query.text, k);
            const bool any_gt = std::any_of(
                retrieved.hits.begin(), retrieved.hits.end(),
                [&](const ScoredHit& hit) { return hit.skill_id == query.gt_ids[0]; });
            covered += any_gt ? 1 : 0;

            // oracle rerank: score 1 iff ground truth
            Ranking reranked = retrieved;
            std::stable_sort(reranked.hits.begin(), reranked.hits.end(),
                             [&](const ScoredHit& a, const ScoredHit& b) {
                                 const int sa = a.skill_id == query.gt_ids[0] ? 1 : 0;
                                 const int sb = b.skill_id == query.gt_ids[0] ? 1 : 0;
                                 return sa > sb;
                             });
            if (!reranked.hits.empty() && reranked.hits[0].skill_id == query.gt_ids[0]) {
                ++pipeline_hits;
            }

            // two-stage ceiling: reranked set is a subset of the retrieved set
            std::unordered_set<std::string> window;
            for (const auto& hit : retrieved.hits) window.insert(hit.skill_id);
            for (const auto& hit : reranked.hits) {
                check.require(window.count(hit.skill_id) == 1,
                              "candidate escaped the retriever window at K=" +
                                  std::to_string(k));
            }
        }
        check.equal(pipeline_hits, covered,
                    "oracle pipeline Hit@1 vs retriever coverage at K=" + std::to_string(k));
    }

    // the same equivalence through the real rerank_scored path at K=20
    std::size_t covered20 = 0, scored_hits = 0;
    for (const TaskQuery& query : queries) {
        const Ranking retrieved = retriever.search(query.text, 20);
        const bool any_gt = std::any_of(
            retrieved.hits.begin(), retrieved.hits.end(),
            [&](const ScoredHit& hit) { return hit.skill_id == query.gt_ids[0]; });
        covered20 += any_gt ? 1 : 0;
        if (retrieved.empty()) continue;

        struct QueryOracle : RerankProvider {
            std::string gt;
            std::string name() const override { return "gt-oracle"; }
            double score(std::string_view, std::string_view candidate) const override {
                return candidate == gt ? 1.0 : 0.0;
            }
        };
        QueryOracle oracle;
        oracle.gt = query.gt_ids[0];
        std::vector<std::string> texts;  // candidate text = its id, for the oracle
        for (const auto& hit : retrieved.hits) texts.push_back(hit.skill_id);
        const Ranking reranked = rerank_scored(query.text, retrieved, oracle, texts);
        if (reranked.hits[0].skill_id == query.gt_ids[0]) ++scored_hits;
    }
    check.equal(scored_hits, covered20, "rerank_scored oracle Hit@1 at K=20");
}

// Judge protocol: chosen candidate to rank 1, everyone else in encoder
// order; adversarial replies leave the order unchanged and flag the query.
void criterion_judge_protocol(Check& check) {
    std::mt19937_64 rng(64);

    struct ScriptedJudge : JudgeProvider {
        std::optional<int> reply;
        std::string name() const override { return "scripted"; }
        std::optional<int> choose(std::string_view,
                                  const std::vector<std::string>&) const override {
            return reply;
        }
    };

    for (int round = 0; round < 200; ++round) {
        const std::size_t k = 2 + rng() % 19;
        Ranking candidates;
        candidates.query_id = "q";
        for (std::size_t i = 0; i < k; ++i) {
            candidates.hits.push_back(
                {"c" + std::to_string(rng() % 1000) + "-" + std::to_string(i),
                 1.0 - 0.01 * static_cast<double>(i)});
        }
        std::vector<std::string> texts;
        for (const auto& hit : candidates.hits) texts.push_back(hit.skill_id);

        ScriptedJudge judge;
        const int mode = static_cast<int>(rng() % 4);
        if (mode == 0) {
            judge.reply = 1 + static_cast<int>(rng() % k);  // valid pick
        } else if (mode == 1) {
            judge.reply = static_cast<int>(k) + 1 + static_cast<int>(rng() % 5);  // too big
        } else if (mode == 2) {
            judge.reply = -static_cast<int>(rng() % 3);  // zero or negative
        } else {
            judge.reply = std::nullopt;  // non-numeric / refusal
        }

        const JudgeResult result = rerank_judge("q", candidates, judge, texts);
        check.equal(result.ranking.size(), candidates.size(), "judge output size");

        if (mode == 0) {
            const auto picked = static_cast<std::size_t>(*judge.reply - 1);
            check.require(!result.flagged, "valid pick must not be flagged");
            check.require(result.ranking.hits[0].skill_id == candidates.hits[picked].skill_id,
                          "picked candidate must be rank 1");
            // all others retain their original encoder ordering
            std::vector<std::string> expected;
            for (std::size_t i = 0; i < k; ++i) {
                if (i != picked) expected.push_back(candidates.hits[i].skill_id);
            }
            std::vector<std::string> rest;
            for (std::size_t i = 1; i < k; ++i) {
                rest.push_back(result.ranking.hits[i].skill_id);
            }
            check.require(rest == expected, "non-picked candidates must keep encoder order");
        } else {
            check.require(result.flagged, "adversarial reply must be flagged");
            for (std::size_t i = 0; i < k; ++i) {
                check.require(result.ranking.hits[i].skill_id == candidates.hits[i].skill_id,
                              "adversarial reply must leave order unchanged");
            }
        }
    }

    // non-numeric text replies parse to refusals
    check.require(!parse_judge_reply("seven").has_value(), "'seven' must not parse");
    check.require(parse_judge_reply("[3] looks best") == 3, "first integer token wins");
}

// Decomposition: counts sum to N and reconstruct both runs; the published
// per-category fixture reproduces the reported table.
void criterion_decomposition(Check& check) {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 20; ++round) {
        std::vector<TaskQuery> queries;
        std::vector<Ranking> encoder, pipeline;
        std::size_t enc_hits = 0, pipe_hits = 0;
        const std::size_t n = 20 + rng() % 131;
        for (std::size_t q = 0; q < n; ++q) {
            TaskQuery query;
            query.id = "q" + std::to_string(q);
            query.text = "t";
            query.gt_ids = {"gold"};
            queries.push_back(query);
            const bool enc = rng() % 2, pipe = rng() % 2;
            enc_hits += enc;
            pipe_hits += pipe;
            Ranking e, p;
            e.query_id = p.query_id = "q" + std::to_string(q);
            e.hits.push_back({enc ? "gold" : "miss", 1.0});
            p.hits.push_back({pipe ? "gold" : "miss", 1.0});
            encoder.push_back(std::move(e));
            pipeline.push_back(std::move(p));
        }
        const Decomposition d =
            decompose(encoder, pipeline, RelevanceSet::from_queries(queries));
        check.equal(d.total(), n, "decomposition total");
        check.equal(d.encoder_hits(), enc_hits, "encoder reconstruction");
        check.equal(d.pipeline_hits(), pipe_hits, "pipeline reconstruction");
    }

    // published per-category counts: 92 both, 19 fixed, 6 degraded, 33 missed
    Decomposition fixture;
    fixture.both_correct = 92;
    fixture.fixed = 19;
    fixture.degraded = 6;
    fixture.both_missed = 33;
    check.equal(fixture.total(), std::size_t{150}, "fixture total");
    check.equal(fixture.encoder_hits(), std::size_t{98}, "fixture encoder hits");
    check.equal(fixture.pipeline_hits(), std::size_t{111}, "fixture pipeline hits");
    const std::string table = format_decomposition(fixture);
    for (const char* fragment : {"Reranker fixed", "19", "12.7", "Reranker degraded", "4.0",
                                 "Encoder Hit@1", "98", "65.3", "Pipeline Hit@1", "111",
                                 "74.0", "Both missed", "22.0"}) {
        check.require(table.find(fragment) != std::string::npos,
                      std::string("decomposition table missing '") + fragment + "'");
    }
}

// Programmed stub latencies: nearest-rank percentiles within the scheduler
// tolerance and QPS within 2%.
void criterion_serving_bench(Check& check) {
    std::vector<std::string> queries;
    for (int i = 0; i < 10; ++i) queries.push_back("q" + std::to_string(i));
    const QueryRunner runner = [](const std::string& query) {
        const int ms = query == "q9" ? 500 : 100;
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
    BenchOptions options;
    options.warmup = 2;
    const LatencyReport report = time_queries(runner, queries, options);

    check.equal(report.n_queries, std::size_t{10}, "timed query count");
    check.close(report.p50_ms, 100.0, 10.0, "p50 (nearest rank, +-10ms)");
    check.close(report.p95_ms, 500.0, 10.0, "p95 (nearest rank, +-10ms)");
    const double expected_qps = 10.0 / 1.4;  // 9 x 100ms + 1 x 500ms
    check.require(std::abs(report.qps - expected_qps) / expected_qps < 0.02,
                  "qps " + std::to_string(report.qps) + " deviates more than 2% from " +
                      std::to_string(expected_qps));
    check.require(percentile_nearest_rank(report.latencies_ms, 50.0) == report.p50_ms,
                  "p50 must be recomputable from retained latencies");
    check.require(percentile_nearest_rank(report.latencies_ms, 95.0) == report.p95_ms,
                  "p95 must be recomputable from retained latencies");
}

// Replication harness: `eval run` on an externally produced score dump emits
// the tiered comparison table and the exact easy/hard mean.
void criterion_replication_harness(Check& check) {
    const auto dir = scratch_dir();

    // relevance: 8 queries (4 easy / 4 hard), single- and multi-skill
    std::vector<TaskQuery> queries;
    for (int i = 0; i < 8; ++i) {
        TaskQuery query;
        query.id = "q" + std::to_string(i);
        query.text = "task " + std::to_string(i);
        query.tier = i < 4 ? "easy" : "hard";
        query.gt_ids = {"g" + std::to_string(i)};
        if (i % 3 == 0) query.gt_ids.push_back("g" + std::to_string(i) + "b");
        queries.push_back(query);
    }
    const std::string relevance_path = (dir / "relevance.jsonl").string();
    write_queries_file(relevance_path, queries);

    // externally produced run: easy hits 3/4, hard hits 1/4 at rank 1
    std::vector<Ranking> rankings;
    for (int i = 0; i < 8; ++i) {
        Ranking ranking;
        ranking.query_id = "q" + std::to_string(i);
        const bool hit = (i < 4) ? (i != 3) : (i == 4);
        ranking.hits.push_back({hit ? "g" + std::to_string(i) : "zzz", 0.9});
        for (int r = 0; r < 19; ++r) {
            ranking.hits.push_back({"filler" + std::to_string(i) + "-" + std::to_string(r),
                                    0.8 - 0.01 * r});
        }
        rankings.push_back(std::move(ranking));
    }
    const std::string run_path = (dir / "external_run.jsonl").string();
    write_run_file(run_path, rankings);

    // drive the documented CLI surface
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    const int status = cli::dispatch({"eval", "run", "--run", run_path, "--relevance",
                                      relevance_path, "--name", "external",
                                      "--output", (dir / "report.json").string()});
    std::cout.rdbuf(old);
    check.equal(status, 0, "eval run exit status");

    const std::string table = captured.str();
    for (const char* column : {"E-Hit@1", "H-Hit@1", "A-Hit@1", "A-MRR@10", "A-R@10",
                               "A-R@20", "A-R@50", "A-FC@10"}) {
        check.require(table.find(column) != std::string::npos,
                      std::string("table missing column ") + column);
    }
    check.require(table.find("external") != std::string::npos, "table missing system name");

    std::ifstream report_file(dir / "report.json");
    json report;
    report_file >> report;
    const double easy_hit = report.at("strata").at("tier=easy").at("hit@1").get<double>();
    const double hard_hit = report.at("strata").at("tier=hard").at("hit@1").get<double>();
    const double avg_hit = report.at("tier_average").at("hit@1").get<double>();
    check.close(easy_hit, 0.75, 0.0, "easy Hit@1");
    check.close(hard_hit, 0.25, 0.0, "hard Hit@1");
    check.require(avg_hit == (easy_hit + hard_hit) / 2.0,
                  "tier average must be the exact mean of tier values");
    check.close(avg_hit, 0.5, 0.0, "average Hit@1");
}

// QC checks: three positive and three negative fixtures per check.
void criterion_qc_checks(Check& check) {
    auto words = [](int n, const std::string& prefix) {
        std::string text = prefix + "0";
        for (int i = 1; i < n; ++i) text += " " + prefix + std::to_string(i);
        return text;
    };
    auto has_kind = [](const std::vector<QCViolation>& violations, QCKind kind) {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const QCViolation& v) { return v.kind == kind; });
    };

    // name leak: three leaking queries...
    const Skill named = quick_skill("s", "speech-to-text", "", "", "cat");
    for (const std::string query :
         {"please run speech-to-text on this recording " + words(60, "w"),
          "SPEECH-TO-TEXT would help here " + words(60, "w"),
          words(30, "w") + " maybe Speech-To-Text " + words(30, "v")}) {
        check.require(has_kind(qc_check(query, named, QueryStyle::developer), QCKind::name_leak),
                      "name leak not detected");
    }
    // ...and three clean ones
    for (const std::string query :
         {"transcribe this recording for me " + words(60, "w"),
          "turn my audio into text " + words(60, "w"),
          words(60, "w") + " speech and text processing"}) {  // not the full name
        check.require(
            !has_kind(qc_check(query, named, QueryStyle::developer), QCKind::name_leak),
            "false name-leak on clean query");
    }

    // cli leak
    const Skill tooled =
        quick_skill("t", "archiver", "",
                    "Usage:\n```bash\n$ transmogrify --input x\nfrobnicate -v\n```\n", "cat");
    for (const std::string query :
         {"run transmogrify over my files " + words(60, "w"),
          "I heard FROBNICATE does this " + words(60, "w"),
          words(30, "w") + " transmogrify " + words(30, "v")}) {
        check.require(has_kind(qc_check(query, tooled, QueryStyle::developer), QCKind::cli_leak),
                      "cli leak not detected");
    }
    for (const std::string query :
         {"archive my files please " + words(60, "w"),
          "the transmogrification concept " + words(60, "w"),  // substring, not a token
          words(64, "w")}) {
        check.require(
            !has_kind(qc_check(query, tooled, QueryStyle::developer), QCKind::cli_leak),
            "false cli-leak on clean query");
    }

    // length bounds per style: three in-bounds, three out-of-bounds
    const Skill plain = quick_skill("p", "plain-tool", "", "", "cat");
    const struct {
        QueryStyle style;
        int ok;
        int bad;
    } cases[] = {{QueryStyle::scenario, 80, 79},   {QueryStyle::developer, 120, 121},
                 {QueryStyle::indirect, 117, 30}};
    for (const auto& c : cases) {
        check.require(!has_kind(qc_check(words(c.ok, "w"), plain, c.style), QCKind::length),
                      "false length violation at " + std::to_string(c.ok) + " words");
        check.require(has_kind(qc_check(words(c.bad, "w"), plain, c.style), QCKind::length),
                      "missed length violation at " + std::to_string(c.bad) + " words");
    }
}

struct Criterion {
    std::string name;
    std::function<void(Check&)> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"metric oracle equivalence (200 randomized instances, exact)", criterion_metric_oracle},
        {"exact dense retrieval equals brute-force argsort (1000x16, 100 queries)",
         criterion_dense_brute_force},
        {"bm25 matches the hand-evaluated oracle and brute-force rank order",
         criterion_bm25_oracle},
        {"gradient checks: info_nce / listwise_ce / pointwise_bce < 1e-6",
         criterion_gradients},
        {"false-negative filter fixture: per-layer counts (3, 2, 1) with precedence",
         criterion_filter_fixture},
        {"negative-mix contract: 500 seeded calls, {4,3,2,1}, reproducible",
         criterion_negative_mix},
        {"two-stage ceiling + oracle reranker equivalence at K in {10,20,50}",
         criterion_two_stage_ceiling},
        {"judge protocol: rank-1 promotion, order retention, adversarial replies",
         criterion_judge_protocol},
        {"decomposition consistency + published-count fixture", criterion_decomposition},
        {"serving bench calibration: p50/p95 nearest-rank +-10ms, QPS within 2%",
         criterion_serving_bench},
        {"replication harness: eval run emits tiered comparison tables with exact tier mean",
         criterion_replication_harness},
        {"qc checks: name leak, cli leak, length bounds on 3+3 fixtures",
         criterion_qc_checks},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        if (check.failures.empty()) {
            std::printf("PASS  %s\n", criterion.name.c_str());
        } else {
            ++failures;
            std::printf("FAIL  %s\n", criterion.name.c_str());
            std::size_t shown = 0;
            for (const auto& failure : check.failures) {
                if (++shown > 5) {
                    std::printf("      ... and %zu more\n", check.failures.size() - 5);
                    break;
                }
                std::printf("      %s\n", failure.c_str());
            }
        }
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}

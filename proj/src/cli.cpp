#include "skillrank/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skillrank/bench.hpp"
#include "skillrank/config.hpp"
#include "skillrank/io.hpp"
#include "skillrank/manifest.hpp"
#include "skillrank/objectives.hpp"
#include "skillrank/prompts.hpp"
#include "skillrank/types.hpp"

namespace skillrank::cli {

namespace {

using nlohmann::json;

struct Context {
    EngineConfig config;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string command_line;
};

RunManifest base_manifest(const Context& ctx) {
    RunManifest manifest;
    manifest.command_line = ctx.command_line;
    manifest.config_json = config_to_json(ctx.config);
    manifest.seed = ctx.seed;
    if (!ctx.config_path.empty()) manifest.input_files.push_back(ctx.config_path);
    return manifest;
}

// An index file announces itself via the header's "format" field.
std::string sniff_index_format(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open index file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("index file is empty: " + path);
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded()) throw ParseError("index file has no JSON header: " + path);
    return header.value("format", "");
}

struct LoadedRetriever {
    std::unique_ptr<Bm25Index> bm25;
    std::unique_ptr<VectorIndex> vectors;
    std::unique_ptr<EmbeddingProvider> provider;
    std::unique_ptr<Retriever> retriever;
    std::string kind;
};

LoadedRetriever load_retriever(const std::string& index_path, const EngineConfig& config) {
    LoadedRetriever loaded;
    const std::string format = sniff_index_format(index_path);
    if (format == "skillrank.bm25") {
        loaded.bm25 = std::make_unique<Bm25Index>(load_bm25_file(index_path));
        loaded.retriever = std::make_unique<Bm25Retriever>(*loaded.bm25);
        loaded.kind = "bm25";
    } else if (format == "skillrank.vectors") {
        loaded.vectors = std::make_unique<VectorIndex>(load_vector_index_file(index_path));
        loaded.provider = make_embedding_provider(config);
        loaded.retriever = std::make_unique<DenseRetriever>(
            *loaded.vectors, *loaded.provider, config.instruction, config.encoder_caps);
        loaded.kind = "dense";
    } else {
        throw ParseError("unrecognized index format '" + format + "' in " + index_path);
    }
    return loaded;
}

struct LoadedReranker {
    std::unique_ptr<RerankProvider> scored;
    std::unique_ptr<JudgeProvider> judge;
    std::unique_ptr<RerankStage> stage;
};

LoadedReranker make_rerank_stage(const std::string& kind, const SkillPool& pool,
                                 const EngineConfig& config, SkillFormat format) {
    LoadedReranker loaded;
    if (kind == "none") return loaded;
    if (kind == "scored") {
        loaded.scored = make_rerank_provider(config);
        loaded.stage = std::make_unique<ScoredRerankStage>(pool, *loaded.scored,
                                                           config.reranker_caps, format);
        return loaded;
    }
    if (kind == "judge") {
        loaded.judge = make_judge_provider(config);
        loaded.stage = std::make_unique<JudgeRerankStage>(pool, *loaded.judge,
                                                          config.reranker_caps, format);
        return loaded;
    }
    throw ValidationError("unknown reranker kind '" + kind + "' (none|scored|judge)");
}

json filter_report_json(const FilterReport& report) {
    return {{"removed_by_name", report.removed_by_name},
            {"removed_by_trigram", report.removed_by_trigram},
            {"removed_by_embedding", report.removed_by_embedding},
            {"total_removed", report.total_removed()},
            {"total_seen", report.total_seen}};
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

// --- pool ------------------------------------------------------------------

void run_pool_load(Context& ctx, const std::string& input, const std::string& skill_md_dir,
                   const std::string& tier, const std::string& output) {
    const Tier t = tier_from_name(tier);
    SkillPool pool;
    std::string source;
    if (!skill_md_dir.empty()) {
        pool = load_skill_md_dir(skill_md_dir, t);
        source = skill_md_dir;
    } else if (!input.empty()) {
        pool = load_pool_file(input, t);
        source = input;
    } else {
        throw ValidationError("pool load: need --input or --skill-md-dir");
    }
    write_pool_file(output, pool);

    RunManifest manifest = base_manifest(ctx);
    if (!input.empty()) manifest.input_files.push_back(input);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "loaded " << pool.size() << " skills (" << tier_name(pool.tier) << ") from "
              << source << " -> " << output << '\n';
}

void run_pool_dedup(Context& ctx, const std::string& input, const std::string& tier,
                    const std::string& output) {
    // Duplicate ids are tolerated here on purpose; this is the cleaner.
    std::ifstream in(input);
    if (!in) throw Error("cannot open file: " + input);
    SkillPool raw;
    raw.tier = tier_from_name(tier);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw ParseError(input + ":" + std::to_string(line_no) + ": invalid JSON record");
        }
        Skill skill;
        skill.id = record.value("id", "");
        skill.name = record.value("name", "");
        if (skill.id.empty() || skill.name.empty()) {
            throw ParseError(input + ":" + std::to_string(line_no) +
                             ": record needs 'id' and 'name'");
        }
        skill.description = record.value("description", "");
        skill.body = record.value("body", "");
        skill.category = record.value("category", std::string(kUncategorized));
        raw.skills.push_back(std::move(skill));
    }

    const DedupResult result = dedup_by_id(raw);
    write_pool_file(output, result.pool);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(input);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "removed " << result.removed << " duplicate ids, kept "
              << result.pool.size() << " -> " << output << '\n';
}

void run_pool_audit(const std::string& input, const std::string& tier) {
    const SkillPool pool = load_pool_file(input, tier_from_name(tier));
    const MetadataAudit audit = audit_pool(pool);
    json out = {{"skills", pool.size()},
                {"fraction_empty_descriptions", audit.fraction_empty_descriptions},
                {"fraction_desc_under_10_words", audit.fraction_desc_under_10_words},
                {"fraction_desc_under_25_words", audit.fraction_desc_under_25_words},
                {"median_desc_words", audit.median_desc_words},
                {"median_body_words", audit.median_body_words},
                {"p90_body_words", audit.p90_body_words}};
    std::cout << out.dump(2) << '\n';
}

void run_pool_assemble(Context& ctx, const std::string& base_path,
                       const std::string& distractors_path, const std::string& output) {
    const SkillPool base = load_pool_file(base_path, Tier::easy);
    const SkillPool distractors = load_pool_file(distractors_path, Tier::custom);
    const SkillPool hard = assemble_tier(base, distractors);
    write_pool_file(output, hard);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(base_path);
    manifest.input_files.push_back(distractors_path);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "assembled hard tier: " << base.size() << " + " << distractors.size()
              << " = " << hard.size() << " -> " << output << '\n';
}

void run_pool_dedup_functional(Context& ctx, const std::string& input,
                               const std::string& queries_path, const std::string& tier,
                               const std::string& output, const std::string& pairs_log) {
    const SkillPool pool = load_pool_file(input, tier_from_name(tier));
    const auto queries = load_queries_file(queries_path);
    std::vector<std::string> gt_ids;
    std::unordered_set<std::string> seen;
    for (const auto& query : queries) {
        for (const auto& id : query.gt_ids) {
            if (seen.insert(id).second) gt_ids.push_back(id);
        }
    }

    const Bm25Index bm25 = Bm25Index::build(pool, ctx.config.encoder_caps, SkillFormat::full,
                                            ctx.config.bm25);
    const auto judge = make_equivalence_judge(ctx.config);
    const FunctionalDedupResult result =
        remove_functional_duplicates(pool, gt_ids, bm25, *judge);
    write_pool_file(output, result.pool);

    if (!pairs_log.empty()) {
        std::ofstream log(pairs_log);
        if (!log) throw Error("cannot write file: " + pairs_log);
        for (const auto& pair : result.removed) {
            log << json{{"gt_id", pair.gt_id}, {"removed_id", pair.removed_id}}.dump()
                << '\n';
        }
        for (const auto& pair : result.skipped) {
            log << json{{"gt_id", pair.gt_id},
                        {"candidate_id", pair.removed_id},
                        {"skipped", true}}
                       .dump()
                << '\n';
        }
    }

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(input);
    manifest.input_files.push_back(queries_path);
    manifest.providers.emplace_back("equivalence_judge", judge->name());
    manifest.output_files.push_back(output);
    if (!pairs_log.empty()) manifest.output_files.push_back(pairs_log);
    write_manifest(output, manifest);
    std::cout << "removed " << result.removed.size() << " functionally equivalent skills ("
              << result.skipped.size() << " pairs skipped on judge failure) -> " << output
              << '\n';
}

// --- index -----------------------------------------------------------------

void run_index_bm25(Context& ctx, const std::string& pool_path, const std::string& format,
                    const std::string& output) {
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const Bm25Index index = Bm25Index::build(pool, ctx.config.encoder_caps,
                                             format_from_name(format), ctx.config.bm25);
    save_bm25_file(output, index);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(pool_path);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "bm25 index over " << index.doc_count() << " documents (" << format
              << ") -> " << output << '\n';
}

void run_index_dense(Context& ctx, const std::string& pool_path, const std::string& format,
                     const std::string& output) {
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const auto provider = make_embedding_provider(ctx.config);
    EmbedPoolOptions options;
    options.format = format_from_name(format);
    options.caps = ctx.config.encoder_caps;
    options.batch_size = ctx.config.embedding.batch_size;
    options.retries = ctx.config.embedding.retries;
    const VectorIndex index = embed_pool(pool, *provider, options);
    save_vector_index_file(output, index);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(pool_path);
    manifest.providers.emplace_back("embedding", provider->name());
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "dense index " << index.size() << "x" << index.dimension() << " (" << format
              << ") -> " << output << '\n';
}

void run_index_ann(Context& ctx, const std::string& input, const std::string& output,
                   double recall_target) {
    VectorIndex index = load_vector_index_file(input);
    AnnParams params = ctx.config.ann;
    if (recall_target > 0.0) params.recall_target = recall_target;
    index.enable_ann(params);
    save_vector_index_file(output, index);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(input);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "ann index: " << index.ann_params().clusters << " clusters, "
              << index.ann_params().probes << " probes, recall target "
              << index.ann_params().recall_target << " -> " << output << '\n';
}

// --- route -----------------------------------------------------------------

void run_route(Context& ctx, const std::string& index_path, const std::string& query_text,
               const std::string& queries_path, const std::string& from_run_path,
               const std::string& pool_path, std::size_t k,
               const std::string& reranker_kind, const std::string& format,
               const std::string& output) {
    SkillPool pool;
    LoadedReranker reranker;
    if (reranker_kind != "none") {
        if (pool_path.empty()) {
            throw ValidationError("route: --pool is required when --reranker is not 'none'");
        }
        pool = load_pool_file(pool_path, Tier::custom);
        reranker =
            make_rerank_stage(reranker_kind, pool, ctx.config, format_from_name(format));
    }

    std::vector<Ranking> rankings;
    std::size_t flagged = 0;
    LoadedRetriever loaded;

    if (!from_run_path.empty()) {
        // Offline reranking of an externally produced candidate dump: the
        // run file supplies each query's candidate window, no retrieval.
        if (!reranker.stage) {
            throw ValidationError("route: --from-run needs --reranker scored|judge");
        }
        if (queries_path.empty()) {
            throw ValidationError("route: --from-run needs --queries for the query texts");
        }
        const auto queries = load_queries_file(queries_path);
        std::unordered_map<std::string, const TaskQuery*> by_id;
        for (const auto& query : queries) by_id.emplace(query.id, &query);
        for (Ranking candidates : load_run_file(from_run_path)) {
            const auto it = by_id.find(candidates.query_id);
            if (it == by_id.end()) {
                throw ValidationError("route: run query '" + candidates.query_id +
                                      "' missing from --queries");
            }
            if (candidates.hits.size() > k) candidates.hits.resize(k);
            bool query_flagged = false;
            Ranking reranked = candidates.empty()
                                   ? candidates
                                   : reranker.stage->apply(it->second->text, candidates,
                                                           query_flagged);
            reranked.query_id = candidates.query_id;
            flagged += query_flagged ? 1 : 0;
            rankings.push_back(std::move(reranked));
        }
    } else {
        if (index_path.empty()) throw ValidationError("route: need --index or --from-run");
        loaded = load_retriever(index_path, ctx.config);

        std::vector<TaskQuery> queries;
        if (!queries_path.empty()) {
            queries = load_queries_file(queries_path);
        } else if (!query_text.empty()) {
            queries.push_back({"q1", query_text, {}, "", ""});
        } else {
            throw ValidationError("route: need --query or --queries");
        }
        rankings.reserve(queries.size());
        for (const TaskQuery& query : queries) {
            RouteResult result =
                route(query.text, *loaded.retriever, reranker.stage.get(), k, query.id);
            flagged += result.judge_flagged ? 1 : 0;
            rankings.push_back(std::move(result.ranking));
        }
    }

    if (!output.empty()) {
        write_run_file(output, rankings);
        RunManifest manifest = base_manifest(ctx);
        if (!index_path.empty()) manifest.input_files.push_back(index_path);
        if (!from_run_path.empty()) manifest.input_files.push_back(from_run_path);
        if (!queries_path.empty()) manifest.input_files.push_back(queries_path);
        if (!pool_path.empty()) manifest.input_files.push_back(pool_path);
        if (loaded.retriever) {
            manifest.providers.emplace_back("retriever", loaded.retriever->name());
        }
        if (reranker.stage) manifest.providers.emplace_back("reranker", reranker.stage->name());
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
    if (rankings.size() == 1 || output.empty()) {
        for (const Ranking& ranking : rankings) {
            for (std::size_t r = 0; r < ranking.hits.size(); ++r) {
                std::cout << ranking.query_id << '\t' << (r + 1) << '\t'
                          << ranking.hits[r].skill_id << '\t' << ranking.hits[r].score << '\n';
            }
        }
    }
    if (!output.empty()) {
        std::cout << "routed " << rankings.size() << " queries (k=" << k << ", reranker="
                  << reranker_kind << ", " << flagged << " judge-flagged) -> " << output
                  << '\n';
    }
}

// --- forge -----------------------------------------------------------------

void run_forge_mine(Context& ctx, const std::string& requests_path,
                    const std::string& pool_path, const std::string& dense_path,
                    const std::string& bm25_path, const std::string& deny_path,
                    const std::string& output) {
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const VectorIndex vectors = load_vector_index_file(dense_path);
    const Bm25Index bm25 = load_bm25_file(bm25_path);
    const auto provider = make_embedding_provider(ctx.config);

    std::unordered_set<std::string> deny;
    if (!deny_path.empty()) {
        std::ifstream in(deny_path);
        if (!in) throw Error("cannot open file: " + deny_path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) deny.insert(line);
        }
    }

    MinerConfig miner_config;
    miner_config.mix = ctx.config.negative_mix;
    miner_config.neighborhood = ctx.config.mining_neighborhood;
    miner_config.instruction = ctx.config.instruction;
    miner_config.caps = ctx.config.encoder_caps;
    const NegativeMiner miner(pool, vectors, bm25, *provider, miner_config, std::move(deny));

    const auto requests = load_mining_requests(requests_path);
    const std::uint64_t base_seed = ctx.seed.value_or(0);
    std::vector<TrainingExample> examples;
    examples.reserve(requests.size());
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        // Per-request seed derived from the base seed and position.
        const std::uint64_t seed = base_seed ^ fnv1a64(requests[i].id.empty()
                                                           ? std::to_string(i)
                                                           : requests[i].id);
        TrainingExample example =
            miner.mine(requests[i].text, requests[i].positive_id, seed, requests[i].id);
        flagged += example.flagged ? 1 : 0;
        examples.push_back(std::move(example));
    }
    write_examples_file(output, examples);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(requests_path);
    manifest.input_files.push_back(pool_path);
    manifest.input_files.push_back(dense_path);
    manifest.input_files.push_back(bm25_path);
    if (!deny_path.empty()) manifest.input_files.push_back(deny_path);
    manifest.providers.emplace_back("embedding", provider->name());
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << "mined " << examples.size() << " examples (" << flagged << " flagged) -> "
              << output << '\n';
}

void run_forge_filter(Context& ctx, const std::string& examples_path,
                      const std::string& pool_path, const std::string& embeddings_path,
                      const std::string& gt_path, const std::string& output) {
    const auto examples = load_examples_file(examples_path);
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const VectorIndex vectors = load_vector_index_file(embeddings_path);
    GtLookup lookup;
    if (!gt_path.empty()) lookup = gt_lookup_from_queries(load_queries_file(gt_path));

    const FilterResult result =
        filter_false_negatives(examples, pool, lookup, vectors, ctx.config.thresholds);
    write_examples_file(output, result.examples);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(examples_path);
    manifest.input_files.push_back(pool_path);
    manifest.input_files.push_back(embeddings_path);
    if (!gt_path.empty()) manifest.input_files.push_back(gt_path);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << filter_report_json(result.report).dump(2) << '\n';
}

void run_forge_groups(Context& ctx, const std::string& queries_path,
                      const std::string& pool_path, const std::string& index_path,
                      const std::string& embeddings_path, std::size_t k,
                      const std::string& output) {
    const auto queries = load_queries_file(queries_path);
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const LoadedRetriever loaded = load_retriever(index_path, ctx.config);
    const VectorIndex vectors = embeddings_path.empty()
                                    ? load_vector_index_file(index_path)
                                    : load_vector_index_file(embeddings_path);

    const ListwiseBuildResult result = build_listwise_groups(
        queries, *loaded.retriever, k, pool, vectors, ctx.config.thresholds);
    write_groups_file(output, result.groups);

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(queries_path);
    manifest.input_files.push_back(pool_path);
    manifest.input_files.push_back(index_path);
    if (!embeddings_path.empty()) manifest.input_files.push_back(embeddings_path);
    manifest.providers.emplace_back("retriever", loaded.retriever->name());
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);

    json summary = {{"groups", result.groups.size()},
                    {"dropped_no_positive", result.dropped_no_positive},
                    {"dropped_short", result.dropped_short},
                    {"replaced", result.replaced},
                    {"filter", filter_report_json(result.filter)}};
    std::cout << summary.dump(2) << '\n';
}

void run_forge_qc(Context& ctx, const std::string& queries_path, const std::string& pool_path,
                  const std::string& style, const std::string& output) {
    const auto queries = load_queries_file(queries_path);
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const IdIndex by_id = build_id_index(pool);
    const QueryStyle query_style = query_style_from_name(style);

    std::ofstream out(output);
    if (!out) throw Error("cannot write file: " + output);
    std::size_t violations = 0;
    for (const TaskQuery& query : queries) {
        for (const auto& gt : query.gt_ids) {
            const auto it = by_id.find(gt);
            if (it == by_id.end()) {
                throw ValidationError("forge qc: GT skill '" + gt + "' is not in the pool");
            }
            for (const QCViolation& violation :
                 qc_check(query.text, pool.skills[it->second], query_style)) {
                ++violations;
                out << json{{"query_id", query.id},
                            {"skill_id", gt},
                            {"kind", std::string(qc_kind_name(violation.kind))},
                            {"detail", violation.detail}}
                           .dump()
                    << '\n';
            }
        }
    }

    RunManifest manifest = base_manifest(ctx);
    manifest.input_files.push_back(queries_path);
    manifest.input_files.push_back(pool_path);
    manifest.output_files.push_back(output);
    write_manifest(output, manifest);
    std::cout << violations << " violations -> " << output << '\n';
}

void run_forge_prompts(Context& ctx, const std::string& output_dir) {
    write_prompt_files(output_dir);
    RunManifest manifest = base_manifest(ctx);
    for (const PromptTemplate* tmpl : all_prompt_templates()) {
        manifest.output_files.push_back(output_dir + "/" + tmpl->name + ".v" +
                                        std::to_string(tmpl->version) + ".txt");
    }
    write_manifest(output_dir + "/prompts", manifest);
    std::cout << "wrote " << all_prompt_templates().size() << " prompt templates to "
              << output_dir << '\n';
}

// --- objectives --------------------------------------------------------------

int run_objectives_check(Context& ctx, std::size_t instances, double tolerance) {
    std::mt19937_64 rng(ctx.seed.value_or(7));
    auto uniform = [&rng](double lo, double hi) {
        // Engine-driven for cross-platform reproducibility.
        const double unit =
            static_cast<double>(rng() >> 11) / static_cast<double>(1ULL << 53);
        return lo + unit * (hi - lo);
    };

    double worst_info_nce = 0.0, worst_listwise = 0.0, worst_pointwise = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        const Eigen::Index batch = 3 + static_cast<Eigen::Index>(i % 4);
        Eigen::MatrixXd sim(batch, batch);
        for (Eigen::Index r = 0; r < batch; ++r) {
            for (Eigen::Index c = 0; c < batch; ++c) sim(r, c) = uniform(-1.0, 1.0);
        }
        const double tau = ctx.config.tau_encoder;
        LossFn nce = [tau, batch](const Eigen::VectorXd& point) {
            const Eigen::MatrixXd m =
                Eigen::Map<const Eigen::MatrixXd>(point.data(), batch, batch);
            const InfoNceResult r = info_nce(m, tau);
            return std::make_pair(r.loss,
                                  Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                      r.grad.data(), r.grad.size())));
        };
        worst_info_nce = std::max(
            worst_info_nce,
            finite_diff_check(nce, Eigen::Map<Eigen::VectorXd>(sim.data(), sim.size())));

        const Eigen::Index k = 20;
        Eigen::VectorXd scores(k);
        for (Eigen::Index j = 0; j < k; ++j) scores[j] = uniform(-5.0, 5.0);
        const auto positive = static_cast<Eigen::Index>(rng() % k);
        const double tau_lw = ctx.config.tau_listwise;
        LossFn lw = [tau_lw, positive](const Eigen::VectorXd& point) {
            const ListwiseResult r = listwise_ce(point, positive, tau_lw);
            return std::make_pair(r.loss, r.grad);
        };
        worst_listwise = std::max(worst_listwise, finite_diff_check(lw, scores));

        Eigen::VectorXd labels(k);
        for (Eigen::Index j = 0; j < k; ++j) labels[j] = (rng() % 2 == 0) ? 0.0 : 1.0;
        LossFn pw = [labels](const Eigen::VectorXd& point) {
            const ListwiseResult r = pointwise_bce(point, labels);
            return std::make_pair(r.loss, r.grad);
        };
        worst_pointwise = std::max(worst_pointwise, finite_diff_check(pw, scores));
    }

    json out = {{"instances", instances},
                {"max_abs_error", {{"info_nce", worst_info_nce},
                                   {"listwise_ce", worst_listwise},
                                   {"pointwise_bce", worst_pointwise}}},
                {"tolerance", tolerance}};
    std::cout << out.dump(2) << '\n';
    const bool ok = worst_info_nce < tolerance && worst_listwise < tolerance &&
                    worst_pointwise < tolerance;
    return ok ? 0 : 1;
}

// --- eval --------------------------------------------------------------------

void run_eval_run(Context& ctx, const std::string& run_path, const std::string& relevance_path,
                  const std::string& pool_path, const std::string& name,
                  const std::string& output) {
    const auto rankings = load_run_file(run_path);
    const auto queries = load_queries_file(relevance_path);
    const RelevanceSet relevance = RelevanceSet::from_queries(queries);

    StrataLabels labels;
    const StrataLabels* labels_ptr = nullptr;
    if (!pool_path.empty()) {
        const SkillPool pool = load_pool_file(pool_path, Tier::custom);
        labels = quartile_labels(quartile_stratify(relevance, pool));
        labels_ptr = &labels;
    }

    const MetricsReport report = evaluate_run(rankings, relevance, labels_ptr);
    std::cout << format_comparison_table({{name, report}}) << '\n'
              << format_report(report);
    if (!output.empty()) {
        write_text_file(output, report_to_json(report));
        RunManifest manifest = base_manifest(ctx);
        manifest.input_files.push_back(run_path);
        manifest.input_files.push_back(relevance_path);
        if (!pool_path.empty()) manifest.input_files.push_back(pool_path);
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
}

void run_eval_decompose(Context& ctx, const std::string& encoder_path,
                        const std::string& pipeline_path, const std::string& relevance_path,
                        const std::string& output) {
    const auto encoder_rankings = load_run_file(encoder_path);
    const auto pipeline_rankings = load_run_file(pipeline_path);
    const RelevanceSet relevance =
        RelevanceSet::from_queries(load_queries_file(relevance_path));

    const Decomposition d = decompose(encoder_rankings, pipeline_rankings, relevance);
    std::cout << format_decomposition(d);
    if (!output.empty()) {
        json out = {{"both_correct", d.both_correct},
                    {"fixed", d.fixed},
                    {"degraded", d.degraded},
                    {"both_missed", d.both_missed},
                    {"encoder_hits", d.encoder_hits()},
                    {"pipeline_hits", d.pipeline_hits()},
                    {"total", d.total()}};
        write_text_file(output, out.dump(2));
        RunManifest manifest = base_manifest(ctx);
        manifest.input_files.push_back(encoder_path);
        manifest.input_files.push_back(pipeline_path);
        manifest.input_files.push_back(relevance_path);
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
}

void run_eval_ablate(Context& ctx, const std::string& queries_path,
                     const std::string& index_path, const std::string& pool_path,
                     const std::string& reranker_kind, const std::string& k_set,
                     const std::string& output) {
    const auto queries = load_queries_file(queries_path);
    const RelevanceSet relevance = RelevanceSet::from_queries(queries);
    const LoadedRetriever loaded = load_retriever(index_path, ctx.config);

    SkillPool pool;
    LoadedReranker reranker;
    if (reranker_kind != "none") {
        if (pool_path.empty()) {
            throw ValidationError("eval ablate: --pool is required with a reranker");
        }
        pool = load_pool_file(pool_path, Tier::custom);
        reranker = make_rerank_stage(reranker_kind, pool, ctx.config, SkillFormat::full);
    }

    std::vector<std::size_t> k_values;
    std::stringstream ss{k_set};
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) k_values.push_back(std::stoul(item));
    }
    if (k_values.empty()) throw ValidationError("eval ablate: empty --k-set");

    const auto rows =
        topk_ablation(queries, *loaded.retriever, reranker.stage.get(), k_values, relevance);

    std::vector<std::pair<std::string, MetricsReport>> table;
    json out = json::array();
    for (const auto& row : rows) {
        table.emplace_back("K=" + std::to_string(row.k), row.report);
        out.push_back({{"k", row.k},
                       {"retriever_recall_at_k", row.retriever_recall_at_k},
                       {"retriever_any_gt_at_k", row.retriever_any_gt_at_k},
                       {"report", json::parse(report_to_json(row.report))}});
    }
    std::cout << format_comparison_table(table);
    for (const auto& row : rows) {
        std::cout << "retriever recall@" << row.k << ": " << row.retriever_recall_at_k
                  << "  any-GT coverage @" << row.k << ": " << row.retriever_any_gt_at_k
                  << '\n';
    }
    if (!output.empty()) {
        write_text_file(output, out.dump(2));
        RunManifest manifest = base_manifest(ctx);
        manifest.input_files.push_back(queries_path);
        manifest.input_files.push_back(index_path);
        if (!pool_path.empty()) manifest.input_files.push_back(pool_path);
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
}

void run_eval_stratify(Context& ctx, const std::string& relevance_path,
                       const std::string& pool_path, const std::string& output) {
    const RelevanceSet relevance =
        RelevanceSet::from_queries(load_queries_file(relevance_path));
    const SkillPool pool = load_pool_file(pool_path, Tier::custom);
    const QuartileStrata strata = quartile_stratify(relevance, pool);

    json out;
    out["cut_points"] = strata.cut_points;
    out["degenerate"] = strata.degenerate;
    out["skill_quartile"] = strata.skill_quartile;
    out["query_quartile"] = strata.query_quartile;
    std::cout << "quartile cut points: Q1<=" << strata.cut_points[0] << ", Q2<="
              << strata.cut_points[1] << ", Q3<=" << strata.cut_points[2]
              << (strata.degenerate ? " (degenerate)" : "") << '\n';
    if (!output.empty()) {
        write_text_file(output, out.dump(2));
        RunManifest manifest = base_manifest(ctx);
        manifest.input_files.push_back(relevance_path);
        manifest.input_files.push_back(pool_path);
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
}

// --- bench -------------------------------------------------------------------

void run_bench(Context& ctx, const std::string& queries_path, const std::string& index_path,
               const std::string& pool_path, const std::string& reranker_kind, std::size_t k,
               std::size_t concurrency, const std::string& output) {
    const auto queries = load_queries_file(queries_path);
    const LoadedRetriever loaded = load_retriever(index_path, ctx.config);

    SkillPool pool;
    LoadedReranker reranker;
    if (reranker_kind != "none") {
        if (pool_path.empty()) {
            throw ValidationError("bench: --pool is required with a reranker");
        }
        pool = load_pool_file(pool_path, Tier::custom);
        reranker = make_rerank_stage(reranker_kind, pool, ctx.config, SkillFormat::full);
    }

    std::vector<std::string> texts;
    texts.reserve(queries.size());
    for (const auto& query : queries) texts.push_back(query.text);

    BenchOptions options;
    options.warmup = ctx.config.bench_warmup;
    options.concurrency = concurrency;
    const RerankStage* stage = reranker.stage.get();
    const Retriever& retriever = *loaded.retriever;
    const LatencyReport report = time_queries(
        [&](const std::string& text) { route(text, retriever, stage, k); }, texts, options);

    std::cout << format_latency_report(report);
    if (!output.empty()) {
        json out = {{"p50_ms", report.p50_ms},
                    {"p95_ms", report.p95_ms},
                    {"qps", report.qps},
                    {"n_queries", report.n_queries},
                    {"warmup", report.warmup_count},
                    {"failures", report.failures},
                    {"concurrency", report.concurrency},
                    {"drive_mode", report.drive_mode},
                    {"latencies_ms", report.latencies_ms}};
        write_text_file(output, out.dump(2));
        RunManifest manifest = base_manifest(ctx);
        manifest.input_files.push_back(queries_path);
        manifest.input_files.push_back(index_path);
        if (!pool_path.empty()) manifest.input_files.push_back(pool_path);
        manifest.providers.emplace_back("retriever", loaded.retriever->name());
        if (reranker.stage) manifest.providers.emplace_back("reranker", reranker.stage->name());
        manifest.output_files.push_back(output);
        write_manifest(output, manifest);
    }
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"skillrank: full-text skill routing engine"};
    app.require_subcommand(1);

    Context ctx;
    std::string config_path;
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "engine config file (JSON)");
    app.add_option("--seed", seed_value, "seed for randomized commands")
        ->each([&seed_set](const std::string&) { seed_set = true; });

    // pool
    auto* pool_cmd = app.add_subcommand("pool", "load, audit, and assemble skill pools");
    std::string pool_input, pool_md_dir, pool_tier = "custom", pool_output;
    std::string pool_base, pool_distractors, pool_queries, pool_pairs_log;

    auto* pool_load = pool_cmd->add_subcommand("load", "validate and normalize a pool");
    pool_load->add_option("--input", pool_input, "pool records (jsonl)");
    pool_load->add_option("--skill-md-dir", pool_md_dir, "directory of SKILL.md documents");
    pool_load->add_option("--tier", pool_tier, "easy|hard|custom");
    pool_load->add_option("--output", pool_output)->required();

    auto* pool_dedup = pool_cmd->add_subcommand("dedup", "drop exact duplicate ids");
    pool_dedup->add_option("--input", pool_input)->required();
    pool_dedup->add_option("--tier", pool_tier, "easy|hard|custom");
    pool_dedup->add_option("--output", pool_output)->required();

    auto* pool_audit = pool_cmd->add_subcommand("audit", "metadata audit of a pool");
    pool_audit->add_option("--input", pool_input)->required();
    pool_audit->add_option("--tier", pool_tier, "easy|hard|custom");

    auto* pool_assemble =
        pool_cmd->add_subcommand("assemble-tier", "base + distractors = hard tier");
    pool_assemble->add_option("--base", pool_base)->required();
    pool_assemble->add_option("--distractors", pool_distractors)->required();
    pool_assemble->add_option("--output", pool_output)->required();

    auto* pool_dedup_fn = pool_cmd->add_subcommand(
        "dedup-functional", "remove pool entries functionally equivalent to GT skills");
    pool_dedup_fn->add_option("--input", pool_input)->required();
    pool_dedup_fn->add_option("--queries", pool_queries, "relevance file with gt_ids")
        ->required();
    pool_dedup_fn->add_option("--tier", pool_tier, "easy|hard|custom");
    pool_dedup_fn->add_option("--output", pool_output)->required();
    pool_dedup_fn->add_option("--pairs-log", pool_pairs_log, "removed/skipped pair log");

    // index
    auto* index_cmd = app.add_subcommand("index", "build retrieval indexes");
    std::string index_pool, index_format = "full", index_output, index_input;
    double index_recall_target = 0.0;

    auto* index_bm25 = index_cmd->add_subcommand("bm25", "build the BM25 index");
    index_bm25->add_option("--pool", index_pool)->required();
    index_bm25->add_option("--format", index_format, "nd|full");
    index_bm25->add_option("--output", index_output)->required();

    auto* index_dense = index_cmd->add_subcommand("dense", "embed the pool into a vector index");
    index_dense->add_option("--pool", index_pool)->required();
    index_dense->add_option("--format", index_format, "nd|full");
    index_dense->add_option("--output", index_output)->required();

    auto* index_ann = index_cmd->add_subcommand("ann", "switch a dense index to approximate mode");
    index_ann->add_option("--input", index_input)->required();
    index_ann->add_option("--recall-target", index_recall_target, "override config target");
    index_ann->add_option("--output", index_output)->required();

    // route
    std::string route_index, route_query, route_queries, route_from_run, route_pool,
        route_output;
    std::string route_reranker = "none", route_format = "full";
    std::size_t route_k = 20;
    auto* route_cmd = app.add_subcommand("route", "retrieve (and optionally rerank) queries");
    route_cmd->add_option("--index", route_index, "bm25 or dense index file");
    route_cmd->add_option("--query", route_query, "single query text");
    route_cmd->add_option("--queries", route_queries, "query file (jsonl)");
    route_cmd->add_option("--from-run", route_from_run,
                          "rerank an existing candidate dump instead of retrieving");
    route_cmd->add_option("--pool", route_pool, "pool file (needed for reranking)");
    route_cmd->add_option("--k", route_k, "candidate list size");
    route_cmd->add_option("--reranker", route_reranker, "none|scored|judge");
    route_cmd->add_option("--format", route_format, "nd|full (reranker input)");
    route_cmd->add_option("--output", route_output, "run file to write");

    // forge
    auto* forge_cmd = app.add_subcommand("forge", "construct training data");
    std::string forge_requests, forge_pool, forge_dense, forge_bm25, forge_deny, forge_output;
    std::string forge_examples, forge_embeddings, forge_gt, forge_queries, forge_index;
    std::string forge_style = "scenario", forge_prompt_dir;
    std::size_t forge_k = 20;

    auto* forge_mine = forge_cmd->add_subcommand("mine", "multi-source hard-negative mining");
    forge_mine->add_option("--requests", forge_requests, "mining requests (jsonl)")->required();
    forge_mine->add_option("--pool", forge_pool)->required();
    forge_mine->add_option("--dense", forge_dense, "dense index file")->required();
    forge_mine->add_option("--bm25", forge_bm25, "bm25 index file")->required();
    forge_mine->add_option("--deny", forge_deny, "deny-list file, one skill id per line");
    forge_mine->add_option("--output", forge_output)->required();

    auto* forge_filter = forge_cmd->add_subcommand("filter", "three-layer false-negative filter");
    forge_filter->add_option("--examples", forge_examples)->required();
    forge_filter->add_option("--pool", forge_pool)->required();
    forge_filter->add_option("--embeddings", forge_embeddings, "vector index file")->required();
    forge_filter->add_option("--gt", forge_gt, "relevance file for multi-GT queries");
    forge_filter->add_option("--output", forge_output)->required();

    auto* forge_groups = forge_cmd->add_subcommand("groups", "listwise reranker groups");
    forge_groups->add_option("--queries", forge_queries)->required();
    forge_groups->add_option("--pool", forge_pool)->required();
    forge_groups->add_option("--index", forge_index, "retriever index file")->required();
    forge_groups->add_option("--embeddings", forge_embeddings,
                             "vector index for the filter (defaults to --index)");
    forge_groups->add_option("--k", forge_k, "group size");
    forge_groups->add_option("--output", forge_output)->required();

    auto* forge_qc = forge_cmd->add_subcommand("qc", "query quality checks");
    forge_qc->add_option("--queries", forge_queries)->required();
    forge_qc->add_option("--pool", forge_pool)->required();
    forge_qc->add_option("--style", forge_style, "scenario|developer|indirect");
    forge_qc->add_option("--output", forge_output)->required();

    auto* forge_prompts = forge_cmd->add_subcommand("prompts", "write prompt template files");
    forge_prompts->add_option("--output", forge_prompt_dir)->required();

    // objectives
    auto* objectives_cmd = app.add_subcommand("objectives", "training objective checks");
    std::size_t obj_instances = 50;
    double obj_tolerance = 1e-6;
    auto* obj_check =
        objectives_cmd->add_subcommand("check-gradients", "finite-difference validation");
    obj_check->add_option("--instances", obj_instances);
    obj_check->add_option("--tolerance", obj_tolerance);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metrics and diagnostics");
    std::string eval_run_path, eval_relevance, eval_pool, eval_name = "run", eval_output;
    std::string eval_encoder_run, eval_pipeline_run, eval_queries, eval_index;
    std::string eval_reranker = "none", eval_k_set = "10,20,50";

    auto* eval_run_cmd = eval_cmd->add_subcommand("run", "score a run file");
    eval_run_cmd->add_option("--run", eval_run_path)->required();
    eval_run_cmd->add_option("--relevance", eval_relevance)->required();
    eval_run_cmd->add_option("--pool", eval_pool, "enables description-quartile strata");
    eval_run_cmd->add_option("--name", eval_name, "row label");
    eval_run_cmd->add_option("--output", eval_output, "report JSON");

    auto* eval_decompose_cmd =
        eval_cmd->add_subcommand("decompose", "encoder vs pipeline Hit@1 breakdown");
    eval_decompose_cmd->add_option("--encoder-run", eval_encoder_run)->required();
    eval_decompose_cmd->add_option("--pipeline-run", eval_pipeline_run)->required();
    eval_decompose_cmd->add_option("--relevance", eval_relevance)->required();
    eval_decompose_cmd->add_option("--output", eval_output);

    auto* eval_ablate_cmd = eval_cmd->add_subcommand("ablate", "top-K candidate ablation");
    eval_ablate_cmd->add_option("--queries", eval_queries)->required();
    eval_ablate_cmd->add_option("--index", eval_index)->required();
    eval_ablate_cmd->add_option("--pool", eval_pool);
    eval_ablate_cmd->add_option("--reranker", eval_reranker, "none|scored|judge");
    eval_ablate_cmd->add_option("--k-set", eval_k_set, "comma-separated K values");
    eval_ablate_cmd->add_option("--output", eval_output);

    auto* eval_stratify_cmd =
        eval_cmd->add_subcommand("stratify", "description-length quartile labels");
    eval_stratify_cmd->add_option("--relevance", eval_relevance)->required();
    eval_stratify_cmd->add_option("--pool", eval_pool)->required();
    eval_stratify_cmd->add_option("--output", eval_output);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "online query-path timing");
    std::string bench_queries, bench_index, bench_pool, bench_reranker = "none", bench_output;
    std::size_t bench_k = 20, bench_concurrency = 4;

    auto* bench_latency = bench_cmd->add_subcommand("latency", "sequential latency percentiles");
    bench_latency->add_option("--queries", bench_queries)->required();
    bench_latency->add_option("--index", bench_index)->required();
    bench_latency->add_option("--pool", bench_pool);
    bench_latency->add_option("--reranker", bench_reranker, "none|scored|judge");
    bench_latency->add_option("--k", bench_k);
    bench_latency->add_option("--output", bench_output);

    auto* bench_throughput =
        bench_cmd->add_subcommand("throughput", "concurrent QPS measurement");
    bench_throughput->add_option("--queries", bench_queries)->required();
    bench_throughput->add_option("--index", bench_index)->required();
    bench_throughput->add_option("--pool", bench_pool);
    bench_throughput->add_option("--reranker", bench_reranker, "none|scored|judge");
    bench_throughput->add_option("--k", bench_k);
    bench_throughput->add_option("--concurrency", bench_concurrency);
    bench_throughput->add_option("--output", bench_output);

    // CLI11 consumes the vector back to front.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!config_path.empty()) ctx.config = load_config_file(config_path);
        ctx.config_path = config_path;
        if (seed_set) ctx.seed = seed_value;
        ctx.command_line = "skillrank";
        for (const auto& arg : args) ctx.command_line += " " + arg;

        if (pool_load->parsed()) {
            run_pool_load(ctx, pool_input, pool_md_dir, pool_tier, pool_output);
        } else if (pool_dedup->parsed()) {
            run_pool_dedup(ctx, pool_input, pool_tier, pool_output);
        } else if (pool_audit->parsed()) {
            run_pool_audit(pool_input, pool_tier);
        } else if (pool_assemble->parsed()) {
            run_pool_assemble(ctx, pool_base, pool_distractors, pool_output);
        } else if (pool_dedup_fn->parsed()) {
            run_pool_dedup_functional(ctx, pool_input, pool_queries, pool_tier, pool_output,
                                      pool_pairs_log);
        } else if (index_bm25->parsed()) {
            run_index_bm25(ctx, index_pool, index_format, index_output);
        } else if (index_dense->parsed()) {
            run_index_dense(ctx, index_pool, index_format, index_output);
        } else if (index_ann->parsed()) {
            run_index_ann(ctx, index_input, index_output, index_recall_target);
        } else if (route_cmd->parsed()) {
            run_route(ctx, route_index, route_query, route_queries, route_from_run,
                      route_pool, route_k, route_reranker, route_format, route_output);
        } else if (forge_mine->parsed()) {
            run_forge_mine(ctx, forge_requests, forge_pool, forge_dense, forge_bm25,
                           forge_deny, forge_output);
        } else if (forge_filter->parsed()) {
            run_forge_filter(ctx, forge_examples, forge_pool, forge_embeddings, forge_gt,
                             forge_output);
        } else if (forge_groups->parsed()) {
            run_forge_groups(ctx, forge_queries, forge_pool, forge_index, forge_embeddings,
                             forge_k, forge_output);
        } else if (forge_qc->parsed()) {
            run_forge_qc(ctx, forge_queries, forge_pool, forge_style, forge_output);
        } else if (forge_prompts->parsed()) {
            run_forge_prompts(ctx, forge_prompt_dir);
        } else if (obj_check->parsed()) {
            return run_objectives_check(ctx, obj_instances, obj_tolerance);
        } else if (eval_run_cmd->parsed()) {
            run_eval_run(ctx, eval_run_path, eval_relevance, eval_pool, eval_name, eval_output);
        } else if (eval_decompose_cmd->parsed()) {
            run_eval_decompose(ctx, eval_encoder_run, eval_pipeline_run, eval_relevance,
                               eval_output);
        } else if (eval_ablate_cmd->parsed()) {
            run_eval_ablate(ctx, eval_queries, eval_index, eval_pool, eval_reranker,
                            eval_k_set, eval_output);
        } else if (eval_stratify_cmd->parsed()) {
            run_eval_stratify(ctx, eval_relevance, eval_pool, eval_output);
        } else if (bench_latency->parsed()) {
            run_bench(ctx, bench_queries, bench_index, bench_pool, bench_reranker, bench_k, 1,
                      bench_output);
        } else if (bench_throughput->parsed()) {
            run_bench(ctx, bench_queries, bench_index, bench_pool, bench_reranker, bench_k,
                      bench_concurrency, bench_output);
        } else {
            std::cerr << app.help() << '\n';
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

}  // namespace skillrank::cli

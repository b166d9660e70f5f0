#include "skillrank/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace skillrank {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& scope) {
    for (const auto& [key, value] : object.items()) {
        if (!known.count(key)) {
            throw ValidationError("config: unknown key '" + scope + key + "'");
        }
    }
}

}  // namespace

EngineConfig config_from_json_text(const std::string& text) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ParseError("config: not a JSON object");
    }
    reject_unknown_keys(root,
                        {"encoder_caps", "reranker_caps", "query_instruction", "bm25", "ann",
                         "thresholds", "negative_mix", "mining_neighborhood", "top_k",
                         "tau_encoder", "tau_listwise", "bench_warmup", "embedding",
                         "reranker", "judge"},
                        "");

    EngineConfig config;
    if (root.contains("encoder_caps")) {
        const auto& caps = root.at("encoder_caps");
        reject_unknown_keys(caps, {"query_chars", "description_chars", "body_chars"},
                            "encoder_caps.");
        config.encoder_caps.query_chars =
            caps.value("query_chars", config.encoder_caps.query_chars);
        config.encoder_caps.description_chars =
            caps.value("description_chars", config.encoder_caps.description_chars);
        config.encoder_caps.body_chars =
            caps.value("body_chars", config.encoder_caps.body_chars);
    }
    if (root.contains("reranker_caps")) {
        const auto& caps = root.at("reranker_caps");
        reject_unknown_keys(caps, {"query_chars", "description_chars", "body_chars"},
                            "reranker_caps.");
        config.reranker_caps.query_chars =
            caps.value("query_chars", config.reranker_caps.query_chars);
        config.reranker_caps.description_chars =
            caps.value("description_chars", config.reranker_caps.description_chars);
        config.reranker_caps.body_chars =
            caps.value("body_chars", config.reranker_caps.body_chars);
    }
    if (root.contains("query_instruction")) {
        config.instruction.text = root.at("query_instruction").get<std::string>();
    }
    if (root.contains("bm25")) {
        const auto& bm25 = root.at("bm25");
        reject_unknown_keys(bm25, {"k1", "b"}, "bm25.");
        config.bm25.k1 = bm25.value("k1", config.bm25.k1);
        config.bm25.b = bm25.value("b", config.bm25.b);
    }
    if (root.contains("ann")) {
        const auto& ann = root.at("ann");
        reject_unknown_keys(ann,
                            {"recall_target", "clusters", "probes", "seed",
                             "kmeans_iterations"},
                            "ann.");
        config.ann.recall_target = ann.value("recall_target", config.ann.recall_target);
        config.ann.clusters = ann.value("clusters", config.ann.clusters);
        config.ann.probes = ann.value("probes", config.ann.probes);
        config.ann.seed = ann.value("seed", config.ann.seed);
        config.ann.kmeans_iterations =
            ann.value("kmeans_iterations", config.ann.kmeans_iterations);
    }
    if (root.contains("thresholds")) {
        const auto& thresholds = root.at("thresholds");
        reject_unknown_keys(thresholds, {"trigram_jaccard", "embedding_cosine"},
                            "thresholds.");
        config.thresholds.trigram =
            thresholds.value("trigram_jaccard", config.thresholds.trigram);
        config.thresholds.cosine =
            thresholds.value("embedding_cosine", config.thresholds.cosine);
    }
    if (root.contains("negative_mix")) {
        const auto& mix = root.at("negative_mix");
        reject_unknown_keys(mix, {"semantic", "lexical", "taxonomy", "random"},
                            "negative_mix.");
        config.negative_mix.semantic = mix.value("semantic", config.negative_mix.semantic);
        config.negative_mix.lexical = mix.value("lexical", config.negative_mix.lexical);
        config.negative_mix.taxonomy = mix.value("taxonomy", config.negative_mix.taxonomy);
        config.negative_mix.random = mix.value("random", config.negative_mix.random);
    }
    config.mining_neighborhood = root.value("mining_neighborhood", config.mining_neighborhood);
    config.top_k = root.value("top_k", config.top_k);
    config.tau_encoder = root.value("tau_encoder", config.tau_encoder);
    config.tau_listwise = root.value("tau_listwise", config.tau_listwise);
    config.bench_warmup = root.value("bench_warmup", config.bench_warmup);

    if (root.contains("embedding")) {
        const auto& embedding = root.at("embedding");
        reject_unknown_keys(
            embedding, {"kind", "dim", "path", "endpoint", "http_path", "batch_size",
                        "retries"},
            "embedding.");
        config.embedding.kind = embedding.value("kind", config.embedding.kind);
        config.embedding.dim = embedding.value("dim", config.embedding.dim);
        config.embedding.path = embedding.value("path", config.embedding.path);
        config.embedding.endpoint = embedding.value("endpoint", config.embedding.endpoint);
        config.embedding.http_path = embedding.value("http_path", config.embedding.http_path);
        config.embedding.batch_size =
            embedding.value("batch_size", config.embedding.batch_size);
        config.embedding.retries = embedding.value("retries", config.embedding.retries);
    }
    if (root.contains("reranker")) {
        const auto& reranker = root.at("reranker");
        reject_unknown_keys(reranker, {"kind", "endpoint", "http_path", "retries"},
                            "reranker.");
        config.reranker.kind = reranker.value("kind", config.reranker.kind);
        config.reranker.endpoint = reranker.value("endpoint", config.reranker.endpoint);
        config.reranker.http_path = reranker.value("http_path", config.reranker.http_path);
        config.reranker.retries = reranker.value("retries", config.reranker.retries);
    }
    if (root.contains("judge")) {
        const auto& judge = root.at("judge");
        reject_unknown_keys(judge, {"endpoint", "model", "temperature", "retries"}, "judge.");
        config.judge.endpoint = judge.value("endpoint", config.judge.endpoint);
        config.judge.model = judge.value("model", config.judge.model);
        config.judge.temperature = judge.value("temperature", config.judge.temperature);
        config.judge.retries = judge.value("retries", config.judge.retries);
    }
    return config;
}

EngineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_to_json(const EngineConfig& config) {
    json root;
    root["encoder_caps"] = {{"query_chars", config.encoder_caps.query_chars},
                            {"description_chars", config.encoder_caps.description_chars},
                            {"body_chars", config.encoder_caps.body_chars}};
    root["reranker_caps"] = {{"query_chars", config.reranker_caps.query_chars},
                             {"description_chars", config.reranker_caps.description_chars},
                             {"body_chars", config.reranker_caps.body_chars}};
    root["query_instruction"] = config.instruction.text;
    root["bm25"] = {{"k1", config.bm25.k1}, {"b", config.bm25.b}};
    root["ann"] = {{"recall_target", config.ann.recall_target},
                   {"clusters", config.ann.clusters},
                   {"probes", config.ann.probes},
                   {"seed", config.ann.seed},
                   {"kmeans_iterations", config.ann.kmeans_iterations}};
    root["thresholds"] = {{"trigram_jaccard", config.thresholds.trigram},
                          {"embedding_cosine", config.thresholds.cosine}};
    root["negative_mix"] = {{"semantic", config.negative_mix.semantic},
                            {"lexical", config.negative_mix.lexical},
                            {"taxonomy", config.negative_mix.taxonomy},
                            {"random", config.negative_mix.random}};
    root["mining_neighborhood"] = config.mining_neighborhood;
    root["top_k"] = config.top_k;
    root["tau_encoder"] = config.tau_encoder;
    root["tau_listwise"] = config.tau_listwise;
    root["bench_warmup"] = config.bench_warmup;
    root["embedding"] = {{"kind", config.embedding.kind},
                         {"dim", config.embedding.dim},
                         {"path", config.embedding.path},
                         {"endpoint", config.embedding.endpoint},
                         {"http_path", config.embedding.http_path},
                         {"batch_size", config.embedding.batch_size},
                         {"retries", config.embedding.retries}};
    root["reranker"] = {{"kind", config.reranker.kind},
                        {"endpoint", config.reranker.endpoint},
                        {"http_path", config.reranker.http_path},
                        {"retries", config.reranker.retries}};
    root["judge"] = {{"endpoint", config.judge.endpoint},
                     {"model", config.judge.model},
                     {"temperature", config.judge.temperature},
                     {"retries", config.judge.retries}};
    return root.dump(2);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EngineConfig& config) {
    const auto& provider = config.embedding;
    if (provider.kind == "stub") {
        return std::make_unique<HashedTfProvider>(provider.dim);
    }
    if (provider.kind == "file") {
        if (provider.path.empty()) {
            throw ValidationError("config: embedding.path is required for kind 'file'");
        }
        return std::make_unique<FileEmbeddingProvider>(provider.path);
    }
    if (provider.kind == "http") {
        if (provider.endpoint.empty()) {
            throw ValidationError("config: embedding.endpoint is required for kind 'http'");
        }
        HttpEmbeddingConfig http;
        http.endpoint = provider.endpoint;
        http.path = provider.http_path;
        // The engine prefixes the query instruction into the text itself
        // (dense_search), so it is not forwarded here as well.
        http.batch_size = provider.batch_size;
        http.retries = provider.retries;
        return std::make_unique<HttpEmbeddingProvider>(std::move(http));
    }
    throw ValidationError("config: unknown embedding.kind '" + provider.kind + "'");
}

std::unique_ptr<RerankProvider> make_rerank_provider(const EngineConfig& config) {
    const auto& provider = config.reranker;
    if (provider.kind == "stub") {
        return std::make_unique<LexicalOverlapScorer>();
    }
    if (provider.kind == "http") {
        if (provider.endpoint.empty()) {
            throw ValidationError("config: reranker.endpoint is required for kind 'http'");
        }
        HttpRerankConfig http;
        http.endpoint = provider.endpoint;
        http.path = provider.http_path;
        http.retries = provider.retries;
        return std::make_unique<HttpRerankProvider>(std::move(http));
    }
    throw ValidationError("config: unknown reranker.kind '" + provider.kind + "'");
}

namespace {

ChatConfig chat_config_from(const JudgeProviderConfig& judge) {
    if (judge.endpoint.empty()) {
        throw ValidationError("config: judge.endpoint is required");
    }
    ChatConfig chat;
    chat.endpoint = judge.endpoint;
    chat.model = judge.model;
    chat.temperature = judge.temperature;
    chat.retries = judge.retries;
    return chat;
}

}  // namespace

std::unique_ptr<JudgeProvider> make_judge_provider(const EngineConfig& config) {
    return std::make_unique<ChatJudgeProvider>(chat_config_from(config.judge));
}

std::unique_ptr<EquivalenceJudge> make_equivalence_judge(const EngineConfig& config) {
    return std::make_unique<ChatEquivalenceJudge>(chat_config_from(config.judge));
}

}  // namespace skillrank

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "skillrank/bm25.hpp"
#include "skillrank/chat.hpp"
#include "skillrank/corpus.hpp"
#include "skillrank/embedding.hpp"
#include "skillrank/forge.hpp"
#include "skillrank/rerank.hpp"
#include "skillrank/vector_index.hpp"

namespace skillrank {

struct EmbeddingProviderConfig {
    std::string kind = "stub";  // stub | file | http
    std::size_t dim = 64;       // stub dimension
    std::string path;           // file kind: precomputed embedding file
    std::string endpoint;       // http kind
    std::string http_path = "/embed";
    std::size_t batch_size = 16;
    int retries = 2;
};

struct RerankProviderConfig {
    std::string kind = "stub";  // stub (lexical overlap) | http
    std::string endpoint;
    std::string http_path = "/rerank";
    int retries = 2;
};

struct JudgeProviderConfig {
    std::string endpoint;  // chat-completion service
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int retries = 1;
};

// One declarative file holds every knob; the defaults are the values used
// throughout the docs and tests. Secrets stay in the environment
// (SKILLRANK_API_KEY), everything else lives here so a run manifest can
// reproduce the run.
struct EngineConfig {
    FieldCaps encoder_caps = kEncoderCaps;
    FieldCaps reranker_caps = kRerankerCaps;
    QueryInstruction instruction;
    Bm25Params bm25;
    AnnParams ann;
    FilterThresholds thresholds;  // trigram 0.6 / cosine 0.92
    NegativeMix negative_mix;     // 4 / 3 / 2 / 1
    std::size_t mining_neighborhood = 50;
    std::size_t top_k = 20;
    double tau_encoder = 0.05;
    double tau_listwise = 1.0;
    std::size_t bench_warmup = 5;
    EmbeddingProviderConfig embedding;
    RerankProviderConfig reranker;
    JudgeProviderConfig judge;
};

// Missing keys fall back to defaults; unknown keys are rejected so typos
// cannot silently change a run.
EngineConfig load_config_file(const std::string& path);
EngineConfig config_from_json_text(const std::string& text);
std::string config_to_json(const EngineConfig& config);

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EngineConfig& config);
std::unique_ptr<RerankProvider> make_rerank_provider(const EngineConfig& config);
std::unique_ptr<JudgeProvider> make_judge_provider(const EngineConfig& config);
std::unique_ptr<EquivalenceJudge> make_equivalence_judge(const EngineConfig& config);

}  // namespace skillrank

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "skillrank/bm25.hpp"
#include "skillrank/corpus.hpp"
#include "skillrank/rerank.hpp"
#include "skillrank/types.hpp"
#include "skillrank/vector_index.hpp"

namespace skillrank {

// First-stage candidate source.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::string name() const = 0;
    virtual Ranking search(std::string_view query_text, std::size_t k) const = 0;
};

class Bm25Retriever : public Retriever {
public:
    explicit Bm25Retriever(const Bm25Index& index) : index_(index) {}
    std::string name() const override { return "bm25"; }
    Ranking search(std::string_view query_text, std::size_t k) const override {
        return index_.search(query_text, k);
    }

private:
    const Bm25Index& index_;
};

class DenseRetriever : public Retriever {
public:
    DenseRetriever(const VectorIndex& index, const EmbeddingProvider& provider,
                   QueryInstruction instruction = {}, FieldCaps caps = kEncoderCaps)
        : index_(index), provider_(provider), instruction_(std::move(instruction)),
          caps_(caps) {}

    std::string name() const override { return "dense:" + provider_.name(); }
    Ranking search(std::string_view query_text, std::size_t k) const override {
        return dense_search(index_, query_text, provider_, k, instruction_, caps_);
    }

private:
    const VectorIndex& index_;
    const EmbeddingProvider& provider_;
    QueryInstruction instruction_;
    FieldCaps caps_;
};

// Second-stage reordering of the retriever's candidate list.
class RerankStage {
public:
    virtual ~RerankStage() = default;
    virtual std::string name() const = 0;
    // `flagged` is set when a judge reply had to be discarded.
    virtual Ranking apply(std::string_view query_text, const Ranking& candidates,
                          bool& flagged) const = 0;
};

// Flattens candidates with the reranker caps and reorders by provider score.
class ScoredRerankStage : public RerankStage {
public:
    ScoredRerankStage(const SkillPool& pool, const RerankProvider& provider,
                      FieldCaps caps = kRerankerCaps, SkillFormat format = SkillFormat::full);

    std::string name() const override { return "scored:" + provider_.name(); }
    Ranking apply(std::string_view query_text, const Ranking& candidates,
                  bool& flagged) const override;

private:
    const SkillPool& pool_;
    IdIndex by_id_;
    const RerankProvider& provider_;
    FieldCaps caps_;
    SkillFormat format_;
};

// Builds the numbered candidate list and moves the judged pick to rank 1.
class JudgeRerankStage : public RerankStage {
public:
    JudgeRerankStage(const SkillPool& pool, const JudgeProvider& judge,
                     FieldCaps caps = kRerankerCaps, SkillFormat format = SkillFormat::full);

    std::string name() const override { return "judge:" + judge_.name(); }
    Ranking apply(std::string_view query_text, const Ranking& candidates,
                  bool& flagged) const override;

private:
    const SkillPool& pool_;
    IdIndex by_id_;
    const JudgeProvider& judge_;
    FieldCaps caps_;
    SkillFormat format_;
};

struct RouteResult {
    Ranking ranking;
    bool judge_flagged = false;
};

// Retriever top-k then optional rerank stage. The output is always a
// permutation of a subset of the retriever's top-k (two-stage ceiling).
RouteResult route(std::string_view query_text, const Retriever& retriever,
                  const RerankStage* reranker = nullptr, std::size_t k = 20,
                  std::string query_id = {});

}  // namespace skillrank

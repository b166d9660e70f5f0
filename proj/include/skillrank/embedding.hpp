#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "skillrank/types.hpp"

namespace skillrank {

using Vector = Eigen::VectorXf;
using Matrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Instruction prefix applied to queries only, never to skill documents.
struct QueryInstruction {
    std::string text =
        "Instruct: Given a task description, retrieve the most relevant skill "
        "document that would help an agent complete the task";

    std::string apply(std::string_view query_text) const {
        return text.empty() ? std::string(query_text)
                            : text + "\nQuery: " + std::string(query_text);
    }
};

// Contract: unit-norm vectors (within 1e-6), fixed dimension, deterministic
// for a given input unless the implementation says otherwise.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;

    virtual Vector embed_query(std::string_view text) const = 0;
    virtual Vector embed_document(std::string_view text) const = 0;

    // File-backed providers resolve by id; the default ignores the hint.
    virtual Vector embed_document(std::string_view text, std::string_view id_hint) const {
        (void)id_hint;
        return embed_document(text);
    }

    virtual std::vector<Vector> embed_queries(const std::vector<std::string>& texts) const;
    virtual std::vector<Vector> embed_documents(const std::vector<std::string>& texts) const;
};

// Deterministic, model-free provider: hashed term-frequency vectors,
// unit-normalized. Empty token lists map to the first basis vector.
class HashedTfProvider : public EmbeddingProvider {
public:
    explicit HashedTfProvider(std::size_t dimension = 64);

    std::size_t dimension() const override { return dimension_; }
    std::string name() const override;

    Vector embed_query(std::string_view text) const override { return embed(text); }
    Vector embed_document(std::string_view text) const override { return embed(text); }

private:
    Vector embed(std::string_view text) const;

    std::size_t dimension_;
};

// Reads a precomputed embedding file: header record {"dim": d}, then one
// {"id": ..., "vector": [...]} per line. Lookup is by id hint first, then by
// exact text.
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    explicit FileEmbeddingProvider(const std::string& path);

    std::size_t dimension() const override { return dimension_; }
    std::string name() const override { return "file:" + path_; }

    Vector embed_query(std::string_view text) const override { return lookup(text, {}); }
    Vector embed_document(std::string_view text) const override { return lookup(text, {}); }
    Vector embed_document(std::string_view text, std::string_view id_hint) const override {
        return lookup(text, id_hint);
    }

    bool has_id(std::string_view id) const;

private:
    Vector lookup(std::string_view text, std::string_view id_hint) const;

    std::string path_;
    std::size_t dimension_ = 0;
    std::vector<Vector> vectors_;
    std::unordered_map<std::string, std::size_t> by_key_;
};

struct HttpEmbeddingConfig {
    std::string endpoint;             // http://host:port
    std::string path = "/embed";
    std::string instruction;          // forwarded for kind=query
    std::size_t dimension = 0;        // 0 = trust the first response
    std::size_t batch_size = 16;
    int retries = 2;
    int timeout_seconds = 30;
    std::string api_key_env = "SKILLRANK_API_KEY";
};

// POSTs {"texts": [...], "kind": "query"|"document", "instruction"?: ...}
// and expects {"vectors": [[...], ...]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
    ~HttpEmbeddingProvider() override;

    std::size_t dimension() const override;
    std::string name() const override { return "http:" + config_.endpoint + config_.path; }

    Vector embed_query(std::string_view text) const override;
    Vector embed_document(std::string_view text) const override;
    std::vector<Vector> embed_queries(const std::vector<std::string>& texts) const override;
    std::vector<Vector> embed_documents(const std::vector<std::string>& texts) const override;

private:
    std::vector<Vector> request(const std::vector<std::string>& texts,
                                std::string_view kind) const;

    HttpEmbeddingConfig config_;
    mutable std::size_t dimension_;
};

}  // namespace skillrank

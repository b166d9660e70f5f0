#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillrank/corpus.hpp"
#include "skillrank/embedding.hpp"
#include "skillrank/types.hpp"

namespace skillrank {

// Inverted-file clustering for approximate search. recall_target is the
// declared contract; clusters/probes are how this index tries to meet it.
struct AnnParams {
    double recall_target = 0.95;
    std::size_t clusters = 0;   // 0 = round(sqrt(n))
    std::size_t probes = 0;     // 0 = max(1, clusters * 3 / 5)
    std::uint64_t seed = 13;
    int kmeans_iterations = 8;
};

// Row-per-skill matrix of unit vectors. Immutable after build; concurrent
// searches are safe.
class VectorIndex {
public:
    enum class Mode { exact, approximate };

    static VectorIndex from_rows(std::vector<std::string> ids, Matrix rows);

    Mode mode() const { return mode_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return static_cast<std::size_t>(rows_.cols()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const Matrix& rows() const { return rows_; }
    const AnnParams& ann_params() const { return ann_; }

    std::optional<std::size_t> find(std::string_view id) const;
    Vector vector_for(std::string_view id) const;

    // Switches to approximate mode, clustering rows with seeded k-means.
    void enable_ann(const AnnParams& params);

    void save(std::ostream& out) const;
    static VectorIndex load(std::istream& in);

    // Exact top-k by dot product (cosine for unit vectors); ties broken by
    // ascending row index. Always scans every row regardless of mode.
    Ranking search_exact(const Vector& query, std::size_t k) const;

    // IVF probe search; requires approximate mode.
    Ranking search_ann(const Vector& query, std::size_t k) const;

private:
    VectorIndex() = default;

    std::vector<std::string> ids_;
    Matrix rows_;
    IdIndex by_id_;
    Mode mode_ = Mode::exact;
    AnnParams ann_;
    Matrix centroids_;                            // clusters x dim
    std::vector<std::vector<std::uint32_t>> buckets_;  // cluster -> row indices
};

struct EmbedPoolOptions {
    SkillFormat format = SkillFormat::full;
    FieldCaps caps = kEncoderCaps;
    int retries = 2;
    std::size_t batch_size = 32;
    // A returned vector with |norm - 1| <= norm_tolerance is renormalized
    // (with a warning); anything further off is rejected.
    double norm_tolerance = 1e-3;
};

// Flattens every skill per corpus rules and embeds it; row order matches
// pool order.
VectorIndex embed_pool(const SkillPool& pool, const EmbeddingProvider& provider,
                       const EmbedPoolOptions& options = {});

// Instruction-prefix + truncate + embed, then exact search.
Ranking dense_search(const VectorIndex& index, std::string_view query_text,
                     const EmbeddingProvider& provider, std::size_t k,
                     const QueryInstruction& instruction = {},
                     const FieldCaps& caps = kEncoderCaps);

// Mean fraction of each query's exact top-k recovered by the ANN path.
double measure_ann_recall(const VectorIndex& index, const std::vector<Vector>& queries,
                          std::size_t k);

// Embedding file: header {"dim": d}, then {"id", "vector"} per line.
void write_embeddings(std::ostream& out, const std::vector<std::string>& ids,
                      const Matrix& rows);

}  // namespace skillrank

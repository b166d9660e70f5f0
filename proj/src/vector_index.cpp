#include "skillrank/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace skillrank {

namespace {

using nlohmann::json;
constexpr int kIndexVersion = 1;

// Top-k row indices by score, ties broken by ascending index.
std::vector<std::uint32_t> top_k_rows(const Eigen::VectorXf& scores,
                                      const std::vector<std::uint32_t>& candidates,
                                      std::size_t k) {
    std::vector<std::uint32_t> order = candidates;
    const std::size_t top = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top),
                      order.end(), [&](std::uint32_t a, std::uint32_t b) {
                          const float sa = scores[static_cast<Eigen::Index>(a)];
                          const float sb = scores[static_cast<Eigen::Index>(b)];
                          if (sa != sb) return sa > sb;
                          return a < b;
                      });
    order.resize(top);
    return order;
}

}  // namespace

VectorIndex VectorIndex::from_rows(std::vector<std::string> ids, Matrix rows) {
    if (ids.size() != static_cast<std::size_t>(rows.rows())) {
        throw ValidationError("vector index: ids and rows differ in length");
    }
    if (rows.rows() == 0 || rows.cols() == 0) {
        throw ValidationError("vector index: empty matrix");
    }
    VectorIndex index;
    index.ids_ = std::move(ids);
    index.rows_ = std::move(rows);
    index.by_id_.reserve(index.ids_.size());
    for (std::size_t i = 0; i < index.ids_.size(); ++i) {
        if (!index.by_id_.emplace(index.ids_[i], i).second) {
            throw ValidationError("vector index: duplicate id '" + index.ids_[i] + "'");
        }
    }
    return index;
}

std::optional<std::size_t> VectorIndex::find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

Vector VectorIndex::vector_for(std::string_view id) const {
    const auto row = find(id);
    if (!row) throw ValidationError("vector index: unknown id '" + std::string(id) + "'");
    return rows_.row(static_cast<Eigen::Index>(*row)).transpose();
}

void VectorIndex::enable_ann(const AnnParams& params) {
    ann_ = params;
    const std::size_t n = size();
    if (ann_.clusters == 0) {
        ann_.clusters = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
    }
    ann_.clusters = std::min(ann_.clusters, n);
    if (ann_.probes == 0) {
        ann_.probes = std::max<std::size_t>(1, ann_.clusters * 3 / 5);
    }
    // recall_target 1.0 degenerates to probing everything = exact scan.
    if (ann_.recall_target >= 1.0) ann_.probes = ann_.clusters;
    ann_.probes = std::min(ann_.probes, ann_.clusters);

    // Seeded k-means on the unit sphere (dot-product assignment).
    std::mt19937_64 rng(ann_.seed);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);

    const auto dim = rows_.cols();
    centroids_.resize(static_cast<Eigen::Index>(ann_.clusters), dim);
    for (std::size_t c = 0; c < ann_.clusters; ++c) {
        centroids_.row(static_cast<Eigen::Index>(c)) =
            rows_.row(static_cast<Eigen::Index>(perm[c]));
    }

    std::vector<std::uint32_t> assignment(n, 0);
    for (int iter = 0; iter < ann_.kmeans_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (centroids_ * rows_.row(static_cast<Eigen::Index>(i)).transpose())
                .maxCoeff(&best);
            assignment[i] = static_cast<std::uint32_t>(best);
        }
        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(ann_.clusters), dim);
        std::vector<std::size_t> counts(ann_.clusters, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(assignment[i]) += rows_.row(static_cast<Eigen::Index>(i));
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < ann_.clusters; ++c) {
            const auto row = static_cast<Eigen::Index>(c);
            if (counts[c] == 0) {
                // Re-seed an empty cluster from a random row.
                const auto pick =
                    static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
                centroids_.row(row) = rows_.row(pick);
                continue;
            }
            const float norm = sums.row(row).norm();
            if (norm > 0.0f) {
                centroids_.row(row) = sums.row(row) / norm;
            } else {
                centroids_.row(row) = sums.row(row);
            }
        }
    }

    buckets_.assign(ann_.clusters, {});
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        (centroids_ * rows_.row(static_cast<Eigen::Index>(i)).transpose()).maxCoeff(&best);
        buckets_[static_cast<std::size_t>(best)].push_back(static_cast<std::uint32_t>(i));
    }
    mode_ = Mode::approximate;
}

Ranking VectorIndex::search_exact(const Vector& query, std::size_t k) const {
    if (k == 0) throw ValidationError("dense_search: k must be >= 1");
    if (query.size() != rows_.cols()) {
        throw ValidationError("dense_search: query dimension mismatch");
    }
    const Eigen::VectorXf scores = rows_ * query;
    std::vector<std::uint32_t> all(size());
    std::iota(all.begin(), all.end(), 0u);
    const auto order = top_k_rows(scores, all, k);

    Ranking ranking;
    ranking.hits.reserve(order.size());
    for (const auto row : order) {
        ranking.hits.push_back(
            {ids_[row], static_cast<double>(scores[static_cast<Eigen::Index>(row)])});
    }
    return ranking;
}

Ranking VectorIndex::search_ann(const Vector& query, std::size_t k) const {
    if (mode_ != Mode::approximate) {
        throw ValidationError("ann_search: index is not in approximate mode");
    }
    if (k == 0) throw ValidationError("ann_search: k must be >= 1");
    if (query.size() != rows_.cols()) {
        throw ValidationError("ann_search: query dimension mismatch");
    }

    const Eigen::VectorXf centroid_scores = centroids_ * query;
    std::vector<std::uint32_t> cluster_order(ann_.clusters);
    std::iota(cluster_order.begin(), cluster_order.end(), 0u);
    const auto probe_order = top_k_rows(centroid_scores, cluster_order, ann_.clusters);

    // Probe the configured number of clusters, then keep going until the
    // candidate set can actually fill k (covers k >= n).
    std::vector<std::uint32_t> candidates;
    for (std::size_t c = 0; c < probe_order.size(); ++c) {
        if (c >= ann_.probes && candidates.size() >= k) break;
        const auto& bucket = buckets_[probe_order[c]];
        candidates.insert(candidates.end(), bucket.begin(), bucket.end());
    }
    std::sort(candidates.begin(), candidates.end());

    Eigen::VectorXf scores(static_cast<Eigen::Index>(size()));
    for (const auto row : candidates) {
        scores[static_cast<Eigen::Index>(row)] =
            rows_.row(static_cast<Eigen::Index>(row)).dot(query);
    }
    const auto order = top_k_rows(scores, candidates, k);

    Ranking ranking;
    ranking.hits.reserve(order.size());
    for (const auto row : order) {
        ranking.hits.push_back(
            {ids_[row], static_cast<double>(scores[static_cast<Eigen::Index>(row)])});
    }
    return ranking;
}

void VectorIndex::save(std::ostream& out) const {
    json header = {{"format", "skillrank.vectors"},
                   {"version", kIndexVersion},
                   {"dim", dimension()},
                   {"count", size()},
                   {"mode", mode_ == Mode::approximate ? "approximate" : "exact"}};
    if (mode_ == Mode::approximate) {
        header["ann"] = {{"recall_target", ann_.recall_target},
                         {"clusters", ann_.clusters},
                         {"probes", ann_.probes},
                         {"seed", ann_.seed},
                         {"kmeans_iterations", ann_.kmeans_iterations}};
    }
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
        json row;
        row["id"] = ids_[i];
        json values = json::array();
        for (Eigen::Index j = 0; j < rows_.cols(); ++j) {
            values.push_back(rows_(static_cast<Eigen::Index>(i), j));
        }
        row["vector"] = std::move(values);
        out << row.dump() << '\n';
    }
}

VectorIndex VectorIndex::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("vector index file is empty");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "skillrank.vectors") {
        throw ParseError("vector index: bad header");
    }
    if (header.value("version", 0) != kIndexVersion) {
        throw ParseError("vector index: unsupported version");
    }
    const auto dim = header.at("dim").get<std::size_t>();
    const auto count = header.at("count").get<std::size_t>();

    std::vector<std::string> ids;
    ids.reserve(count);
    Matrix rows(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw ParseError("vector index: truncated rows");
        json record = json::parse(line);
        ids.push_back(record.at("id").get<std::string>());
        const auto& values = record.at("vector");
        if (values.size() != dim) throw ParseError("vector index: row dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) {
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                values[j].get<float>();
        }
    }
    auto index = from_rows(std::move(ids), std::move(rows));
    if (header.value("mode", "exact") == "approximate") {
        const auto& ann = header.at("ann");
        AnnParams params;
        params.recall_target = ann.at("recall_target").get<double>();
        params.clusters = ann.at("clusters").get<std::size_t>();
        params.probes = ann.at("probes").get<std::size_t>();
        params.seed = ann.at("seed").get<std::uint64_t>();
        params.kmeans_iterations = ann.at("kmeans_iterations").get<int>();
        index.enable_ann(params);
    }
    return index;
}

VectorIndex embed_pool(const SkillPool& pool, const EmbeddingProvider& provider,
                       const EmbedPoolOptions& options) {
    if (pool.empty()) throw ValidationError("embed_pool: pool is empty");
    validate_caps(options.caps);

    // The dimension comes from the first returned vector: providers that
    // learn it from their first response stay usable here.
    Matrix rows;
    Eigen::Index dim = 0;
    std::vector<std::string> ids;
    ids.reserve(pool.size());

    for (std::size_t start = 0; start < pool.size(); start += options.batch_size) {
        const auto end = std::min(pool.size(), start + options.batch_size);
        std::vector<std::string> texts;
        texts.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            texts.push_back(flatten_skill(pool.skills[i], options.format, options.caps));
        }

        std::vector<Vector> vectors;
        int attempt = 0;
        for (;;) {
            try {
                vectors.clear();
                vectors.reserve(texts.size());
                for (std::size_t i = 0; i < texts.size(); ++i) {
                    vectors.push_back(
                        provider.embed_document(texts[i], pool.skills[start + i].id));
                }
                break;
            } catch (const ProviderError&) {
                if (++attempt > options.retries) throw;
            }
        }

        if (dim == 0 && !vectors.empty()) {
            dim = vectors.front().size();
            if (dim == 0) throw ProviderError("embed_pool: provider returned empty vectors");
            rows.resize(static_cast<Eigen::Index>(pool.size()), dim);
        }
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            Vector& v = vectors[i];
            if (v.size() != dim) {
                throw ProviderError("embed_pool: dimension mismatch for skill '" +
                                    pool.skills[start + i].id + "'");
            }
            const float norm = v.norm();
            if (std::abs(norm - 1.0f) > options.norm_tolerance) {
                throw ProviderError("embed_pool: provider returned non-unit vector (norm " +
                                    std::to_string(norm) + ") for skill '" +
                                    pool.skills[start + i].id + "'");
            }
            if (norm != 1.0f && norm > 0.0f) {
                if (std::abs(norm - 1.0f) > 1e-6f) {
                    std::cerr << "warning: renormalizing embedding for skill '"
                              << pool.skills[start + i].id << "' (norm " << norm << ")\n";
                }
                v /= norm;
            }
            rows.row(static_cast<Eigen::Index>(start + i)) = v.transpose();
        }
        for (std::size_t i = start; i < end; ++i) ids.push_back(pool.skills[i].id);
    }
    return VectorIndex::from_rows(std::move(ids), std::move(rows));
}

Ranking dense_search(const VectorIndex& index, std::string_view query_text,
                     const EmbeddingProvider& provider, std::size_t k,
                     const QueryInstruction& instruction, const FieldCaps& caps) {
    const std::string prepared = instruction.apply(truncate_query(query_text, caps));
    const Vector query = provider.embed_query(prepared);
    return index.mode() == VectorIndex::Mode::approximate ? index.search_ann(query, k)
                                                          : index.search_exact(query, k);
}

double measure_ann_recall(const VectorIndex& index, const std::vector<Vector>& queries,
                          std::size_t k) {
    if (queries.empty()) throw ValidationError("measure_ann_recall: no queries");
    double total = 0.0;
    for (const Vector& query : queries) {
        const Ranking exact = index.search_exact(query, k);
        const Ranking approx = index.search_ann(query, k);
        std::unordered_set<std::string> truth;
        for (const auto& hit : exact.hits) truth.insert(hit.skill_id);
        std::size_t found = 0;
        for (const auto& hit : approx.hits) found += truth.count(hit.skill_id);
        total += truth.empty() ? 1.0
                               : static_cast<double>(found) / static_cast<double>(truth.size());
    }
    return total / static_cast<double>(queries.size());
}

void write_embeddings(std::ostream& out, const std::vector<std::string>& ids,
                      const Matrix& rows) {
    if (ids.size() != static_cast<std::size_t>(rows.rows())) {
        throw ValidationError("write_embeddings: ids and rows differ in length");
    }
    out << json{{"dim", rows.cols()}}.dump() << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
        json record;
        record["id"] = ids[i];
        json values = json::array();
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            values.push_back(rows(static_cast<Eigen::Index>(i), j));
        }
        record["vector"] = std::move(values);
        out << record.dump() << '\n';
    }
}

}  // namespace skillrank

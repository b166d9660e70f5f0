#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "skillrank/vector_index.hpp"
#include "test_support.hpp"

using namespace skillrank;
using skillrank::testing::make_skill;

namespace {

Matrix random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    Matrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = normal(rng);
        rows.row(i).normalize();
    }
    return rows;
}

std::vector<std::string> numbered_ids(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    return ids;
}

// Independent top-k: full scan + stable sort on (score desc, row asc).
std::vector<std::string> brute_force_top_k(const Matrix& rows,
                                           const std::vector<std::string>& ids,
                                           const Vector& query, std::size_t k) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<float> scores(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        scores[i] = rows.row(static_cast<Eigen::Index>(i)).dot(query);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(k, order.size()));
    std::vector<std::string> out;
    for (const std::size_t i : order) out.push_back(ids[i]);
    return out;
}

}  // namespace

TEST_CASE("stub provider is deterministic and unit-norm") {
    const HashedTfProvider provider(16);
    const Vector a = provider.embed_document("convert pdf tables");
    const Vector b = provider.embed_document("convert pdf tables");
    CHECK(a == b);
    CHECK(a.norm() == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(provider.embed_document("").norm() == doctest::Approx(1.0f));
    CHECK(provider.dimension() == 16);
}

TEST_CASE("embed_pool builds a row-per-skill index in pool order") {
    SkillPool pool;
    pool.skills = {make_skill("a", "alpha", "first"), make_skill("b", "beta", "second"),
                   make_skill("c", "gamma", "third")};
    const HashedTfProvider provider(4);
    const VectorIndex index = embed_pool(pool, provider, {});
    CHECK(index.size() == 3);
    CHECK(index.dimension() == 4);
    CHECK(index.ids() == std::vector<std::string>{"a", "b", "c"});
    CHECK(index.find("b") == std::size_t{1});
    CHECK_FALSE(index.find("zzz").has_value());
}

TEST_CASE("embed_pool rejects far-from-unit vectors and renormalizes near-unit ones") {
    struct SkewedProvider : EmbeddingProvider {
        float norm;
        explicit SkewedProvider(float n) : norm(n) {}
        std::size_t dimension() const override { return 3; }
        std::string name() const override { return "skewed"; }
        Vector embed_query(std::string_view) const override { return embed_document(""); }
        Vector embed_document(std::string_view) const override {
            Vector v = Vector::Zero(3);
            v[0] = norm;
            return v;
        }
    };

    SkillPool pool;
    pool.skills = {make_skill("a", "alpha")};

    const SkewedProvider slightly_off(1.0005f);
    const VectorIndex index = embed_pool(pool, slightly_off, {});
    CHECK(index.rows().row(0).norm() == doctest::Approx(1.0f).epsilon(1e-6));

    const SkewedProvider badly_off(2.0f);
    CHECK_THROWS_AS(embed_pool(pool, badly_off, {}), ProviderError);
}

TEST_CASE("embed_pool retries transient provider failures") {
    struct FlakyProvider : EmbeddingProvider {
        mutable int calls = 0;
        std::size_t dimension() const override { return 2; }
        std::string name() const override { return "flaky"; }
        Vector embed_query(std::string_view) const override { return embed_document(""); }
        Vector embed_document(std::string_view) const override {
            if (++calls <= 2) throw ProviderError("transient");
            Vector v(2);
            v << 1.0f, 0.0f;
            return v;
        }
    };
    SkillPool pool;
    pool.skills = {make_skill("a", "alpha")};
    const FlakyProvider flaky;
    EmbedPoolOptions options;
    options.retries = 2;
    const VectorIndex index = embed_pool(pool, flaky, options);
    CHECK(index.size() == 1);

    const FlakyProvider fails_for_good;
    EmbedPoolOptions no_retries;
    no_retries.retries = 1;
    CHECK_THROWS_AS(embed_pool(pool, fails_for_good, no_retries), ProviderError);
}

TEST_CASE("dense search: identity and orthogonal queries") {
    Matrix rows = Matrix::Zero(3, 4);
    rows(0, 0) = 1.0f;
    rows(1, 1) = 1.0f;
    rows(2, 2) = 1.0f;
    const VectorIndex index = VectorIndex::from_rows(numbered_ids(3), rows);

    Vector query = Vector::Zero(4);
    query[1] = 1.0f;
    const Ranking identity = index.search_exact(query, 1);
    REQUIRE(identity.size() == 1);
    CHECK(identity.hits[0].skill_id == "v1");
    CHECK(identity.hits[0].score == doctest::Approx(1.0));

    Vector orthogonal = Vector::Zero(4);
    orthogonal[3] = 1.0f;
    const Ranking zeros = index.search_exact(orthogonal, 2);
    REQUIRE(zeros.size() == 2);
    // all scores zero: ties broken by ascending row index
    CHECK(zeros.hits[0].skill_id == "v0");
    CHECK(zeros.hits[1].skill_id == "v1");
    CHECK(zeros.hits[0].score == doctest::Approx(0.0));
}

TEST_CASE("dense search equals brute force on random instances") {
    const Matrix rows = random_unit_rows(50, 8, 7);
    const VectorIndex index = VectorIndex::from_rows(numbered_ids(50), rows);
    std::mt19937_64 rng(21);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (int round = 0; round < 25; ++round) {
        Vector query(8);
        for (Eigen::Index j = 0; j < 8; ++j) query[j] = normal(rng);
        query.normalize();
        const Ranking ranking = index.search_exact(query, 10);
        const auto expected = brute_force_top_k(rows, index.ids(), query, 10);
        REQUIRE(ranking.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(ranking.hits[i].skill_id == expected[i]);
        }
    }
}

TEST_CASE("dense_search applies the query instruction and truncation") {
    // Provider that records the text it was asked to embed.
    struct RecordingProvider : EmbeddingProvider {
        mutable std::string last_query;
        std::size_t dimension() const override { return 2; }
        std::string name() const override { return "recording"; }
        Vector embed_query(std::string_view text) const override {
            last_query = std::string(text);
            Vector v(2);
            v << 1.0f, 0.0f;
            return v;
        }
        Vector embed_document(std::string_view) const override {
            Vector v(2);
            v << 1.0f, 0.0f;
            return v;
        }
    };
    Matrix rows(1, 2);
    rows << 1.0f, 0.0f;
    const VectorIndex index = VectorIndex::from_rows({"only"}, rows);
    const RecordingProvider provider;

    FieldCaps caps;
    caps.query_chars = 5;
    dense_search(index, "0123456789", provider, 1, QueryInstruction{}, caps);
    CHECK(provider.last_query ==
          QueryInstruction{}.text + "\nQuery: 01234");  // truncated to 5 chars
}

TEST_CASE("scaling pre-normalization magnitude does not change rankings") {
    SkillPool pool = skillrank::testing::synthetic_pool(3, 5);
    const HashedTfProvider provider(32);

    // Same directions, different magnitudes, normalized on the way in.
    struct ScaledProvider : EmbeddingProvider {
        const HashedTfProvider& inner;
        explicit ScaledProvider(const HashedTfProvider& p) : inner(p) {}
        std::size_t dimension() const override { return inner.dimension(); }
        std::string name() const override { return "scaled"; }
        Vector embed_query(std::string_view text) const override {
            return inner.embed_query(text);
        }
        Vector embed_document(std::string_view text) const override {
            // magnitude drifts within the renormalization tolerance
            return inner.embed_document(text) * 1.0004f;
        }
    };

    const VectorIndex base = embed_pool(pool, provider, {});
    const ScaledProvider scaled(provider);
    const VectorIndex drifted = embed_pool(pool, scaled, {});

    const Vector query = provider.embed_query("convert git data");
    const Ranking a = base.search_exact(query, 8);
    const Ranking b = drifted.search_exact(query, 8);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.hits[i].skill_id == b.hits[i].skill_id);
    }
}

TEST_CASE("appending orthogonal rows never reorders existing hits") {
    Matrix rows = random_unit_rows(20, 8, 3);
    Matrix padded = Matrix::Zero(26, 12);
    padded.block(0, 0, 20, 8) = rows;
    for (int extra = 0; extra < 6; ++extra) {
        padded(20 + extra, 8 + (extra % 4)) = 1.0f;  // orthogonal to the first 8 dims
    }
    Matrix original = Matrix::Zero(20, 12);
    original.block(0, 0, 20, 8) = rows;

    const VectorIndex small = VectorIndex::from_rows(numbered_ids(20), padded.topRows(20));
    const VectorIndex big = VectorIndex::from_rows(numbered_ids(26), padded);

    std::mt19937_64 rng(17);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    Vector query = Vector::Zero(12);
    for (Eigen::Index j = 0; j < 8; ++j) query[j] = normal(rng);
    query.normalize();

    const Ranking before = small.search_exact(query, 10);
    const Ranking after = big.search_exact(query, 10);
    std::vector<std::string> before_ids, after_ids;
    for (const auto& hit : before.hits) before_ids.push_back(hit.skill_id);
    for (const auto& hit : after.hits) {
        if (hit.score > 0.0) after_ids.push_back(hit.skill_id);
    }
    // positive-scoring hits keep their relative order
    for (std::size_t i = 0; i + 1 < after_ids.size(); ++i) {
        const auto a = std::find(before_ids.begin(), before_ids.end(), after_ids[i]);
        const auto b = std::find(before_ids.begin(), before_ids.end(), after_ids[i + 1]);
        CHECK(a < b);
    }
}

TEST_CASE("nd-format embedding ignores the body") {
    SkillPool pool = skillrank::testing::synthetic_pool(3, 4);
    const HashedTfProvider provider(32);
    EmbedPoolOptions options;
    options.format = SkillFormat::nd;
    const VectorIndex before = embed_pool(pool, provider, options);

    for (Skill& skill : pool.skills) skill.body += " mutated body content";
    const VectorIndex after = embed_pool(pool, provider, options);
    CHECK(before.rows().isApprox(after.rows()));

    // whereas a full-format embedding does see the body
    EmbedPoolOptions full;
    const VectorIndex full_before = embed_pool(pool, provider, full);
    for (Skill& skill : pool.skills) skill.body += " more distinct words appended here";
    const VectorIndex full_after = embed_pool(pool, provider, full);
    CHECK_FALSE(full_before.rows().isApprox(full_after.rows()));
}

TEST_CASE("ann: degenerate recall target 1.0 equals exact search") {
    const Matrix rows = random_unit_rows(200, 8, 5);
    VectorIndex index = VectorIndex::from_rows(numbered_ids(200), rows);
    AnnParams params;
    params.recall_target = 1.0;
    index.enable_ann(params);
    CHECK(index.mode() == VectorIndex::Mode::approximate);

    std::mt19937_64 rng(31);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (int round = 0; round < 10; ++round) {
        Vector query(8);
        for (Eigen::Index j = 0; j < 8; ++j) query[j] = normal(rng);
        query.normalize();
        const Ranking exact = index.search_exact(query, 15);
        const Ranking approx = index.search_ann(query, 15);
        REQUIRE(exact.size() == approx.size());
        for (std::size_t i = 0; i < exact.size(); ++i) {
            CHECK(exact.hits[i].skill_id == approx.hits[i].skill_id);
        }
    }
}

TEST_CASE("ann: default settings reach mean recall >= 0.95 on 1000 random vectors") {
    const Matrix rows = random_unit_rows(1000, 16, 41);
    VectorIndex index = VectorIndex::from_rows(numbered_ids(1000), rows);
    index.enable_ann(AnnParams{});

    std::mt19937_64 rng(77);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<Vector> queries;
    for (int q = 0; q < 100; ++q) {
        Vector query(16);
        for (Eigen::Index j = 0; j < 16; ++j) query[j] = normal(rng);
        query.normalize();
        queries.push_back(query);
    }
    const double recall = measure_ann_recall(index, queries, 20);
    CHECK(recall >= 0.95);
}

TEST_CASE("ann: k larger than n returns everything") {
    const Matrix rows = random_unit_rows(10, 4, 9);
    VectorIndex index = VectorIndex::from_rows(numbered_ids(10), rows);
    index.enable_ann(AnnParams{});
    Vector query = rows.row(0).transpose();
    const Ranking all = index.search_ann(query, 50);
    CHECK(all.size() == 10);
}

TEST_CASE("ann: exact-mode index refuses ann_search") {
    const Matrix rows = random_unit_rows(5, 4, 2);
    const VectorIndex index = VectorIndex::from_rows(numbered_ids(5), rows);
    CHECK_THROWS_AS(index.search_ann(rows.row(0).transpose(), 2), ValidationError);
}

TEST_CASE("vector index save/load round trip, including ann mode") {
    const Matrix rows = random_unit_rows(30, 6, 13);
    VectorIndex index = VectorIndex::from_rows(numbered_ids(30), rows);
    index.enable_ann(AnnParams{});

    std::stringstream buffer;
    index.save(buffer);
    const VectorIndex restored = VectorIndex::load(buffer);
    CHECK(restored.mode() == VectorIndex::Mode::approximate);
    CHECK(restored.size() == 30);
    CHECK(restored.ann_params().clusters == index.ann_params().clusters);

    const Vector query = rows.row(3).transpose();
    const Ranking a = index.search_ann(query, 5);
    const Ranking b = restored.search_ann(query, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.hits[i].skill_id == b.hits[i].skill_id);
    }
}

TEST_CASE("embedding file round trip") {
    const Matrix rows = random_unit_rows(8, 5, 19);
    std::stringstream buffer;
    write_embeddings(buffer, numbered_ids(8), rows);

    const auto dir = skillrank::testing::temp_dir("embeddings");
    const auto path = (dir / "vectors.jsonl").string();
    skillrank::testing::write_file(path, buffer.str());

    const FileEmbeddingProvider provider(path);
    CHECK(provider.dimension() == 5);
    CHECK(provider.has_id("v3"));
    const Vector v3 = provider.embed_document("ignored text", "v3");
    CHECK(v3.isApprox(rows.row(3).transpose()));
    CHECK_THROWS_AS(provider.embed_document("missing", "nope"), ProviderError);
}

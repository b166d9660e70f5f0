#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skillrank/bm25.hpp"
#include "skillrank/corpus.hpp"
#include "skillrank/forge.hpp"
#include "skillrank/metrics.hpp"
#include "skillrank/types.hpp"
#include "skillrank/vector_index.hpp"

namespace skillrank {

// All interchange files are UTF-8, one JSON record per line.

SkillPool load_pool_file(const std::string& path, Tier tier);
void write_pool_file(const std::string& path, const SkillPool& pool);

// Ingests <dir>/*.md and <dir>/*/SKILL.md; the id is the file stem or the
// directory name.
SkillPool load_skill_md_dir(const std::string& dir, Tier tier);

// {"id", "text", "gt_ids": [...], "tier"?, "difficulty"?}
std::vector<TaskQuery> load_queries_file(const std::string& path);
void write_queries_file(const std::string& path, const std::vector<TaskQuery>& queries);

GtLookup gt_lookup_from_queries(const std::vector<TaskQuery>& queries);

// {"query_id", "ranking": [{"rank", "skill_id", "score"}, ...]}, shared by
// candidate dumps and evaluation runs.
std::vector<Ranking> load_run_file(const std::string& path);
void write_run_file(const std::string& path, const std::vector<Ranking>& rankings);

// {"id"?, "text", "positive_id"}: one mining request per line.
struct MiningRequest {
    std::string id;
    std::string text;
    std::string positive_id;
};
std::vector<MiningRequest> load_mining_requests(const std::string& path);

// {"query_id"?, "query", "positive_id", "negatives": [{"skill_id","source"}],
//  "flagged"?}
std::vector<TrainingExample> load_examples_file(const std::string& path);
void write_examples_file(const std::string& path, const std::vector<TrainingExample>& examples);
std::string example_to_json_line(const TrainingExample& example);

// {"query_id"?, "query", "candidates": [{"skill_id","label"}, ...]}
std::vector<ListwiseGroup> load_groups_file(const std::string& path);
void write_groups_file(const std::string& path, const std::vector<ListwiseGroup>& groups);

void save_bm25_file(const std::string& path, const Bm25Index& index);
Bm25Index load_bm25_file(const std::string& path);

void save_vector_index_file(const std::string& path, const VectorIndex& index);
VectorIndex load_vector_index_file(const std::string& path);

// Builds a vector index straight from a precomputed embedding file
// ({"dim"} header + {"id","vector"} rows).
VectorIndex vector_index_from_embedding_file(const std::string& path);

// 64-bit FNV-1a content digests for run manifests (provenance, not crypto).
std::uint64_t fnv1a64(std::string_view data);
std::string file_digest_hex(const std::string& path);

}  // namespace skillrank

#include "skillrank/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skillrank {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    return out;
}

json parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": invalid JSON record");
    }
    return record;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

SkillPool load_pool_file(const std::string& path, Tier tier) {
    auto in = open_in(path);
    try {
        return load_pool(in, tier);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

void write_pool_file(const std::string& path, const SkillPool& pool) {
    auto out = open_out(path);
    for (const Skill& skill : pool.skills) {
        json record = {{"id", skill.id},
                       {"name", skill.name},
                       {"description", skill.description},
                       {"body", skill.body},
                       {"category", skill.category}};
        out << record.dump() << '\n';
    }
}

SkillPool load_skill_md_dir(const std::string& dir, Tier tier) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);

    std::vector<std::pair<std::string, fs::path>> sources;  // (id, file)
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".md") {
            sources.emplace_back(entry.path().stem().string(), entry.path());
        } else if (entry.is_directory()) {
            const fs::path candidate = entry.path() / "SKILL.md";
            if (fs::is_regular_file(candidate)) {
                sources.emplace_back(entry.path().filename().string(), candidate);
            }
        }
    }
    std::sort(sources.begin(), sources.end());

    SkillPool pool;
    pool.tier = tier;
    std::unordered_map<std::string, std::string> seen;  // id -> file
    for (const auto& [id, path] : sources) {
        Skill skill = parse_skill_md(read_file(path), id);
        const auto [it, inserted] = seen.emplace(skill.id, path.string());
        if (!inserted) {
            throw ValidationError("duplicate skill id '" + skill.id + "' from " + it->second +
                                  " and " + path.string());
        }
        pool.skills.push_back(std::move(skill));
    }
    return pool;
}

std::vector<TaskQuery> load_queries_file(const std::string& path) {
    auto in = open_in(path);
    std::vector<TaskQuery> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        TaskQuery query;
        query.id = record.value("id", "");
        query.text = record.value("text", "");
        if (query.id.empty() || query.text.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": query record needs 'id' and 'text'");
        }
        if (record.contains("gt_ids")) {
            for (const auto& id : record.at("gt_ids")) {
                query.gt_ids.push_back(id.get<std::string>());
            }
        }
        query.tier = record.value("tier", "");
        query.difficulty = record.value("difficulty", "");
        queries.push_back(std::move(query));
    }
    return queries;
}

void write_queries_file(const std::string& path, const std::vector<TaskQuery>& queries) {
    auto out = open_out(path);
    for (const TaskQuery& query : queries) {
        json record = {{"id", query.id}, {"text", query.text}, {"gt_ids", query.gt_ids}};
        if (!query.tier.empty()) record["tier"] = query.tier;
        if (!query.difficulty.empty()) record["difficulty"] = query.difficulty;
        out << record.dump() << '\n';
    }
}

GtLookup gt_lookup_from_queries(const std::vector<TaskQuery>& queries) {
    GtLookup lookup;
    for (const TaskQuery& query : queries) lookup[query.id] = query.gt_ids;
    return lookup;
}

std::vector<Ranking> load_run_file(const std::string& path) {
    auto in = open_in(path);
    std::vector<Ranking> rankings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        Ranking ranking;
        ranking.query_id = record.value("query_id", "");
        if (ranking.query_id.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": missing 'query_id'");
        }
        for (const auto& hit : record.value("ranking", json::array())) {
            ranking.hits.push_back(
                {hit.at("skill_id").get<std::string>(), hit.value("score", 0.0)});
        }
        rankings.push_back(std::move(ranking));
    }
    return rankings;
}

void write_run_file(const std::string& path, const std::vector<Ranking>& rankings) {
    auto out = open_out(path);
    for (const Ranking& ranking : rankings) {
        json hits = json::array();
        for (std::size_t r = 0; r < ranking.hits.size(); ++r) {
            hits.push_back({{"rank", r + 1},
                            {"skill_id", ranking.hits[r].skill_id},
                            {"score", ranking.hits[r].score}});
        }
        out << json{{"query_id", ranking.query_id}, {"ranking", std::move(hits)}}.dump()
            << '\n';
    }
}

std::vector<MiningRequest> load_mining_requests(const std::string& path) {
    auto in = open_in(path);
    std::vector<MiningRequest> requests;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        MiningRequest request;
        request.id = record.value("id", "");
        request.text = record.value("text", "");
        request.positive_id = record.value("positive_id", "");
        if (request.text.empty() || request.positive_id.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": mining record needs 'text' and 'positive_id'");
        }
        requests.push_back(std::move(request));
    }
    return requests;
}

std::string example_to_json_line(const TrainingExample& example) {
    json negatives = json::array();
    for (const Negative& negative : example.negatives) {
        negatives.push_back({{"skill_id", negative.skill_id},
                             {"source", std::string(negative_source_name(negative.source))}});
    }
    json record;
    if (!example.query_id.empty()) record["query_id"] = example.query_id;
    record["query"] = example.query_text;
    record["positive_id"] = example.positive_id;
    record["negatives"] = std::move(negatives);
    if (example.flagged) record["flagged"] = true;
    return record.dump();
}

std::vector<TrainingExample> load_examples_file(const std::string& path) {
    auto in = open_in(path);
    std::vector<TrainingExample> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        TrainingExample example;
        example.query_id = record.value("query_id", "");
        example.query_text = record.value("query", "");
        example.positive_id = record.value("positive_id", "");
        if (example.positive_id.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": missing 'positive_id'");
        }
        for (const auto& negative : record.value("negatives", json::array())) {
            example.negatives.push_back(
                {negative.at("skill_id").get<std::string>(),
                 negative_source_from_name(negative.at("source").get<std::string>())});
        }
        example.flagged = record.value("flagged", false);
        examples.push_back(std::move(example));
    }
    return examples;
}

void write_examples_file(const std::string& path,
                         const std::vector<TrainingExample>& examples) {
    auto out = open_out(path);
    for (const TrainingExample& example : examples) {
        out << example_to_json_line(example) << '\n';
    }
}

std::vector<ListwiseGroup> load_groups_file(const std::string& path) {
    auto in = open_in(path);
    std::vector<ListwiseGroup> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        ListwiseGroup group;
        group.query_id = record.value("query_id", "");
        group.query_text = record.value("query", "");
        for (const auto& candidate : record.value("candidates", json::array())) {
            group.candidates.push_back({candidate.at("skill_id").get<std::string>(),
                                        candidate.at("label").get<int>()});
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

void write_groups_file(const std::string& path, const std::vector<ListwiseGroup>& groups) {
    auto out = open_out(path);
    for (const ListwiseGroup& group : groups) {
        json candidates = json::array();
        for (const LabeledCandidate& candidate : group.candidates) {
            candidates.push_back(
                {{"skill_id", candidate.skill_id}, {"label", candidate.label}});
        }
        json record;
        if (!group.query_id.empty()) record["query_id"] = group.query_id;
        record["query"] = group.query_text;
        record["candidates"] = std::move(candidates);
        out << record.dump() << '\n';
    }
}

void save_bm25_file(const std::string& path, const Bm25Index& index) {
    auto out = open_out(path);
    index.save(out);
}

Bm25Index load_bm25_file(const std::string& path) {
    auto in = open_in(path);
    return Bm25Index::load(in);
}

void save_vector_index_file(const std::string& path, const VectorIndex& index) {
    auto out = open_out(path);
    index.save(out);
}

VectorIndex load_vector_index_file(const std::string& path) {
    auto in = open_in(path);
    return VectorIndex::load(in);
}

VectorIndex vector_index_from_embedding_file(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty embedding file");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("dim")) {
        throw ParseError(path + ": expected {\"dim\": d} header");
    }
    const auto dim = header.at("dim").get<std::size_t>();

    std::vector<std::string> ids;
    std::vector<std::vector<float>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json record = parse_line(line, path, line_no);
        const auto& values = record.at("vector");
        if (values.size() != dim) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": dimension mismatch");
        }
        ids.push_back(record.at("id").get<std::string>());
        std::vector<float> row;
        row.reserve(dim);
        for (const auto& v : values) row.push_back(v.get<float>());
        rows.push_back(std::move(row));
    }
    Matrix matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return VectorIndex::from_rows(std::move(ids), std::move(matrix));
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (const char c : data) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string file_digest_hex(const std::string& path) {
    const std::uint64_t digest = fnv1a64(read_file(path));
    std::ostringstream os;
    os << std::hex << digest;
    return os.str();
}

}  // namespace skillrank

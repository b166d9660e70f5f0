#include "skillrank/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {
using nlohmann::json;
constexpr int kIndexVersion = 1;
}  // namespace

Bm25Index Bm25Index::build(const SkillPool& pool, const FieldCaps& caps, SkillFormat format,
                           const Bm25Params& params) {
    if (pool.empty()) throw ValidationError("build_bm25: pool is empty");
    std::vector<std::string> ids;
    std::vector<std::string> docs;
    ids.reserve(pool.size());
    docs.reserve(pool.size());
    for (const Skill& skill : pool.skills) {
        ids.push_back(skill.id);
        docs.push_back(flatten_skill(skill, format, caps));
    }
    return from_documents(std::move(ids), docs, params);
}

Bm25Index Bm25Index::from_documents(std::vector<std::string> ids,
                                    const std::vector<std::string>& documents,
                                    const Bm25Params& params) {
    if (ids.size() != documents.size()) {
        throw ValidationError("bm25: ids and documents differ in length");
    }
    if (documents.empty()) throw ValidationError("bm25: no documents");
    if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw ValidationError("bm25: require k1 > 0 and 0 <= b <= 1");
    }

    Bm25Index index;
    index.params_ = params;
    index.ids_ = std::move(ids);
    index.doc_lengths_.resize(documents.size());

    std::uint64_t total_length = 0;
    std::unordered_map<std::string, std::uint32_t> tf;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        tf.clear();
        const auto tokens = tokenize(documents[d]);
        for (const auto& token : tokens) ++tf[token];
        index.doc_lengths_[d] = static_cast<std::uint32_t>(tokens.size());
        total_length += tokens.size();
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(d), count});
        }
    }
    index.avg_doc_length_ =
        static_cast<double>(total_length) / static_cast<double>(documents.size());
    // Postings are appended in ascending doc order already; keep it explicit
    // for the load path.
    for (auto& [term, list] : index.postings_) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
    }
    return index;
}

double Bm25Index::idf(std::string_view term) const {
    const auto it = postings_.find(std::string(term));
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(doc_count());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::score_document(const std::vector<std::string>& query_tokens,
                                 std::size_t doc_index) const {
    double score = 0.0;
    const double dl = static_cast<double>(doc_lengths_[doc_index]);
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * dl / avg_doc_length_);
    for (const auto& token : query_tokens) {
        const auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        const auto pos = std::lower_bound(
            list.begin(), list.end(), doc_index,
            [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (pos == list.end() || pos->doc != doc_index) continue;
        const double tf = static_cast<double>(pos->tf);
        score += idf(token) * tf * (params_.k1 + 1.0) / (tf + norm);
    }
    return score;
}

Ranking Bm25Index::search(std::string_view query_text, std::size_t k) const {
    if (k == 0) throw ValidationError("bm25_search: k must be >= 1");
    const auto query_tokens = tokenize(query_text);

    // Each query token occurrence contributes once, so repeated terms weigh
    // by their query frequency.
    std::vector<double> scores(doc_count(), 0.0);
    std::vector<bool> touched(doc_count(), false);
    for (const auto& token : query_tokens) {
        const auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        const double term_idf = idf(token);
        for (const Posting& posting : it->second) {
            const double dl = static_cast<double>(doc_lengths_[posting.doc]);
            const double norm =
                params_.k1 * (1.0 - params_.b + params_.b * dl / avg_doc_length_);
            const double tf = static_cast<double>(posting.tf);
            scores[posting.doc] += term_idf * tf * (params_.k1 + 1.0) / (tf + norm);
            touched[posting.doc] = true;
        }
    }

    std::vector<std::uint32_t> candidates;
    for (std::uint32_t d = 0; d < doc_count(); ++d) {
        if (touched[d] && scores[d] > 0.0) candidates.push_back(d);
    }
    const std::size_t top = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(top),
                      candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    candidates.resize(top);

    Ranking ranking;
    ranking.hits.reserve(top);
    for (const std::uint32_t d : candidates) {
        ranking.hits.push_back({ids_[d], scores[d]});
    }
    return ranking;
}

void Bm25Index::save(std::ostream& out) const {
    json header = {{"format", "skillrank.bm25"},
                   {"version", kIndexVersion},
                   {"k1", params_.k1},
                   {"b", params_.b},
                   {"doc_count", doc_count()},
                   {"avg_doc_length", avg_doc_length_}};
    out << header.dump() << '\n';
    for (std::size_t d = 0; d < ids_.size(); ++d) {
        json row = {{"id", ids_[d]}, {"len", doc_lengths_[d]}};
        out << row.dump() << '\n';
    }
    for (const auto& [term, list] : postings_) {
        json row;
        row["t"] = term;
        json docs = json::array();
        json tfs = json::array();
        for (const Posting& p : list) {
            docs.push_back(p.doc);
            tfs.push_back(p.tf);
        }
        row["d"] = std::move(docs);
        row["f"] = std::move(tfs);
        out << row.dump() << '\n';
    }
}

Bm25Index Bm25Index::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("bm25 index file is empty");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "skillrank.bm25") {
        throw ParseError("bm25 index: bad header");
    }
    if (header.value("version", 0) != kIndexVersion) {
        throw ParseError("bm25 index: unsupported version");
    }

    Bm25Index index;
    index.params_.k1 = header.at("k1").get<double>();
    index.params_.b = header.at("b").get<double>();
    index.avg_doc_length_ = header.at("avg_doc_length").get<double>();
    const auto doc_count = header.at("doc_count").get<std::size_t>();

    for (std::size_t d = 0; d < doc_count; ++d) {
        if (!std::getline(in, line)) throw ParseError("bm25 index: truncated document table");
        json row = json::parse(line);
        index.ids_.push_back(row.at("id").get<std::string>());
        index.doc_lengths_.push_back(row.at("len").get<std::uint32_t>());
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        const auto term = row.at("t").get<std::string>();
        const auto& docs = row.at("d");
        const auto& tfs = row.at("f");
        auto& list = index.postings_[term];
        list.reserve(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            list.push_back({docs[i].get<std::uint32_t>(), tfs[i].get<std::uint32_t>()});
        }
    }
    return index;
}

}  // namespace skillrank

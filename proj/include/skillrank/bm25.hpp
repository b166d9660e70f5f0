#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skillrank/corpus.hpp"
#include "skillrank/types.hpp"

namespace skillrank {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Okapi BM25 over flattened skill text. Immutable after build; concurrent
// searches are safe.
class Bm25Index {
public:
    // Documents are flatten_skill(skill, format, caps) outputs in pool order.
    static Bm25Index build(const SkillPool& pool, const FieldCaps& caps,
                           SkillFormat format = SkillFormat::full,
                           const Bm25Params& params = {});

    // Builds from raw documents paired with ids; used by tests and the
    // save/load round trip.
    static Bm25Index from_documents(std::vector<std::string> ids,
                                    const std::vector<std::string>& documents,
                                    const Bm25Params& params = {});

    // Top-k by Okapi score, ties broken by ascending document index.
    // Zero-scoring documents are omitted, so the result may be shorter than k.
    Ranking search(std::string_view query_text, std::size_t k) const;

    // Score of one document for a tokenized query; exposed so a brute-force
    // scan can share the exact scoring path in diagnostics.
    double score_document(const std::vector<std::string>& query_tokens,
                          std::size_t doc_index) const;

    // idf(term) with the +1-inside-the-log Robertson-Sparck-Jones form.
    double idf(std::string_view term) const;

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& ids() const { return ids_; }

    void save(std::ostream& out) const;
    static Bm25Index load(std::istream& in);

private:
    Bm25Index() = default;

    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };

    Bm25Params params_;
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace skillrank

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skillrank {

// Base error for everything this library throws on its own behalf.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (bad record, bad file header, bad template).
struct ParseError : Error {
    using Error::Error;
};

// A precondition or invariant was violated by the caller or the data.
struct ValidationError : Error {
    using Error::Error;
};

// An external provider (embedding, reranker, judge, chat) failed.
struct ProviderError : Error {
    using Error::Error;
};

struct ScoredHit {
    std::string skill_id;
    double score = 0.0;
};

// Ordered result list for one query, best hit first.
struct Ranking {
    std::string query_id;
    std::vector<ScoredHit> hits;

    bool empty() const { return hits.empty(); }
    std::size_t size() const { return hits.size(); }
};

}  // namespace skillrank

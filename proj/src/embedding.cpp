#include "skillrank/embedding.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "skillrank/text.hpp"

namespace skillrank {

namespace {

using nlohmann::json;

// FNV-1a, stable across platforms so stub embeddings are reproducible.
std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (const char c : data) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ULL;
    }
    return hash;
}

Vector parse_vector(const json& values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = values[i].get<float>();
    }
    return v;
}

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    // httplib takes scheme://host:port as the client target; anything after
    // the authority belongs to the path prefix.
    const auto scheme = endpoint.find("://");
    const auto path_start =
        endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

std::vector<Vector> EmbeddingProvider::embed_queries(
    const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed_query(text));
    return out;
}

std::vector<Vector> EmbeddingProvider::embed_documents(
    const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed_document(text));
    return out;
}

HashedTfProvider::HashedTfProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ValidationError("HashedTfProvider: dimension must be > 0");
}

std::string HashedTfProvider::name() const {
    return "hashed-tf-" + std::to_string(dimension_);
}

Vector HashedTfProvider::embed(std::string_view text) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dimension_));
    for (const auto& token : tokenize(text)) {
        const auto bucket = static_cast<Eigen::Index>(fnv1a(token) % dimension_);
        v[bucket] += 1.0f;
    }
    const float norm = v.norm();
    if (norm == 0.0f) {
        v[0] = 1.0f;
        return v;
    }
    return v / norm;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("embedding file is empty: " + path);
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("dim")) {
        throw ParseError("embedding file must start with a {\"dim\": d} header: " + path);
    }
    dimension_ = header.at("dim").get<std::size_t>();
    if (dimension_ == 0) throw ParseError("embedding file declares dim 0: " + path);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("id") || !record.contains("vector")) {
            throw ParseError("embedding file line " + std::to_string(line_no) +
                             ": expected {id, vector}");
        }
        Vector v = parse_vector(record.at("vector"));
        if (static_cast<std::size_t>(v.size()) != dimension_) {
            throw ParseError("embedding file line " + std::to_string(line_no) +
                             ": vector dimension " + std::to_string(v.size()) +
                             " != declared " + std::to_string(dimension_));
        }
        by_key_.emplace(record.at("id").get<std::string>(), vectors_.size());
        vectors_.push_back(std::move(v));
    }
}

bool FileEmbeddingProvider::has_id(std::string_view id) const {
    return by_key_.count(std::string(id)) > 0;
}

Vector FileEmbeddingProvider::lookup(std::string_view text, std::string_view id_hint) const {
    if (!id_hint.empty()) {
        const auto it = by_key_.find(std::string(id_hint));
        if (it != by_key_.end()) return vectors_[it->second];
    }
    const auto it = by_key_.find(std::string(text));
    if (it != by_key_.end()) return vectors_[it->second];
    throw ProviderError("no precomputed embedding for id '" + std::string(id_hint) +
                        "' or text key");
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)), dimension_(config_.dimension) {
    if (config_.endpoint.empty()) {
        throw ValidationError("http embedding provider: endpoint is required");
    }
}

HttpEmbeddingProvider::~HttpEmbeddingProvider() = default;

std::size_t HttpEmbeddingProvider::dimension() const {
    if (dimension_ == 0) {
        throw ProviderError("http embedding provider: dimension unknown before first call");
    }
    return dimension_;
}

std::vector<Vector> HttpEmbeddingProvider::request(const std::vector<std::string>& texts,
                                                   std::string_view kind) const {
    const auto [host, prefix] = split_endpoint(config_.endpoint);
    httplib::Client client(host);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["texts"] = texts;
    body["kind"] = kind;
    if (kind == "query" && !config_.instruction.empty()) {
        body["instruction"] = config_.instruction;
    }
    const std::string payload = body.dump();
    const std::string path = prefix + config_.path;

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("vectors")) {
            last_error = "malformed response body";
            continue;
        }
        const auto& rows = reply.at("vectors");
        if (rows.size() != texts.size()) {
            last_error = "response vector count mismatch";
            continue;
        }
        std::vector<Vector> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            Vector v = parse_vector(row);
            if (dimension_ == 0) dimension_ = static_cast<std::size_t>(v.size());
            if (static_cast<std::size_t>(v.size()) != dimension_) {
                throw ProviderError("embedding service returned mixed dimensions");
            }
            out.push_back(std::move(v));
        }
        return out;
    }
    throw ProviderError("embedding service unreachable after " +
                        std::to_string(config_.retries + 1) + " attempts (" + last_error +
                        ")");
}

Vector HttpEmbeddingProvider::embed_query(std::string_view text) const {
    return request({std::string(text)}, "query").front();
}

Vector HttpEmbeddingProvider::embed_document(std::string_view text) const {
    return request({std::string(text)}, "document").front();
}

std::vector<Vector> HttpEmbeddingProvider::embed_queries(
    const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const auto end = std::min(texts.size(), start + config_.batch_size);
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vectors = request(batch, "query");
        for (auto& v : vectors) out.push_back(std::move(v));
    }
    return out;
}

std::vector<Vector> HttpEmbeddingProvider::embed_documents(
    const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const auto end = std::min(texts.size(), start + config_.batch_size);
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vectors = request(batch, "document");
        for (auto& v : vectors) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace skillrank

#include "skillrank/chat.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "skillrank/types.hpp"

namespace skillrank {

namespace {
using nlohmann::json;

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    const auto path_start =
        endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}
}  // namespace

ChatClient::ChatClient(ChatConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("chat client: endpoint is required");
    }
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
    const auto [host, prefix] = split_endpoint(config_.endpoint);
    httplib::Client client(host);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    json rows = json::array();
    for (const auto& message : messages) {
        rows.push_back({{"role", message.role}, {"content", message.content}});
    }
    body["messages"] = std::move(rows);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        auto res = client.Post(prefix + config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) {
            last_error = "malformed response body";
            continue;
        }
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            last_error = "response missing choices[0].message.content";
        }
    }
    throw ProviderError("chat service failed after " + std::to_string(config_.retries + 1) +
                        " attempts (" + last_error + ")");
}

}  // namespace skillrank

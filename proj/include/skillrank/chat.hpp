#pragma once

#include <string>
#include <vector>

namespace skillrank {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatConfig {
    std::string endpoint;  // http://host:port
    std::string path = "/v1/chat/completions";
    std::string model;
    double temperature = 0.0;
    int retries = 1;
    int timeout_seconds = 60;
    std::string api_key_env = "SKILLRANK_API_KEY";
};

// Chat-completion style client: POST {model, messages, temperature} and read
// choices[0].message.content. Throws ProviderError after retries.
class ChatClient {
public:
    explicit ChatClient(ChatConfig config);

    std::string complete(const std::vector<ChatMessage>& messages) const;

    const ChatConfig& config() const { return config_; }

private:
    ChatConfig config_;
};

}  // namespace skillrank

#include "skillrank/text.hpp"

#include <algorithm>
#include <cctype>

namespace skillrank {

namespace {

inline bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

// Length in bytes of the UTF-8 sequence starting at `pos`, at least 1.
std::size_t sequence_length(std::string_view text, std::size_t pos) {
    const auto lead = static_cast<unsigned char>(text[pos]);
    std::size_t len = 1;
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
    } else {
        return 1;  // ASCII or invalid lead byte
    }
    for (std::size_t i = 1; i < len; ++i) {
        if (pos + i >= text.size() ||
            !is_utf8_continuation(static_cast<unsigned char>(text[pos + i]))) {
            return 1;  // truncated or malformed sequence, consume one byte
        }
    }
    return len;
}

inline bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

inline bool is_token_byte(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }

}  // namespace

std::size_t utf8_length(std::string_view text) {
    std::size_t chars = 0;
    for (std::size_t pos = 0; pos < text.size(); pos += sequence_length(text, pos)) {
        ++chars;
    }
    return chars;
}

std::string utf8_prefix(std::string_view text, std::size_t max_chars) {
    std::size_t chars = 0;
    std::size_t pos = 0;
    while (pos < text.size() && chars < max_chars) {
        pos += sequence_length(text, pos);
        ++chars;
    }
    return std::string(text.substr(0, pos));
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    const std::string h = to_lower(haystack);
    const std::string n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

}  // namespace skillrank

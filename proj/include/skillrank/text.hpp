#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace skillrank {

// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count as
// one character each so truncation never loops or throws on dirty input.
std::size_t utf8_length(std::string_view text);

// Prefix of at most `max_chars` Unicode scalar values, never splitting a
// multi-byte sequence.
std::string utf8_prefix(std::string_view text, std::size_t max_chars);

// Words are maximal runs of non-whitespace bytes.
std::vector<std::string_view> split_words(std::string_view text);
std::size_t word_count(std::string_view text);

// ASCII lowercase; bytes outside A-Z pass through.
std::string to_lower(std::string_view text);

// Case-insensitive (ASCII) substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

// Lowercased maximal runs of ASCII alphanumerics; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace skillrank

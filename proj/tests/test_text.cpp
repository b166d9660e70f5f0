#include <doctest.h>

#include "skillrank/text.hpp"

using namespace skillrank;

TEST_CASE("utf8 truncation counts scalar values, not bytes") {
    CHECK(utf8_length("abc") == 3);
    CHECK(utf8_length("") == 0);
    // "héllo" has 5 characters, 6 bytes.
    const std::string accented = "h\xc3\xa9llo";
    CHECK(utf8_length(accented) == 5);
    CHECK(utf8_prefix(accented, 2) == "h\xc3\xa9");
    CHECK(utf8_prefix(accented, 50) == accented);
    CHECK(utf8_prefix("", 10).empty());
}

TEST_CASE("utf8_prefix never splits a multi-byte sequence") {
    const std::string snowman = "\xe2\x98\x83\xe2\x98\x83";  // two 3-byte chars
    CHECK(utf8_prefix(snowman, 1) == "\xe2\x98\x83");
    CHECK(utf8_length(snowman) == 2);
}

TEST_CASE("utf8 helpers tolerate malformed bytes") {
    const std::string bad = "a\xff\xfe" "b";
    CHECK(utf8_length(bad) == 4);
    CHECK(utf8_prefix(bad, 2) == "a\xff");
}

TEST_CASE("word splitting uses whitespace runs") {
    CHECK(word_count("one two  three\tfour\nfive") == 5);
    CHECK(word_count("   ") == 0);
    CHECK(word_count("") == 0);
    const auto words = split_words("  a b  ");
    REQUIRE(words.size() == 2);
    CHECK(words[0] == "a");
    CHECK(words[1] == "b");
}

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
    CHECK(tokenize("Speech-to-Text!") == std::vector<std::string>{"speech", "to", "text"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("git2 Git2") == std::vector<std::string>{"git2", "git2"});
    CHECK(tokenize("__a__b__") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("contains_ci is case-insensitive substring") {
    CHECK(contains_ci("My Speech-To-Text tool", "speech-to-text"));
    CHECK_FALSE(contains_ci("speech to text", "speech-to-text"));
    CHECK(contains_ci("anything", ""));
}

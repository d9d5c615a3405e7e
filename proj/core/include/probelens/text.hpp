#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace probelens {

/// Lowercases ASCII letters, splits on whitespace, strips ASCII punctuation
/// from both ends of every token, drops tokens left empty and rejoins with
/// single spaces. Idempotent.
std::string normalize_answer_text(std::string_view text);

/// Tokens of normalize_answer_text(text).
std::vector<std::string> normalized_tokens(std::string_view text);

/// normalize(needle) is a substring of normalize(haystack). An empty
/// needle never matches.
bool contains_normalized(std::string_view haystack, std::string_view needle);

/// normalize(token) equals one whole token of normalize(haystack).
bool contains_normalized_token(std::string_view haystack, std::string_view token);

/// First max_chars code points of UTF-8 `text` (all of it if shorter).
std::string_view utf8_prefix(std::string_view text, std::size_t max_chars);

}  // namespace probelens

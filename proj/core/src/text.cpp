#include "probelens/text.hpp"

#include <algorithm>

namespace probelens {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
         (c >= 0x7b && c <= 0x7e);
}

}  // namespace

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t begin = i;
    std::size_t end = j;
    while (begin < end && is_punct(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && is_punct(static_cast<unsigned char>(text[end - 1]))) --end;
    if (begin < end) {
      std::string token(text.substr(begin, end - begin));
      std::transform(token.begin(), token.end(), token.begin(), [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      });
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

std::string normalize_answer_text(std::string_view text) {
  std::string out;
  for (const auto& token : normalized_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
  const std::string n = normalize_answer_text(needle);
  if (n.empty()) return false;
  return normalize_answer_text(haystack).find(n) != std::string::npos;
}

bool contains_normalized_token(std::string_view haystack, std::string_view token) {
  const std::string t = normalize_answer_text(token);
  if (t.empty()) return false;
  const auto tokens = normalized_tokens(haystack);
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

std::string_view utf8_prefix(std::string_view text, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    // Lead bytes start a code point; continuation bytes are 10xxxxxx.
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (chars == max_chars) return text.substr(0, i);
      ++chars;
    }
  }
  return text;
}

}  // namespace probelens

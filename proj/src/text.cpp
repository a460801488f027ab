#include "qcqc/text.hpp"

#include <cctype>

namespace qcqc {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string join_words(std::span<const std::string> words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  return join_words(split_words(text));
}

std::vector<std::string> match_keys(std::string_view text) {
  std::vector<std::string> keys;
  for (const auto& word : split_words(text)) {
    std::size_t b = 0;
    std::size_t e = word.size();
    // Non-ASCII bytes are kept; only ASCII punctuation is trimmed.
    while (b < e && !is_alnum(word[b]) && static_cast<unsigned char>(word[b]) < 0x80) ++b;
    while (e > b && !is_alnum(word[e - 1]) && static_cast<unsigned char>(word[e - 1]) < 0x80) {
      --e;
    }
    if (b == e) continue;
    keys.push_back(to_lower_ascii(std::string_view(word).substr(b, e - b)));
  }
  if (!keys.empty() && (keys.front() == "a" || keys.front() == "an")) {
    keys.erase(keys.begin());
  }
  return keys;
}

std::string with_article(std::string_view name) {
  const auto trimmed = collapse_whitespace(name);
  if (trimmed.empty()) return trimmed;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(trimmed.front())));
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  return (vowel ? "an " : "a ") + trimmed;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace qcqc

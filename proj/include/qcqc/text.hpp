#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qcqc {

/// Splits on ASCII whitespace; no empty tokens.
std::vector<std::string> split_words(std::string_view text);

std::string to_lower_ascii(std::string_view text);

std::string join_words(std::span<const std::string> words, std::string_view sep = " ");

/// Whitespace-collapsed, trimmed copy of `text`.
std::string collapse_whitespace(std::string_view text);

/// Lowercased word keys with surrounding punctuation removed and one leading
/// article ("a"/"an") dropped. Used for prefix comparison.
std::vector<std::string> match_keys(std::string_view text);

/// "an" before a vowel-initial name, "a" otherwise: "an apple", "a dog".
std::string with_article(std::string_view name);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace qcqc

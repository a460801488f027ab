#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcqc/gallery.hpp"

namespace qcqc {

/// Quality-stratified synthetic gallery.
///
/// Record i describes noun i % |nouns| and falls in quality cell
/// (i / |nouns| + i % |nouns|) % levels^2, so every (noun, cell) pair is
/// populated once n >= |nouns| * levels^2. Captions read
/// "<article> <noun> <clutter words> <style words>":
///   - the relevance bucket fixes how many clutter words follow the noun;
///     rel_score falls linearly with that count (plus small noise), so
///     concise captions are both more relevant and closer to the bare
///     prefix under the mock embedder;
///   - the aesthetic bucket picks the style vocabulary and centers
///     aes_score (plus noise). Higher buckets use more style words, which
///     also cost a little relevance, so aesthetics and relevance trade off
///     among the near neighbours of a bare prefix.
/// Embeddings are mock_embed(caption, dim, embed_seed).
struct SynthConfig {
  std::size_t n = 3000;
  std::size_t levels = 3;  // 3 or 5
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::uint64_t embed_seed = 0;
  std::vector<std::string> nouns;  // empty: the 80 COCO class names
  double rel_noise = 0.02;
  double aes_noise = 0.25;
};

/// Scored, unlevelled gallery.
Gallery make_synthetic_gallery(const SynthConfig& config);

}  // namespace qcqc

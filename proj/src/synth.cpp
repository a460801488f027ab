#include "qcqc/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include "qcqc/embedder.hpp"
#include "qcqc/error.hpp"
#include "qcqc/prefixes.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

namespace {

// Style vocabulary for five aesthetic buckets, lowest first. Bucket b
// draws b + 1 words, so better-looking captions say more about style.
// Three-level galleries use buckets 0, 2 and 4.
const std::array<std::vector<std::string>, 5>& style_words() {
  static const std::array<std::vector<std::string>, 5> words{{
      {"grainy", "blurry", "washed", "dim", "noisy", "murky", "smeared", "underexposed"},
      {"flat", "plain", "dull", "casual", "overcast", "muted", "ordinary", "hazy"},
      {"clear", "balanced", "natural", "neat", "steady", "soft", "tidy", "even"},
      {"vivid", "crisp", "warm", "sharp", "rich", "bright", "glowing", "detailed"},
      {"stunning", "golden", "dramatic", "cinematic", "breathtaking", "luminous", "majestic",
       "painterly"},
  }};
  return words;
}

const std::vector<std::string>& clutter_words() {
  static const std::vector<std::string> words{
      "behind",  "cluttered", "shelves", "background", "crowded", "street",  "partially",
      "hidden",  "among",     "boxes",   "distant",    "corner",  "under",   "table",
      "random",  "objects",   "far",     "away",       "tangled", "wires",   "piles",
      "papers",  "near",      "window",  "reflection", "messy",   "room",    "faded",
      "poster",  "parked",    "vans",    "fence"};
  return words;
}

std::size_t style_bucket(std::size_t bucket, std::size_t levels) {
  return levels == 5 ? bucket : bucket * 2;
}

}  // namespace

Gallery make_synthetic_gallery(const SynthConfig& config) {
  if (config.levels != 3 && config.levels != 5) {
    throw Error(ErrorCode::InvalidArgument, "synthetic galleries support 3 or 5 levels");
  }
  if (config.n == 0) throw Error(ErrorCode::InvalidArgument, "synthetic gallery size must be > 0");
  const auto& nouns = config.nouns.empty() ? coco_class_names() : config.nouns;
  if (nouns.empty()) throw Error(ErrorCode::InvalidArgument, "synthetic gallery needs nouns");

  const std::size_t levels = config.levels;
  const std::size_t cells = levels * levels;
  const std::size_t words_per_bucket = levels == 3 ? 3 : 2;
  const std::size_t max_words = levels * words_per_bucket - 1;
  const double rel_top = 0.9;
  const double rel_slope = 1.8 / static_cast<double>(max_words);
  const double style_penalty = 0.05;
  const double aes_low = 3.0;
  const double aes_step = 3.6 / static_cast<double>(levels - 1);

  std::mt19937_64 rng(mix64(config.seed));
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  const auto& clutter = clutter_words();

  std::vector<GalleryRecord> records;
  records.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const std::size_t noun = i % nouns.size();
    const std::size_t round = i / nouns.size();
    const std::size_t cell = (round + noun) % cells;
    // Bucket 0 is the lowest quality on each axis.
    const std::size_t rel_bucket = cell / levels;
    const std::size_t aes_bucket = cell % levels;

    // High relevance means few clutter words.
    const std::size_t word_base = (levels - 1 - rel_bucket) * words_per_bucket;
    const std::size_t n_words = word_base + rng() % words_per_bucket;

    std::string caption = with_article(nouns[noun]);
    for (std::size_t w = 0; w < n_words; ++w) {
      caption += ' ';
      caption += clutter[rng() % clutter.size()];
    }
    const std::size_t style = style_bucket(aes_bucket, levels);
    auto pool = style_words()[style];
    for (std::size_t w = 0; w <= style; ++w) {
      std::swap(pool[w], pool[w + rng() % (pool.size() - w)]);
      caption += ' ';
      caption += pool[w];
    }

    const double rel = std::clamp(rel_top - rel_slope * static_cast<double>(n_words) -
                                      style_penalty * static_cast<double>(style) +
                                      config.rel_noise * unit_normal(rng),
                                  -1.0, 1.0);
    const double aes = aes_low + aes_step * static_cast<double>(aes_bucket) +
                       config.aes_noise * unit_normal(rng);

    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", i);
    GalleryRecord r;
    r.id = id;
    r.embedding = mock_embed(caption, config.dim, config.embed_seed);
    r.caption = std::move(caption);
    r.aes_score = aes;
    r.rel_score = rel;
    records.push_back(std::move(r));
  }
  return Gallery(std::move(records));
}

}  // namespace qcqc

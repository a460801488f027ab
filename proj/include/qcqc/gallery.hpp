#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qcqc/level_scheme.hpp"

namespace qcqc {

/// One image of the retrieval gallery: id, caption, unit-norm embedding and
/// the two quality scores. Levels are filled in by assign_levels().
struct GalleryRecord {
  std::string id;
  std::string caption;
  std::vector<float> embedding;
  std::optional<double> aes_score;
  std::optional<double> rel_score;
  std::optional<std::size_t> rel_level;
  std::optional<std::size_t> aes_level;

  bool has_scores() const noexcept { return aes_score && rel_score; }
  bool has_levels() const noexcept { return rel_level && aes_level; }

  bool operator==(const GalleryRecord&) const = default;
};

/// Immutable, validated collection of records sharing one embedding
/// dimension. Construction throws qcqc::Error when an invariant fails.
class Gallery {
 public:
  Gallery() = default;
  explicit Gallery(std::vector<GalleryRecord> records,
                   std::optional<LevelScheme> rel_scheme = std::nullopt,
                   std::optional<LevelScheme> aes_scheme = std::nullopt);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return dim_; }

  const GalleryRecord& operator[](std::size_t i) const { return records_[i]; }
  std::span<const GalleryRecord> records() const noexcept { return records_; }
  std::span<const float> embedding(std::size_t i) const noexcept {
    return records_[i].embedding;
  }

  const std::optional<LevelScheme>& rel_scheme() const noexcept { return rel_scheme_; }
  const std::optional<LevelScheme>& aes_scheme() const noexcept { return aes_scheme_; }

  /// True when both schemes are attached (levels were assigned).
  bool has_levels() const noexcept { return rel_scheme_ && aes_scheme_; }

  std::optional<std::size_t> find(std::string_view id) const;

  /// Records carrying both scores, in original order. Levels and schemes are
  /// kept.
  Gallery scored_subset() const;

  /// FNV-1a digest over ids, captions, embedding bits and scores (hex).
  std::string content_hash() const;

  bool operator==(const Gallery& other) const {
    return records_ == other.records_ && rel_scheme_ == other.rel_scheme_ &&
           aes_scheme_ == other.aes_scheme_;
  }

 private:
  std::vector<GalleryRecord> records_;
  std::size_t dim_ = 0;
  std::optional<LevelScheme> rel_scheme_;
  std::optional<LevelScheme> aes_scheme_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Row-major float32 matrix as stored in the binary embedding file.
struct EmbeddingFile {
  std::uint64_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

inline constexpr char kEmbeddingMagic[4] = {'Q', 'C', 'Q', 'C'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Norm tolerance after ingestion.
inline constexpr double kUnitNormTolerance = 1e-6;
/// Largest norm deviation silently renormalized at ingestion.
inline constexpr double kRenormalizeTolerance = 1e-3;
/// Norms below this are rejected as zero vectors.
inline constexpr double kZeroNorm = 1e-12;

EmbeddingFile read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);

/// Brings a near-unit vector to unit norm in place. Throws ZeroVector or
/// NormError per the ingestion tolerance rule.
void normalize_embedding(std::vector<float>& v, std::string_view id);

/// Reads a JSONL manifest plus a binary embedding file into a Gallery.
Gallery ingest(const std::filesystem::path& manifest_path,
               const std::filesystem::path& embeddings_path);

/// Cosine of two unit vectors: a dot product with 64-bit accumulation,
/// clamped to [-1, 1].
double compute_relevance(std::span<const float> image_embedding,
                         std::span<const float> text_embedding);

/// Directory layout: manifest.jsonl, embeddings.bin and, when levels are
/// assigned, levels.json.
void save(const Gallery& gallery, const std::filesystem::path& dir);
Gallery load(const std::filesystem::path& dir);

}  // namespace qcqc

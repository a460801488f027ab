#pragma once

#include <span>
#include <string>
#include <vector>

#include "qcqc/embedder.hpp"
#include "qcqc/gallery.hpp"

namespace qcqc {

/// Dense m x n cosine scores, row-major. Row i belongs to query_ids[i],
/// column j to gallery_ids[j].
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> query_ids;
  std::vector<std::string> gallery_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols, cols);
  }
};

struct Hit {
  std::size_t index = 0;  // position in the gallery
  std::string id;
  double score = 0.0;

  bool operator==(const Hit&) const = default;
};

struct QueryHits {
  std::string query_text;
  std::vector<Hit> hits;  // scores non-increasing, length min(eta, n)

  bool operator==(const QueryHits&) const = default;
};

struct RetrievalResult {
  std::vector<QueryHits> queries;

  bool operator==(const RetrievalResult&) const = default;
};

/// S_ij = q_i . c_j with 64-bit accumulation. Throws DimensionMismatch or
/// EmptyGallery. `query_ids` defaults to "q0", "q1", ...
ScoreMatrix score_matrix(std::span<const std::vector<float>> query_embeddings,
                         const Gallery& gallery, std::vector<std::string> query_ids = {});

/// Indices of the eta largest entries of `row`, best first; ties go to the
/// lower index. Uses a selection heap bounded at eta.
std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t eta);

/// Per-row top-eta. eta must be >= 1; eta > n returns all n.
RetrievalResult top_k(const ScoreMatrix& scores, std::size_t eta);

/// Top-eta hits for one query, computed on the calling thread.
std::vector<Hit> search_one(std::span<const float> query, const Gallery& gallery,
                            std::size_t eta);

/// Top-eta hits for each query embedding, scored in blocks of `block`
/// queries so memory stays O(block * n).
std::vector<std::vector<Hit>> search_embeddings(std::span<const std::vector<float>> queries,
                                                const Gallery& gallery, std::size_t eta,
                                                std::size_t block = 64);

/// embed -> score -> top-eta. An embedder failure is rethrown as
/// EmbedderFailureError naming the query.
RetrievalResult retrieve(std::span<const std::string> query_texts, const TextEmbedder& embedder,
                         const Gallery& gallery, std::size_t eta);

}  // namespace qcqc

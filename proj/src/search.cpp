#include "qcqc/search.hpp"

#include <algorithm>
#include <queue>

#include "qcqc/error.hpp"
#include "qcqc/parallel.hpp"

namespace qcqc {

namespace {

struct Scored {
  double score;
  std::size_t index;
};

// Strict "ranks ahead of": higher score, then lower index.
bool ranks_ahead(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

void check_query_dims(std::span<const std::vector<float>> queries, const Gallery& gallery) {
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no records");
  for (const auto& q : queries) {
    if (q.size() != gallery.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "query dimension " + std::to_string(q.size()) + " != gallery dimension " +
                      std::to_string(gallery.dim()));
    }
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return acc;
}

std::vector<Hit> to_hits(std::span<const double> row, std::size_t eta, const Gallery& gallery) {
  std::vector<Hit> hits;
  for (std::size_t idx : top_k_indices(row, eta)) {
    hits.push_back({idx, gallery[idx].id, row[idx]});
  }
  return hits;
}

}  // namespace

ScoreMatrix score_matrix(std::span<const std::vector<float>> query_embeddings,
                         const Gallery& gallery, std::vector<std::string> query_ids) {
  check_query_dims(query_embeddings, gallery);
  if (query_ids.empty()) {
    for (std::size_t i = 0; i < query_embeddings.size(); ++i) {
      query_ids.push_back("q" + std::to_string(i));
    }
  }
  if (query_ids.size() != query_embeddings.size()) {
    throw Error(ErrorCode::InvalidArgument, "query id count does not match query count");
  }

  ScoreMatrix s;
  s.rows = query_embeddings.size();
  s.cols = gallery.size();
  s.values.resize(s.rows * s.cols);
  s.query_ids = std::move(query_ids);
  s.gallery_ids.reserve(s.cols);
  for (const auto& r : gallery.records()) s.gallery_ids.push_back(r.id);

  parallel_for(s.rows, [&](std::size_t i) {
    double* out = s.values.data() + i * s.cols;
    for (std::size_t j = 0; j < s.cols; ++j) {
      out[j] = dot(query_embeddings[i], gallery.embedding(j));
    }
  });
  return s;
}

std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t eta) {
  if (eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  const std::size_t keep = std::min(eta, row.size());
  if (keep == 0) return {};

  // Max-heap under ranks_ahead keeps the weakest retained entry on top.
  auto cmp = [](const Scored& a, const Scored& b) { return ranks_ahead(a, b); };
  std::priority_queue<Scored, std::vector<Scored>, decltype(cmp)> heap(cmp);
  for (std::size_t j = 0; j < row.size(); ++j) {
    const Scored candidate{row[j], j};
    if (heap.size() < keep) {
      heap.push(candidate);
    } else if (ranks_ahead(candidate, heap.top())) {
      heap.pop();
      heap.push(candidate);
    }
  }

  std::vector<Scored> kept;
  kept.reserve(keep);
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::sort(kept.begin(), kept.end(), ranks_ahead);

  std::vector<std::size_t> out;
  out.reserve(keep);
  for (const auto& s : kept) out.push_back(s.index);
  return out;
}

RetrievalResult top_k(const ScoreMatrix& scores, std::size_t eta) {
  if (eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  RetrievalResult result;
  result.queries.resize(scores.rows);
  parallel_for(scores.rows, [&](std::size_t i) {
    auto& q = result.queries[i];
    q.query_text = i < scores.query_ids.size() ? scores.query_ids[i] : std::string();
    const auto row = scores.row(i);
    for (std::size_t idx : top_k_indices(row, eta)) {
      q.hits.push_back({idx, scores.gallery_ids[idx], row[idx]});
    }
  });
  return result;
}

std::vector<Hit> search_one(std::span<const float> query, const Gallery& gallery,
                            std::size_t eta) {
  if (eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no records");
  if (query.size() != gallery.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query dimension " + std::to_string(query.size()) + " != gallery dimension " +
                    std::to_string(gallery.dim()));
  }
  std::vector<double> row(gallery.size());
  for (std::size_t j = 0; j < gallery.size(); ++j) row[j] = dot(query, gallery.embedding(j));
  return to_hits(row, eta, gallery);
}

std::vector<std::vector<Hit>> search_embeddings(std::span<const std::vector<float>> queries,
                                                const Gallery& gallery, std::size_t eta,
                                                std::size_t block) {
  if (eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  check_query_dims(queries, gallery);
  block = std::max<std::size_t>(block, 1);

  std::vector<std::vector<Hit>> out(queries.size());
  std::vector<double> scores;
  for (std::size_t start = 0; start < queries.size(); start += block) {
    const std::size_t count = std::min(block, queries.size() - start);
    scores.assign(count * gallery.size(), 0.0);
    parallel_for(count, [&](std::size_t b) {
      std::span<double> row(scores.data() + b * gallery.size(), gallery.size());
      for (std::size_t j = 0; j < gallery.size(); ++j) {
        row[j] = dot(queries[start + b], gallery.embedding(j));
      }
      out[start + b] = to_hits(row, eta, gallery);
    });
  }
  return out;
}

RetrievalResult retrieve(std::span<const std::string> query_texts, const TextEmbedder& embedder,
                         const Gallery& gallery, std::size_t eta) {
  if (eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no records");

  std::vector<std::vector<float>> embeddings;
  embeddings.reserve(query_texts.size());
  for (const auto& text : query_texts) {
    try {
      embeddings.push_back(embedder.embed(text));
    } catch (const std::exception& e) {
      throw EmbedderFailureError(text, e.what());
    }
  }

  auto hits = search_embeddings(embeddings, gallery, eta);
  RetrievalResult result;
  result.queries.reserve(query_texts.size());
  for (std::size_t i = 0; i < query_texts.size(); ++i) {
    result.queries.push_back({query_texts[i], std::move(hits[i])});
  }
  return result;
}

}  // namespace qcqc

#include <gtest/gtest.h>

#include <random>

#include "qcqc/embedder.hpp"
#include "qcqc/error.hpp"
#include "qcqc/search.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace qcqc;
using qcqc::testing::basis;
using qcqc::testing::make_record;
using qcqc::testing::random_unit;
using qcqc::testing::topk_oracle;

namespace {

// Gallery in the first dim-1 axes so that the last axis yields an all-tie row.
Gallery tie_gallery(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::vector<GalleryRecord> recs;
  std::vector<float> prev;
  std::bernoulli_distribution dup(0.2);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v;
    if (!prev.empty() && dup(rng)) {
      v = prev;
    } else {
      v = random_unit(dim - 1, rng);
      v.push_back(0.0f);
    }
    prev = v;
    recs.push_back(make_record("g" + std::to_string(i), "c", v));
  }
  return Gallery(std::move(recs));
}

class FailingEmbedder final : public TextEmbedder {
 public:
  std::vector<float> embed(std::string_view) const override { throw std::runtime_error("down"); }
  std::size_t dim() const override { return 4; }
  std::string name() const override { return "failing"; }
};

}  // namespace

TEST(TopKIndices, MatchesStableSortOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(1 + trial % 60);
    for (auto& x : row) x = coarse(rng) * 0.25;
    for (std::size_t eta : {1u, 2u, 5u, 10u, 100u}) {
      const auto got = top_k_indices(row, eta);
      EXPECT_EQ(got, topk_oracle(row, eta));
      EXPECT_EQ(got.size(), std::min(eta, row.size()));
    }
  }
}

TEST(TopKIndices, AllTiesGoToLowestIndices) {
  const std::vector<double> row(9, 0.5);
  EXPECT_EQ(top_k_indices(row, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(top_k_indices(row, 0), Error);
}

TEST(ScoreMatrix, MatchesLongDoubleDotProducts) {
  std::mt19937_64 rng(4);
  const auto g = tie_gallery(rng, 40, 8);
  std::vector<std::vector<float>> qs;
  for (int i = 0; i < 6; ++i) qs.push_back(random_unit(8, rng));
  const auto s = score_matrix(qs, g);
  ASSERT_EQ(s.rows, 6u);
  ASSERT_EQ(s.cols, 40u);
  EXPECT_EQ(s.query_ids[2], "q2");
  EXPECT_EQ(s.gallery_ids[5], "g5");
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) {
      long double acc = 0;
      for (std::size_t k = 0; k < 8; ++k) acc += static_cast<long double>(qs[i][k]) * g[j].embedding[k];
      EXPECT_NEAR(s.at(i, j), static_cast<double>(acc), 1e-12);
    }
  }
}

TEST(ScoreMatrix, Errors) {
  const auto g = qcqc::testing::three_record_gallery();
  std::vector<std::vector<float>> bad{basis(3, 0)};
  EXPECT_THROW(
      {
        try {
          score_matrix(bad, g);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
          throw;
        }
      },
      Error);
  std::vector<std::vector<float>> ok{basis(4, 0)};
  EXPECT_THROW(score_matrix(ok, Gallery{}), Error);
  EXPECT_THROW(score_matrix(ok, g, {"x", "y"}), Error);
}

TEST(TopK, EtaLargerThanGalleryReturnsAll) {
  const auto g = qcqc::testing::three_record_gallery();
  const std::vector<float> q{0.6f, 0.8f, 0.0f, 0.0f};
  const auto hits = search_one(q, g, 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].id, "b");
  EXPECT_EQ(hits[1].id, "a");
  EXPECT_EQ(hits[2].id, "c");
  EXPECT_GE(hits[0].score, hits[1].score);
}

TEST(TopK, AllSearchPathsAgree) {
  std::mt19937_64 rng(8);
  const auto g = tie_gallery(rng, 300, 16);
  std::vector<std::vector<float>> qs;
  for (int i = 0; i < 70; ++i) qs.push_back(random_unit(16, rng));
  qs.push_back(basis(16, 15));  // all-tie row
  const auto s = score_matrix(qs, g);
  for (std::size_t eta : {1u, 5u, 10u}) {
    const auto full = top_k(s, eta);
    const auto blocked = search_embeddings(qs, g, eta, 7);
    ASSERT_EQ(full.queries.size(), qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const auto one = search_one(qs[i], g, eta);
      EXPECT_EQ(full.queries[i].hits, one);
      EXPECT_EQ(blocked[i], one);
      const std::vector<double> row(s.row(i).begin(), s.row(i).end());
      const auto oracle = topk_oracle(row, eta);
      ASSERT_EQ(one.size(), oracle.size());
      for (std::size_t r = 0; r < oracle.size(); ++r) EXPECT_EQ(one[r].index, oracle[r]);
    }
    const auto& tie = full.queries.back().hits;
    for (std::size_t r = 0; r < tie.size(); ++r) EXPECT_EQ(tie[r].index, r);
  }
}

TEST(Retrieve, EmbedsAndRanks) {
  const auto g = qcqc::testing::three_record_gallery();
  const MockEmbedder emb(4, 0);
  const std::vector<std::string> texts{"a dog", "a cat"};
  const auto res = retrieve(texts, emb, g, 2);
  ASSERT_EQ(res.queries.size(), 2u);
  EXPECT_EQ(res.queries[0].query_text, "a dog");
  EXPECT_EQ(res.queries[0].hits, search_one(emb.embed("a dog"), g, 2));
}

TEST(Retrieve, EmbedderFailureNamesQuery) {
  const auto g = qcqc::testing::three_record_gallery();
  const std::vector<std::string> texts{"a bowl"};
  try {
    retrieve(texts, FailingEmbedder{}, g, 1);
    FAIL() << "expected EmbedderFailureError";
  } catch (const EmbedderFailureError& e) {
    EXPECT_EQ(e.query(), "a bowl");
    EXPECT_EQ(e.code(), ErrorCode::EmbedderFailure);
  }
  EXPECT_THROW(retrieve(texts, MockEmbedder(4, 0), g, 0), Error);
  EXPECT_THROW(retrieve(texts, MockEmbedder(4, 0), Gallery{}, 1), Error);
}

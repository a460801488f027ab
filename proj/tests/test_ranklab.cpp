#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "qcqc/error.hpp"
#include "qcqc/ranklab.hpp"
#include "qcqc/text.hpp"
#include "support/oracles.hpp"

using namespace qcqc;
using namespace qcqc::ranklab;
using qcqc::testing::lemma_matrix_oracle;
using qcqc::testing::rank_oracle;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no qcqc::Error thrown";
  return ErrorCode::InvalidArgument;
}

struct Hand {
  Matrix A = (Matrix(3, 3) << 1, 0, 0, 0, 1, 0, 1, 1, 0).finished();
  Matrix Delta = [] {
    Matrix d = Matrix::Zero(3, 3);
    d(2, 2) = 0.1;
    return d;
  }();
  Matrix C = Matrix::Identity(3, 3);
};

Matrix low_rank(std::size_t m, std::size_t n, std::size_t r, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix L(m, r), R(n, r);
  for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = g(rng);
  return L * R.transpose();
}

}  // namespace

TEST(Primitives, RankMatchesOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + rng() % 15, n = 2 + rng() % 15;
    const std::size_t r = rng() % (std::min(m, n) + 1);
    const Matrix M = low_rank(m, n, r, rng);
    EXPECT_EQ(rank_of(M), r);
    EXPECT_EQ(rank_of(M), rank_oracle(M));
  }
  EXPECT_EQ(rank_of(Matrix::Zero(3, 4)), 0u);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { rank_of(bad); }), ErrorCode::NonFinite);
}

TEST(Primitives, PseudoInverseAndProjector) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    const Matrix M = low_rank(7, 5, 1 + t % 4, rng);
    const Matrix Mp = pseudo_inverse(M);
    const double s = M.norm();
    EXPECT_LT((M * Mp * M - M).norm(), 1e-10 * s);
    EXPECT_LT((Mp * M * Mp - Mp).norm(), 1e-10 * Mp.norm());
    EXPECT_LT((M * Mp - (M * Mp).transpose()).norm(), 1e-10);
    EXPECT_LT((Mp * M - (Mp * M).transpose()).norm(), 1e-10);
    const Matrix P = projector_onto(M);
    EXPECT_LT((P * P - P).norm(), 1e-10);
    EXPECT_LT((P * M - M).norm(), 1e-10 * s);
    EXPECT_EQ(rank_of(P), rank_oracle(M));
    EXPECT_NEAR(spectral_norm(M), singular_values(M)[0], 1e-12 * s);
  }
  const Matrix M = (Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished();
  const Matrix c = columns(M, {2, 0});
  EXPECT_EQ(c, (Matrix(2, 2) << 3, 1, 6, 4).finished());
}

TEST(HandInstance, RankRisesFromTwoToThree) {
  const Hand h;
  const auto res = verify_prop1(h.A, h.Delta, h.C);
  EXPECT_EQ(res.verdict, Verdict::Holds);
  EXPECT_EQ(res.r, 2u);
  EXPECT_EQ(res.rank_s_a, 2u);
  EXPECT_EQ(res.rank_s_b, 3u);
  EXPECT_TRUE(res.assumptions.all());
  EXPECT_EQ(res.failing_assumption, 0);
  EXPECT_TRUE(res.bound_holds);
  EXPECT_EQ(res.k, 1u);
  ASSERT_TRUE(res.sets.has_value());
  EXPECT_EQ(res.sets->I.size(), 2u);
  EXPECT_EQ(res.sets->K.size(), 1u);
  EXPECT_EQ(res.rank_block, 3u);
  // independent check of the two ranks
  EXPECT_EQ(rank_oracle(h.A * h.C.transpose()), 2u);
  EXPECT_EQ(rank_oracle((h.A + h.Delta) * h.C.transpose()), 3u);
  EXPECT_LT(res.assumptions.delta_norm, res.assumptions.sigma_r);
}

TEST(HandInstance, ZeroPerturbationIsNotApplicable) {
  const Hand h;
  const auto res = verify_prop1(h.A, Matrix::Zero(3, 3), h.C);
  EXPECT_EQ(res.verdict, Verdict::Inapplicable);
  EXPECT_EQ(res.failing_assumption, 4);
  EXPECT_EQ(res.rank_s_a, res.rank_s_b);
  EXPECT_TRUE(res.assumptions.i && res.assumptions.ii && res.assumptions.iii);
  EXPECT_FALSE(res.assumptions.iv);
  EXPECT_EQ(to_string(res.verdict), "not_applicable");
  const nlohmann::json j = res;
  EXPECT_EQ(j.at("verdict"), "not_applicable");
}

TEST(HandInstance, LargePerturbationFailsAssumptionOne) {
  const Hand h;
  Matrix big = Matrix::Zero(3, 3);
  big(2, 2) = 5.0;
  const auto res = verify_prop1(h.A, big, h.C);
  EXPECT_EQ(res.verdict, Verdict::Inapplicable);
  EXPECT_EQ(res.failing_assumption, 1);
}

TEST(Decompose, InvariantsAndErrors) {
  std::mt19937_64 rng(12);
  GeneratorConfig cfg;
  for (int t = 0; t < 20; ++t) {
    const auto g = generate_instance(cfg, rng);
    const auto dec = decompose(g.A, g.Delta, g.C);
    EXPECT_EQ(dec.instance.r, g.r);
    const auto inv = check_invariants(dec.instance, dec.blocks);
    EXPECT_LT(inv.orthogonality, 1e-12);
    EXPECT_LT(inv.span, 1e-12);
    EXPECT_LT(inv.reconstruction, 1e-12);
    EXPECT_LT(inv.projector, 1e-12);
    EXPECT_TRUE(inv.rotation_invariant);
    EXPECT_GT(inv.weyl_sigma_min, 0.0);
    EXPECT_EQ(rank_oracle(dec.blocks.S_A), g.r);
  }
  const Hand h;
  EXPECT_EQ(code_of([&] { decompose(h.A, Matrix::Zero(2, 3), h.C); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { decompose(h.A, h.Delta, Matrix::Identity(3, 2)); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { decompose(Matrix::Zero(3, 3), h.Delta, h.C); }), ErrorCode::ZeroMatrix);
  Matrix inf = h.Delta;
  inf(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { decompose(h.A, inf, h.C); }), ErrorCode::NonFinite);
}

TEST(CheckAssumptions, BadIndexSets) {
  const Hand h;
  const auto dec = decompose(h.A, h.Delta, h.C);
  const auto& inst = dec.instance;
  const auto& b = dec.blocks;
  EXPECT_EQ(code_of([&] { check_assumptions(inst, b, {0}, {2}); }), ErrorCode::BadIndexSet);
  EXPECT_EQ(code_of([&] { check_assumptions(inst, b, {0, 0}, {2}); }), ErrorCode::BadIndexSet);
  EXPECT_EQ(code_of([&] { check_assumptions(inst, b, {0, 5}, {2}); }), ErrorCode::BadIndexSet);
  EXPECT_EQ(code_of([&] { check_assumptions(inst, b, {0, 1}, {1}); }), ErrorCode::BadIndexSet);
  const auto ok = check_assumptions(inst, b, {0, 1}, {2});
  EXPECT_TRUE(ok.all());
  EXPECT_EQ(ok.rank_x, 2u);
  EXPECT_EQ(ok.rank_x_i, 2u);
}

TEST(Lemma1, AgreesWithIndependentOracle) {
  std::mt19937_64 rng(31);
  for (const auto& dims : {std::array<std::size_t, 3>{6, 6, 6}, {12, 10, 15}, {20, 20, 20}, {5, 17, 3}}) {
    GeneratorConfig cfg;
    cfg.m = dims[0];
    cfg.d = dims[1];
    cfg.n = dims[2];
    for (int t = 0; t < 10; ++t) {
      const auto g = generate_instance(cfg, rng);
      const auto dec = decompose(g.A, g.Delta, g.C);
      const auto found = find_sets(dec.instance, dec.blocks);
      ASSERT_TRUE(found.found);
      const auto lemma = verify_lemma1(dec.instance, dec.blocks, found.sets.I);
      EXPECT_EQ(lemma.verdict, Verdict::Holds);
      EXPECT_LT(lemma.neumann_norm, 1.0);
      const Matrix oracle = lemma_matrix_oracle(g.A, g.Delta, g.C, found.sets.I);
      const Matrix lib = columns(dec.blocks.X, found.sets.I) +
                         dec.blocks.P * columns(dec.blocks.Y, found.sets.I);
      EXPECT_LT((oracle - lib).norm(), 1e-10 * (1.0 + lib.norm()));
      EXPECT_EQ(rank_oracle(oracle), g.r);
    }
  }
}

TEST(Prop1, GeneratedInstancesRaiseRank) {
  std::mt19937_64 rng(77);
  GeneratorConfig cfg;
  for (int t = 0; t < 30; ++t) {
    const auto g = generate_instance(cfg, rng);
    const auto res = verify_prop1(g.A, g.Delta, g.C);
    EXPECT_EQ(res.verdict, Verdict::Holds);
    const auto ra = rank_oracle(g.A * g.C.transpose());
    const auto rb = rank_oracle((g.A + g.Delta) * g.C.transpose());
    EXPECT_EQ(res.rank_s_a, ra);
    EXPECT_EQ(res.rank_s_b, rb);
    EXPECT_GT(rb, ra);
    EXPECT_GE(rb, res.r + res.k);
    EXPECT_EQ(res.rank_block, res.r + res.k);
  }
}

TEST(Generator, Validation) {
  std::mt19937_64 rng(0);
  GeneratorConfig cfg;
  cfg.m = 2;
  EXPECT_EQ(code_of([&] { generate_instance(cfg, rng); }), ErrorCode::InvalidArgument);
  cfg = {};
  cfg.delta_ratio = 1.0;
  EXPECT_EQ(code_of([&] { generate_instance(cfg, rng); }), ErrorCode::InvalidArgument);
}

TEST(Campaign, ReproducibleAndSerializable) {
  CampaignConfig cfg;
  cfg.trials = 40;
  cfg.seed = 5;
  cfg.workers = 1;
  const auto a = run_campaign(cfg);
  cfg.workers = 4;
  const auto b = run_campaign(cfg);
  EXPECT_TRUE(a.all_pass());
  EXPECT_EQ(a.prop1_holds, 40u);
  EXPECT_EQ(a.lemma1_holds, 40u);
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
  const nlohmann::json j = a;
  EXPECT_EQ(j.at("trials"), 40);
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_GT(a.min_rank_gap, 0);
}

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace qcqc::ranklab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column indices, 0-based.
using IndexSet = std::vector<std::size_t>;

/// A (m x d original queries), Delta = B - A, C (n x d gallery) and the
/// quantities read off the SVD of A.
struct PerturbationInstance {
  Matrix A;
  Matrix Delta;
  Matrix C;
  Matrix B;
  std::size_t r = 0;
  double sigma_r = 0.0;    // smallest nonzero singular value of A
  double sigma_max = 0.0;  // largest singular value of A
  double tau_rank = 0.0;   // max(m, d) * eps * sigma_max
  Vector singular_values;
  Matrix V_S;     // d x r, spans the row space of A
  Matrix V_perp;  // d x (d - r)
};

/// Blocks of the rotated problem. S_B = X + Y.
struct BlockDecomposition {
  Matrix A_S;
  Matrix Delta_S;
  Matrix Delta_perp;
  Matrix C_S;
  Matrix C_perp;
  Matrix X;
  Matrix Y;
  Matrix P;  // orthogonal projector onto col(X)
  Matrix Z;  // (I - P) Y
  Matrix S_A;
  Matrix S_B;
  Matrix U_basis;    // orthonormal basis of col(X)
  double tau_abs = 0.0;  // absolute rank tolerance at the scale of S_B, X and Y
};

/// Number of singular values above `tol`; a negative tol selects
/// max(rows, cols) * eps * sigma_max. Throws NonFinite.
std::size_t rank_of(const Matrix& M, double tol = -1.0);

/// Largest singular value (0 for empty matrices).
double spectral_norm(const Matrix& M);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& M);

/// Orthogonal projector onto the span of the left singular vectors of M
/// with singular value > tol (negative: default rule).
Matrix projector_onto(const Matrix& M, double tol = -1.0);

/// Pseudo-inverse by SVD truncation at tol (negative: default rule).
Matrix pseudo_inverse(const Matrix& M, double tol = -1.0);

/// Columns of M selected by `idx`, in order.
Matrix columns(const Matrix& M, const IndexSet& idx);

struct Decomposition {
  PerturbationInstance instance;
  BlockDecomposition blocks;
};

/// Throws DimensionMismatch, NonFinite, ZeroMatrix (A = 0).
Decomposition decompose(const Matrix& A, const Matrix& Delta, const Matrix& C);

/// Projector onto col(Z_I).
Matrix projector_z(const BlockDecomposition& blocks, const IndexSet& I);

struct AssumptionReport {
  bool i = false;
  bool ii = false;
  bool iii = false;
  bool iv = false;
  double delta_norm = 0.0;     // ||Delta||_2
  double sigma_r = 0.0;        // sigma_r(A)
  std::size_t rank_x = 0;      // rank(X)
  std::size_t rank_x_i = 0;    // rank(X_I)
  double neumann_norm = 0.0;   // ||X_I^+ P Y_I||_2
  std::size_t k = 0;           // rank((I - P_{Z_I}) Z_K)

  bool all() const { return i && ii && iii && iv; }
  /// 1..4 for the first failing assumption, 0 when all hold.
  int first_failure() const;
};

/// Throws BadIndexSet when |I| != r, an index repeats or is out of range,
/// or I and K overlap.
AssumptionReport check_assumptions(const PerturbationInstance& inst,
                                   const BlockDecomposition& blocks, const IndexSet& I,
                                   const IndexSet& K);

struct IndexSets {
  IndexSet I;
  IndexSet K;
};

struct FindResult {
  bool found = false;
  IndexSets sets;      // best attempt even when not found
  bool exhaustive = false;
  std::string reason;  // why nothing was found
};

/// I from the first r pivots of a column-pivoted QR of X; K greedily from
/// the remaining columns of (I - P_{Z_I}) Z. When the result does not
/// satisfy all assumptions and n <= 12, every I of size r is tried with K
/// the greedy basis of its complement.
FindResult find_sets(const PerturbationInstance& inst, const BlockDecomposition& blocks);

enum class Verdict { Holds, Fails, Inapplicable };

std::string to_string(Verdict v);

struct Lemma1Result {
  Verdict verdict = Verdict::Inapplicable;
  std::size_t r = 0;
  std::size_t rank = 0;          // rank(X_I + P Y_I)
  double neumann_norm = 0.0;
  double sigma_min = 0.0;        // smallest singular value of X_I + P Y_I
  std::string reason;
};

/// Checks the hypotheses rank(X_I) = r and ||X_I^+ P Y_I||_2 < 1, then
/// whether rank(X_I + P Y_I) = r.
Lemma1Result verify_lemma1(const PerturbationInstance& inst, const BlockDecomposition& blocks,
                           const IndexSet& I);

struct Prop1Result {
  Verdict verdict = Verdict::Inapplicable;  // Inapplicable = "not applicable"
  int failing_assumption = 0;
  std::size_t r = 0;
  std::size_t k = 0;
  std::size_t rank_s_a = 0;
  std::size_t rank_s_b = 0;
  std::size_t rank_block = 0;  // rank((T S_B)_{:, I u K})
  bool bound_holds = false;    // rank(S_B) >= r + k
  std::optional<IndexSets> sets;
  AssumptionReport assumptions;
};

/// decompose -> find_sets -> check_assumptions -> ranks. Throws ZeroMatrix.
Prop1Result verify_prop1(const Matrix& A, const Matrix& Delta, const Matrix& C);

struct InvariantReport {
  double orthogonality = 0.0;     // max residual of the V_S / V_perp laws
  double span = 0.0;              // ||A V_perp||_F / ||A||_F
  double reconstruction = 0.0;    // ||S_B - X - Y||_F / (||X||_F + ||Y||_F)
  double projector = 0.0;         // max(||P^2 - P||_F, ||P - P^T||_F)
  bool rotation_invariant = false;  // rank(S_A) == rank(A_S C_S^T)
  double weyl_sigma_min = 0.0;    // sigma_min(A_S + Delta_S)
};

InvariantReport check_invariants(const PerturbationInstance& inst,
                                 const BlockDecomposition& blocks);

struct GeneratorConfig {
  std::size_t m = 12;
  std::size_t d = 10;
  std::size_t n = 15;
  double delta_ratio = 0.5;  // ||Delta||_2 / sigma_r(A)
  double gap = 1e-3;         // minimum relative margin on each hypothesis
  std::size_t max_attempts = 200;
};

struct GeneratedInstance {
  Matrix A;
  Matrix Delta;
  Matrix C;
  std::size_t r = 0;
  std::size_t attempts = 0;
};

/// Random instance satisfying assumptions (i)-(iv) with margins of at
/// least `gap`: A = U diag(sigma) W_r^T with sigma in [1, 3], Delta mixing
/// a row-space part and a part along W_perp, C Gaussian with unit rows.
/// Needs m, d >= 3 and n >= 2. Throws InvalidArgument, also when
/// max_attempts is exhausted.
GeneratedInstance generate_instance(const GeneratorConfig& config, std::mt19937_64& rng);

struct CampaignConfig {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  std::size_t workers = 1;
};

struct CampaignReport {
  std::size_t trials = 0;
  std::size_t lemma1_holds = 0;
  std::size_t lemma1_fails = 0;
  std::size_t lemma1_inapplicable = 0;
  std::size_t prop1_holds = 0;
  std::size_t prop1_fails = 0;
  std::size_t prop1_inapplicable = 0;
  std::size_t bound_holds = 0;
  std::size_t generator_failures = 0;
  std::size_t rejected_samples = 0;
  // Worst margins over all trials.
  double min_assumption_i_margin = 0.0;   // sigma_r - ||Delta||
  double min_neumann_margin = 0.0;        // 1 - ||X_I^+ P Y_I||
  double min_lemma_sigma = 0.0;           // sigma_min(X_I + P Y_I) / ||X||
  long min_rank_gap = 0;                  // rank(S_B) - rank(S_A)
  double max_reconstruction = 0.0;
  double max_projector = 0.0;
  double max_orthogonality = 0.0;
  double min_weyl_sigma = 0.0;
  std::size_t rotation_failures = 0;
  std::vector<std::string> failures;  // one line per failing trial

  bool all_pass() const {
    return generator_failures == 0 && lemma1_holds == trials && prop1_holds == trials &&
           bound_holds == trials && rotation_failures == 0;
  }
};

/// Trial t draws from mt19937_64(mix64(seed + t)).
CampaignReport run_campaign(const CampaignConfig& config);

void to_json(nlohmann::json& j, const CampaignReport& report);
void to_json(nlohmann::json& j, const AssumptionReport& report);
void to_json(nlohmann::json& j, const Prop1Result& result);
void to_json(nlohmann::json& j, const Lemma1Result& result);

}  // namespace qcqc::ranklab

#include "qcqc/ranklab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcqc/error.hpp"
#include "qcqc/parallel.hpp"
#include "qcqc/text.hpp"

namespace qcqc::ranklab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(name) + " has non-finite entries");
  }
}

double default_tol(const Matrix& M, double sigma_max) {
  return static_cast<double>(std::max(M.rows(), M.cols())) * kEps * sigma_max;
}

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& M) {
  return Eigen::JacobiSVD<Matrix>(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

std::size_t count_above(const Vector& s, double tol) {
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol) ++k;
  }
  return k;
}

// Smallest singular value counted in the rank at the given tolerance, or 0.
double smallest_retained(const Vector& s, double tol) {
  const auto k = count_above(s, tol);
  return k == 0 ? 0.0 : s[static_cast<Eigen::Index>(k - 1)];
}

double x_tol(const BlockDecomposition& blocks) {
  return default_tol(blocks.X, spectral_norm(blocks.X));
}

void validate_sets(const PerturbationInstance& inst, const BlockDecomposition& blocks,
                   const IndexSet& I, const IndexSet& K) {
  const auto n = static_cast<std::size_t>(blocks.X.cols());
  if (I.size() != inst.r) {
    throw Error(ErrorCode::BadIndexSet, "|I| = " + std::to_string(I.size()) +
                                            " but rank(A) = " + std::to_string(inst.r));
  }
  std::vector<bool> seen(n, false);
  auto mark = [&](const IndexSet& set, const char* name) {
    for (auto j : set) {
      if (j >= n) {
        throw Error(ErrorCode::BadIndexSet, std::string(name) + " index " + std::to_string(j) +
                                                " out of range for n = " + std::to_string(n));
      }
      if (seen[j]) {
        throw Error(ErrorCode::BadIndexSet,
                    "index " + std::to_string(j) + " repeated or shared between I and K");
      }
      seen[j] = true;
    }
  };
  mark(I, "I");
  mark(K, "K");
}

// Greedy Gram-Schmidt over the columns of W outside I; each step takes the
// column with the largest residual while it exceeds tol.
IndexSet greedy_k(const BlockDecomposition& blocks, const IndexSet& I) {
  const Matrix W =
      (Matrix::Identity(blocks.Z.rows(), blocks.Z.rows()) - projector_z(blocks, I)) * blocks.Z;
  const auto n = static_cast<std::size_t>(W.cols());
  std::vector<bool> used(n, false);
  for (auto j : I) used[j] = true;

  Matrix Q(W.rows(), 0);
  IndexSet K;
  while (static_cast<Eigen::Index>(K.size()) < W.rows()) {
    double best_norm = blocks.tau_abs;
    std::size_t best = n;
    Vector best_residual;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      Vector w = W.col(static_cast<Eigen::Index>(j));
      if (Q.cols() > 0) w -= Q * (Q.transpose() * w);
      const double norm = w.norm();
      if (norm > best_norm) {
        best_norm = norm;
        best = j;
        best_residual = w;
      }
    }
    if (best == n) break;
    used[best] = true;
    K.push_back(best);
    Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
    Q.col(Q.cols() - 1) = best_residual / best_norm;
  }
  std::sort(K.begin(), K.end());
  return K;
}

bool next_combination(IndexSet& c, std::size_t n) {
  const std::size_t r = c.size();
  for (std::size_t i = r; i-- > 0;) {
    if (c[i] < n - r + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

Matrix orthonormal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix G(rows, cols);
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(cols));
}

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix G(rows, cols);
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = g(rng);
  }
  return G;
}

}  // namespace

Vector singular_values(const Matrix& M) {
  if (M.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(M).singularValues();
}

double spectral_norm(const Matrix& M) {
  const auto s = singular_values(M);
  return s.size() == 0 ? 0.0 : s[0];
}

std::size_t rank_of(const Matrix& M, double tol) {
  require_finite(M, "matrix");
  if (M.size() == 0) return 0;
  const auto s = singular_values(M);
  if (tol < 0.0) tol = default_tol(M, s[0]);
  return count_above(s, tol);
}

Matrix projector_onto(const Matrix& M, double tol) {
  const auto rows = M.rows();
  if (M.size() == 0) return Matrix::Zero(rows, rows);
  const auto svd = thin_svd(M);
  const auto& s = svd.singularValues();
  if (tol < 0.0) tol = default_tol(M, s.size() ? s[0] : 0.0);
  const auto k = static_cast<Eigen::Index>(count_above(s, tol));
  const Matrix U = svd.matrixU().leftCols(k);
  return U * U.transpose();
}

Matrix pseudo_inverse(const Matrix& M, double tol) {
  if (M.size() == 0) return Matrix::Zero(M.cols(), M.rows());
  const auto svd = thin_svd(M);
  const auto& s = svd.singularValues();
  if (tol < 0.0) tol = default_tol(M, s.size() ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol) inv[i] = 1.0 / s[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix columns(const Matrix& M, const IndexSet& idx) {
  Matrix out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = M.col(static_cast<Eigen::Index>(idx[j]));
  }
  return out;
}

Decomposition decompose(const Matrix& A, const Matrix& Delta, const Matrix& C) {
  if (A.rows() != Delta.rows() || A.cols() != Delta.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Delta must have the shape of A");
  }
  if (C.cols() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "C must have as many columns as A");
  }
  if (A.size() == 0 || C.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "A and C must be non-empty");
  }
  require_finite(A, "A");
  require_finite(Delta, "Delta");
  require_finite(C, "C");

  Decomposition out;
  auto& inst = out.instance;
  inst.A = A;
  inst.Delta = Delta;
  inst.C = C;
  inst.B = A + Delta;

  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  inst.singular_values = svd.singularValues();
  inst.sigma_max = inst.singular_values[0];
  inst.tau_rank = default_tol(A, inst.sigma_max);
  inst.r = count_above(inst.singular_values, inst.tau_rank);
  if (inst.r == 0) throw Error(ErrorCode::ZeroMatrix, "A is numerically zero");
  const auto r = static_cast<Eigen::Index>(inst.r);
  inst.sigma_r = inst.singular_values[r - 1];
  inst.V_S = svd.matrixV().leftCols(r);
  inst.V_perp = svd.matrixV().rightCols(A.cols() - r);

  auto& b = out.blocks;
  b.A_S = A * inst.V_S;
  b.Delta_S = Delta * inst.V_S;
  b.Delta_perp = Delta * inst.V_perp;
  b.C_S = C * inst.V_S;
  b.C_perp = C * inst.V_perp;
  b.X = (b.A_S + b.Delta_S) * b.C_S.transpose();
  b.Y = b.Delta_perp * b.C_perp.transpose();
  b.S_A = A * C.transpose();
  b.S_B = inst.B * C.transpose();

  const auto xsvd = thin_svd(b.X);
  const auto& xs = xsvd.singularValues();
  const auto kx = static_cast<Eigen::Index>(count_above(xs, default_tol(b.X, xs[0])));
  b.U_basis = xsvd.matrixU().leftCols(kx);
  b.P = b.U_basis * b.U_basis.transpose();
  b.Z = (Matrix::Identity(b.X.rows(), b.X.rows()) - b.P) * b.Y;

  const double scale =
      std::max({spectral_norm(b.S_B), xs[0], spectral_norm(b.Y)});
  const auto dims = std::max({A.rows(), A.cols(), C.rows()});
  b.tau_abs = static_cast<double>(dims) * kEps * scale;
  return out;
}

Matrix projector_z(const BlockDecomposition& blocks, const IndexSet& I) {
  return projector_onto(columns(blocks.Z, I), blocks.tau_abs);
}

int AssumptionReport::first_failure() const {
  if (!i) return 1;
  if (!ii) return 2;
  if (!iii) return 3;
  if (!iv) return 4;
  return 0;
}

AssumptionReport check_assumptions(const PerturbationInstance& inst,
                                   const BlockDecomposition& blocks, const IndexSet& I,
                                   const IndexSet& K) {
  validate_sets(inst, blocks, I, K);
  AssumptionReport rep;
  rep.delta_norm = spectral_norm(inst.Delta);
  rep.sigma_r = inst.sigma_r;
  rep.i = rep.delta_norm < inst.sigma_r;

  const double tx = x_tol(blocks);
  const Matrix X_I = columns(blocks.X, I);
  rep.rank_x = rank_of(blocks.X, tx);
  rep.rank_x_i = rank_of(X_I, tx);
  rep.ii = rep.rank_x_i == inst.r && rep.rank_x == inst.r;

  const Matrix Y_I = columns(blocks.Y, I);
  rep.neumann_norm = spectral_norm(pseudo_inverse(X_I) * blocks.P * Y_I);
  rep.iii = rep.neumann_norm < 1.0;

  if (!K.empty()) {
    const auto m = blocks.Z.rows();
    const Matrix W_K = (Matrix::Identity(m, m) - projector_z(blocks, I)) * columns(blocks.Z, K);
    rep.k = rank_of(W_K, blocks.tau_abs);
  }
  rep.iv = rep.k >= 1;
  return rep;
}

FindResult find_sets(const PerturbationInstance& inst, const BlockDecomposition& blocks) {
  FindResult out;
  const auto n = static_cast<std::size_t>(blocks.X.cols());
  if (inst.r > n) {
    out.reason = "rank(A) exceeds the number of gallery columns";
    return out;
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(blocks.X);
  const auto& perm = qr.colsPermutation().indices();
  IndexSet I;
  for (std::size_t j = 0; j < inst.r; ++j) {
    I.push_back(static_cast<std::size_t>(perm[static_cast<Eigen::Index>(j)]));
  }
  std::sort(I.begin(), I.end());
  out.sets = {I, greedy_k(blocks, I)};
  const auto first = check_assumptions(inst, blocks, out.sets.I, out.sets.K);
  if (first.all()) {
    out.found = true;
    return out;
  }

  if (n <= 12 && first.i) {
    out.exhaustive = true;
    IndexSet c(inst.r);
    std::iota(c.begin(), c.end(), std::size_t{0});
    do {
      IndexSets cand{c, greedy_k(blocks, c)};
      if (check_assumptions(inst, blocks, cand.I, cand.K).all()) {
        out.found = true;
        out.sets = std::move(cand);
        return out;
      }
    } while (next_combination(c, n));
  }
  out.reason = "assumption (" + std::string(first.first_failure() == 1   ? "i"
                                            : first.first_failure() == 2 ? "ii"
                                            : first.first_failure() == 3 ? "iii"
                                                                         : "iv") +
               ") fails" + (out.exhaustive ? " for every I" : " for the pivoted I");
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "holds";
    case Verdict::Fails:
      return "fails";
    case Verdict::Inapplicable:
      return "not_applicable";
  }
  return "";
}

Lemma1Result verify_lemma1(const PerturbationInstance& inst, const BlockDecomposition& blocks,
                           const IndexSet& I) {
  Lemma1Result res;
  res.r = inst.r;
  if (I.size() != inst.r) {
    res.reason = "|I| != r";
    return res;
  }
  const Matrix X_I = columns(blocks.X, I);
  if (rank_of(X_I, x_tol(blocks)) != inst.r) {
    res.reason = "rank(X_I) != r";
    return res;
  }
  const Matrix PY_I = blocks.P * columns(blocks.Y, I);
  res.neumann_norm = spectral_norm(pseudo_inverse(X_I) * PY_I);
  if (!(res.neumann_norm < 1.0)) {
    res.reason = "||X_I^+ P Y_I||_2 >= 1";
    return res;
  }
  const Matrix M = X_I + PY_I;
  const auto s = singular_values(M);
  const double tol = default_tol(M, s[0]);
  res.rank = count_above(s, tol);
  res.sigma_min = s[s.size() - 1];
  res.verdict = res.rank == inst.r ? Verdict::Holds : Verdict::Fails;
  return res;
}

Prop1Result verify_prop1(const Matrix& A, const Matrix& Delta, const Matrix& C) {
  const auto dec = decompose(A, Delta, C);
  const auto& inst = dec.instance;
  const auto& b = dec.blocks;

  Prop1Result res;
  res.r = inst.r;
  res.rank_s_a = rank_of(b.S_A);
  res.rank_s_b = rank_of(b.S_B);

  const auto found = find_sets(inst, b);
  if (found.sets.I.size() != inst.r) {
    res.assumptions.delta_norm = spectral_norm(Delta);
    res.assumptions.sigma_r = inst.sigma_r;
    res.assumptions.i = res.assumptions.delta_norm < inst.sigma_r;
    res.failing_assumption = res.assumptions.first_failure();
    return res;
  }
  res.assumptions = check_assumptions(inst, b, found.sets.I, found.sets.K);
  res.k = res.assumptions.k;
  res.sets = found.sets;
  if (!res.assumptions.all()) {
    res.failing_assumption = res.assumptions.first_failure();
    return res;
  }

  // (T S_B) restricted to I u K; block upper-triangular by construction.
  const auto m = b.X.rows();
  const Matrix Id = Matrix::Identity(m, m);
  Matrix T(2 * m, m);
  T.topRows(m) = b.P;
  T.bottomRows(m) = (Id - projector_z(b, found.sets.I)) * (Id - b.P);
  IndexSet IK = found.sets.I;
  IK.insert(IK.end(), found.sets.K.begin(), found.sets.K.end());
  res.rank_block = rank_of(columns(T * b.S_B, IK), b.tau_abs);

  res.bound_holds = res.rank_s_b >= res.r + res.k;
  const bool increase = res.rank_s_b > res.rank_s_a && res.rank_s_a == res.r;
  res.verdict = increase && res.bound_holds ? Verdict::Holds : Verdict::Fails;
  return res;
}

InvariantReport check_invariants(const PerturbationInstance& inst,
                                 const BlockDecomposition& blocks) {
  InvariantReport rep;
  const auto r = inst.V_S.cols();
  const auto q = inst.V_perp.cols();
  rep.orthogonality = std::max(
      {(inst.V_S.transpose() * inst.V_S - Matrix::Identity(r, r)).norm(),
       q ? (inst.V_perp.transpose() * inst.V_perp - Matrix::Identity(q, q)).norm() : 0.0,
       q ? (inst.V_S.transpose() * inst.V_perp).norm() : 0.0});
  rep.span = q ? (inst.A * inst.V_perp).norm() / inst.A.norm() : 0.0;
  const double xy = blocks.X.norm() + blocks.Y.norm();
  rep.reconstruction = xy > 0.0 ? (blocks.S_B - blocks.X - blocks.Y).norm() / xy : 0.0;
  rep.projector = std::max((blocks.P * blocks.P - blocks.P).norm(),
                           (blocks.P - blocks.P.transpose()).norm());
  rep.rotation_invariant =
      rank_of(blocks.S_A) == rank_of(blocks.A_S * blocks.C_S.transpose());
  const auto s = singular_values(blocks.A_S + blocks.Delta_S);
  rep.weyl_sigma_min = s.size() ? s[s.size() - 1] : 0.0;
  return rep;
}

GeneratedInstance generate_instance(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  const std::size_t m = cfg.m;
  const std::size_t d = cfg.d;
  const std::size_t n = cfg.n;
  if (m < 3 || d < 3 || n < 2) {
    throw Error(ErrorCode::InvalidArgument, "generator needs m, d >= 3 and n >= 2");
  }
  if (!(cfg.delta_ratio > 0.0 && cfg.delta_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "delta_ratio must lie in (0, 1)");
  }
  // A new direction survives only if Z has more rank than Z_I can absorb:
  // 2r < m, 2r < d and r < n.
  const std::size_t r_max = std::min({(m - 1) / 2, (d - 1) / 2, n - 1});
  if (r_max == 0) throw Error(ErrorCode::InvalidArgument, "dimensions admit no rank");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GeneratedInstance out;
  for (std::size_t attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    const std::size_t r = 1 + static_cast<std::size_t>(rng() % r_max);
    const Matrix U = orthonormal(m, r, rng);
    const Matrix W = orthonormal(d, d, rng);
    const auto ri = static_cast<Eigen::Index>(r);
    const Matrix W_r = W.leftCols(ri);
    const Matrix W_perp = W.rightCols(static_cast<Eigen::Index>(d) - ri);
    Vector sigma(ri);
    for (Eigen::Index i = 0; i < ri; ++i) sigma[i] = 1.0 + 2.0 * unit(rng);
    const Matrix A = U * sigma.asDiagonal() * W_r.transpose();
    const double sigma_r = sigma.minCoeff();

    const double in_weight = unit(rng);
    Matrix Delta = in_weight * gaussian(m, r, rng) * W_r.transpose() +
                   gaussian(m, d - r, rng) * W_perp.transpose();
    Delta *= cfg.delta_ratio * sigma_r / spectral_norm(Delta);

    Matrix C = gaussian(n, d, rng);
    C.rowwise().normalize();

    const auto dec = decompose(A, Delta, C);
    if (dec.instance.r != r) continue;
    const auto found = find_sets(dec.instance, dec.blocks);
    if (!found.found) continue;
    const auto& b = dec.blocks;
    const auto rep = check_assumptions(dec.instance, b, found.sets.I, found.sets.K);
    if (!rep.all()) continue;

    // Margins on the hypotheses only; the conclusions are left to the checks.
    const double xnorm = spectral_norm(b.X);
    const auto xi = singular_values(columns(b.X, found.sets.I));
    if (xi[xi.size() - 1] < cfg.gap * xnorm) continue;
    if (1.0 - rep.neumann_norm < cfg.gap) continue;
    const auto mz = b.Z.rows();
    const Matrix W_K = (Matrix::Identity(mz, mz) - projector_z(b, found.sets.I)) *
                       columns(b.Z, found.sets.K);
    const double sb = spectral_norm(b.S_B);
    if (smallest_retained(singular_values(W_K), b.tau_abs) < cfg.gap * sb) continue;

    out.A = A;
    out.Delta = Delta;
    out.C = C;
    out.r = r;
    out.attempts = attempt;
    return out;
  }
  throw Error(ErrorCode::InvalidArgument, "instance generator exhausted " +
                                        std::to_string(cfg.max_attempts) + " attempts");
}

CampaignReport run_campaign(const CampaignConfig& config) {
  struct Trial {
    bool generated = false;
    std::size_t attempts = 0;
    Lemma1Result lemma;
    Prop1Result prop;
    InvariantReport inv;
    double sigma_margin = 0.0;
    double x_norm = 0.0;
    std::string error;
  };
  std::vector<Trial> trials(config.trials);

  parallel_for(
      config.trials,
      [&](std::size_t t) {
        Trial& tr = trials[t];
        std::mt19937_64 rng(mix64(config.seed + t));
        try {
          const auto g = generate_instance(config.generator, rng);
          tr.generated = true;
          tr.attempts = g.attempts;
          const auto dec = decompose(g.A, g.Delta, g.C);
          tr.prop = verify_prop1(g.A, g.Delta, g.C);
          if (tr.prop.sets) tr.lemma = verify_lemma1(dec.instance, dec.blocks, tr.prop.sets->I);
          tr.inv = check_invariants(dec.instance, dec.blocks);
          tr.sigma_margin = dec.instance.sigma_r - tr.prop.assumptions.delta_norm;
          tr.x_norm = spectral_norm(dec.blocks.X);
        } catch (const std::exception& e) {
          tr.error = e.what();
        }
      },
      config.workers);

  CampaignReport rep;
  rep.trials = config.trials;
  bool first = true;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& tr = trials[t];
    const std::string label = "trial " + std::to_string(t) + ": ";
    if (!tr.generated) {
      ++rep.generator_failures;
      rep.failures.push_back(label + tr.error);
      continue;
    }
    rep.rejected_samples += tr.attempts - 1;
    switch (tr.lemma.verdict) {
      case Verdict::Holds: ++rep.lemma1_holds; break;
      case Verdict::Fails: ++rep.lemma1_fails; break;
      case Verdict::Inapplicable: ++rep.lemma1_inapplicable; break;
    }
    switch (tr.prop.verdict) {
      case Verdict::Holds: ++rep.prop1_holds; break;
      case Verdict::Fails: ++rep.prop1_fails; break;
      case Verdict::Inapplicable: ++rep.prop1_inapplicable; break;
    }
    if (tr.prop.bound_holds) ++rep.bound_holds;
    if (!tr.inv.rotation_invariant) ++rep.rotation_failures;
    if (tr.lemma.verdict != Verdict::Holds || tr.prop.verdict != Verdict::Holds ||
        !tr.prop.bound_holds) {
      rep.failures.push_back(label + "lemma " + to_string(tr.lemma.verdict) + ", proposition " +
                             to_string(tr.prop.verdict) + ", rank(S_A)=" +
                             std::to_string(tr.prop.rank_s_a) +
                             ", rank(S_B)=" + std::to_string(tr.prop.rank_s_b));
    }

    const long gap = static_cast<long>(tr.prop.rank_s_b) - static_cast<long>(tr.prop.rank_s_a);
    const double lemma_sigma = tr.x_norm > 0.0 ? tr.lemma.sigma_min / tr.x_norm : 0.0;
    const double neumann = 1.0 - tr.prop.assumptions.neumann_norm;
    if (first) {
      rep.min_assumption_i_margin = tr.sigma_margin;
      rep.min_neumann_margin = neumann;
      rep.min_lemma_sigma = lemma_sigma;
      rep.min_rank_gap = gap;
      rep.min_weyl_sigma = tr.inv.weyl_sigma_min;
      first = false;
    }
    rep.min_assumption_i_margin = std::min(rep.min_assumption_i_margin, tr.sigma_margin);
    rep.min_neumann_margin = std::min(rep.min_neumann_margin, neumann);
    rep.min_lemma_sigma = std::min(rep.min_lemma_sigma, lemma_sigma);
    rep.min_rank_gap = std::min(rep.min_rank_gap, gap);
    rep.min_weyl_sigma = std::min(rep.min_weyl_sigma, tr.inv.weyl_sigma_min);
    rep.max_reconstruction = std::max(rep.max_reconstruction, tr.inv.reconstruction);
    rep.max_projector = std::max(rep.max_projector, tr.inv.projector);
    rep.max_orthogonality = std::max(rep.max_orthogonality, tr.inv.orthogonality);
  }
  return rep;
}

void to_json(nlohmann::json& j, const CampaignReport& r) {
  j = {{"trials", r.trials},
       {"pass", r.all_pass()},
       {"lemma1", {{"holds", r.lemma1_holds},
                   {"fails", r.lemma1_fails},
                   {"inapplicable", r.lemma1_inapplicable}}},
       {"prop1", {{"holds", r.prop1_holds},
                  {"fails", r.prop1_fails},
                  {"not_applicable", r.prop1_inapplicable},
                  {"bound_r_plus_k_holds", r.bound_holds}}},
       {"generator", {{"failures", r.generator_failures}, {"rejected_samples", r.rejected_samples}}},
       {"worst", {{"assumption_i_margin", r.min_assumption_i_margin},
                  {"neumann_margin", r.min_neumann_margin},
                  {"lemma_sigma_min_rel", r.min_lemma_sigma},
                  {"rank_gap", r.min_rank_gap},
                  {"weyl_sigma_min", r.min_weyl_sigma},
                  {"reconstruction", r.max_reconstruction},
                  {"projector", r.max_projector},
                  {"orthogonality", r.max_orthogonality}}},
       {"rotation_failures", r.rotation_failures},
       {"failures", r.failures}};
}

void to_json(nlohmann::json& j, const AssumptionReport& r) {
  j = {{"i", r.i},
       {"ii", r.ii},
       {"iii", r.iii},
       {"iv", r.iv},
       {"delta_norm", r.delta_norm},
       {"sigma_r", r.sigma_r},
       {"rank_x", r.rank_x},
       {"rank_x_i", r.rank_x_i},
       {"neumann_norm", r.neumann_norm},
       {"k", r.k}};
}

void to_json(nlohmann::json& j, const Prop1Result& r) {
  j = {{"verdict", to_string(r.verdict)},
       {"failing_assumption", r.failing_assumption},
       {"r", r.r},
       {"k", r.k},
       {"rank_s_a", r.rank_s_a},
       {"rank_s_b", r.rank_s_b},
       {"rank_block", r.rank_block},
       {"bound_holds", r.bound_holds},
       {"assumptions", r.assumptions}};
  if (r.sets) {
    j["I"] = r.sets->I;
    j["K"] = r.sets->K;
  } else {
    j["I"] = nullptr;
    j["K"] = nullptr;
  }
}

void to_json(nlohmann::json& j, const Lemma1Result& r) {
  j = {{"verdict", to_string(r.verdict)},
       {"r", r.r},
       {"rank", r.rank},
       {"neumann_norm", r.neumann_norm},
       {"sigma_min", r.sigma_min},
       {"reason", r.reason}};
}

}  // namespace qcqc::ranklab

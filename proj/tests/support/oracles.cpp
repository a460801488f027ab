#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qcqc::testing {

double percentile_oracle(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const long double pos = static_cast<long double>(p) / 100.0L * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi) return values[lo];
  const long double w = pos - lo;
  return static_cast<double>((1.0L - w) * values[lo] + w * values[hi]);
}

std::vector<std::size_t> topk_oracle(const std::vector<double>& row, std::size_t eta) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  idx.resize(std::min(eta, idx.size()));
  return idx;
}

std::size_t rank_oracle(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (tol < 0) {
    tol = static_cast<double>(std::max(M.rows(), M.cols())) *
          std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  }
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > tol ? 1 : 0;
  return r;
}

Eigen::MatrixXd column_projector_oracle(const Eigen::MatrixXd& M) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto r = static_cast<Eigen::Index>(rank_oracle(M));
  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  return U * U.transpose();
}

Eigen::MatrixXd lemma_matrix_oracle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Delta,
                                    const Eigen::MatrixXd& C, const std::vector<std::size_t>& I) {
  const Eigen::MatrixXd row_proj = column_projector_oracle(A.transpose());
  const Eigen::MatrixXd B = A + Delta;
  const Eigen::MatrixXd X = B * row_proj * C.transpose();
  const Eigen::MatrixXd SB = B * C.transpose();
  Eigen::MatrixXd SB_I(SB.rows(), static_cast<Eigen::Index>(I.size()));
  for (std::size_t j = 0; j < I.size(); ++j) {
    SB_I.col(static_cast<Eigen::Index>(j)) = SB.col(static_cast<Eigen::Index>(I[j]));
  }
  return column_projector_oracle(X) * SB_I;
}

}  // namespace qcqc::testing

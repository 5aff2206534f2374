#pragma once

#include <cmath>
#include <iosfwd>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ovk/errors.hpp"
#include "ovk/geometry.hpp"
#include "ovk/kernel.hpp"

namespace ovk {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// S (x) I_d, laid out so that block (i, j) of the result is S(i, j) I_d.
template <typename Derived>
MatrixX<typename Derived::Scalar> kron_identity(const Eigen::MatrixBase<Derived>& S, int d) {
  using Scalar = typename Derived::Scalar;
  if (d == 1) return S;
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(S.rows() * d, S.cols() * d);
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
      for (int a = 0; a < d; ++a) out(i * d + a, j * d + a) = S(i, j);
    }
  }
  return out;
}

/// Matrix of scalar kernel factors between two coordinate sets. Rows of
/// `xa`/`xb` are spatial coordinates, `ta`/`tb` the matching times.
template <typename Scalar, typename DXA, typename DTA, typename DXB, typename DTB>
MatrixX<Scalar> kernel_factors(const TimeRegularizedKernel<Scalar>& K, const Eigen::MatrixBase<DXA>& xa,
                               const Eigen::MatrixBase<DTA>& ta, const Eigen::MatrixBase<DXB>& xb,
                               const Eigen::MatrixBase<DTB>& tb) {
  if (xa.cols() != xb.cols()) throw InputError("point sets differ in spatial dimension");
  MatrixX<Scalar> S(xa.rows(), xb.rows());
  for (Eigen::Index j = 0; j < xb.rows(); ++j) {
    for (Eigen::Index i = 0; i < xa.rows(); ++i) S(i, j) = K.factor(xa.row(i), ta(i), xb.row(j), tb(j));
  }
  return S;
}

/// Same as kernel_factors for d/dt K in the first time argument.
template <typename Scalar, typename DXA, typename DTA, typename DXB, typename DTB>
MatrixX<Scalar> kernel_dt_factors(const TimeRegularizedKernel<Scalar>& K, const Eigen::MatrixBase<DXA>& xa,
                                  const Eigen::MatrixBase<DTA>& ta, const Eigen::MatrixBase<DXB>& xb,
                                  const Eigen::MatrixBase<DTB>& tb) {
  if (xa.cols() != xb.cols()) throw InputError("point sets differ in spatial dimension");
  MatrixX<Scalar> S(xa.rows(), xb.rows());
  for (Eigen::Index j = 0; j < xb.rows(); ++j) {
    for (Eigen::Index i = 0; i < xa.rows(); ++i) S(i, j) = K.dt_factor(xa.row(i), ta(i), xb.row(j), tb(j));
  }
  return S;
}

struct RidgeInfo {
  double jitter = 0;             ///< diagonal shift that made the factorization succeed
  double relative_residual = 0;  ///< |(G + lambda I) c - rhs| / |rhs|
  int refinement_steps = 0;
};

/// Solves (G + lambda I) c = rhs for symmetric positive semidefinite G.
///
/// Cholesky with a jitter ladder {0, 1e-12, 1e-10, 1e-8} * trace(G)/n, then
/// iterative refinement against the unshifted system.
template <typename DerivedG, typename DerivedR>
VectorX<typename DerivedG::Scalar> solve_ridge(const Eigen::MatrixBase<DerivedG>& G,
                                               const Eigen::MatrixBase<DerivedR>& rhs,
                                               typename DerivedG::Scalar lambda, RidgeInfo* info = nullptr) {
  using Scalar = typename DerivedG::Scalar;
  const Eigen::Index n = G.rows();
  if (G.cols() != n) throw InputError("solve_ridge: matrix is not square");
  if (rhs.size() != n) throw InputError("solve_ridge: right-hand side length does not match matrix");
  if (!(lambda >= Scalar(0)) || !std::isfinite(lambda)) throw InputError("solve_ridge: lambda must be nonnegative");
  if (n == 0) return VectorX<Scalar>();

  MatrixX<Scalar> A = G;
  A.diagonal().array() += lambda;
  const Scalar scale = std::max(G.trace() / Scalar(n), Scalar(1e-300));

  Eigen::LLT<MatrixX<Scalar>> llt;
  Scalar jitter = 0;
  bool ok = false;
  for (Scalar rel : {Scalar(0), Scalar(1e-12), Scalar(1e-10), Scalar(1e-8)}) {
    jitter = rel * scale;
    MatrixX<Scalar> shifted = A;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(A, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    throw NumericalError("solve_ridge: Cholesky failed at maximum jitter; eigenvalue range [" +
                         std::to_string(double(ev.minCoeff())) + ", " + std::to_string(double(ev.maxCoeff())) +
                         "]");
  }

  VectorX<Scalar> c = llt.solve(rhs);
  const Scalar rhs_norm = rhs.norm();
  VectorX<Scalar> r = rhs - A * c;
  Scalar res = rhs_norm > 0 ? r.norm() / rhs_norm : r.norm();
  int steps = 0;
  for (; steps < 5 && res > Scalar(1e-14); ++steps) {
    VectorX<Scalar> c_next = c + llt.solve(r);
    VectorX<Scalar> r_next = rhs - A * c_next;
    const Scalar res_next = rhs_norm > 0 ? r_next.norm() / rhs_norm : r_next.norm();
    if (!(res_next < res)) break;
    c = std::move(c_next);
    r = std::move(r_next);
    res = res_next;
  }
  if (!c.allFinite()) throw NumericalError("solve_ridge: solution is not finite");
  if (info) *info = RidgeInfo{double(jitter), double(res), steps};
  return c;
}

/// Thin SVD keeping singular values >= rtol * largest.
template <typename Scalar>
struct TruncatedSvd {
  MatrixX<Scalar> U;
  VectorX<Scalar> s;
  MatrixX<Scalar> V;

  Eigen::Index rank() const { return s.size(); }
  MatrixX<Scalar> pseudo_inverse() const { return V * s.cwiseInverse().asDiagonal() * U.transpose(); }
};

template <typename Derived>
TruncatedSvd<typename Derived::Scalar> truncated_svd(const Eigen::MatrixBase<Derived>& M,
                                                     typename Derived::Scalar rtol) {
  using Scalar = typename Derived::Scalar;
  if (!(rtol > Scalar(0))) throw InputError("pinv: rtol must be positive");
  if (!M.allFinite()) throw InputError("pinv: matrix has non-finite entries");
  TruncatedSvd<Scalar> out;
  if (M.size() == 0) {
    out.U.resize(M.rows(), 0);
    out.V.resize(M.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<MatrixX<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  if (sv.size() > 0 && sv(0) > Scalar(0)) {
    const Scalar cut = rtol * sv(0);
    while (r < sv.size() && sv(r) >= cut && sv(r) > Scalar(0)) ++r;
  }
  out.U = svd.matrixU().leftCols(r);
  out.s = sv.head(r);
  out.V = svd.matrixV().leftCols(r);
  return out;
}

/// Moore-Penrose pseudoinverse by truncated SVD.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& M,
                                       typename Derived::Scalar rtol = typename Derived::Scalar(1e-10)) {
  if (M.size() == 0) return MatrixX<typename Derived::Scalar>::Zero(M.cols(), M.rows());
  return truncated_svd(M, rtol).pseudo_inverse();
}

/// Dense (d N) x (d N) Gram matrix of an operator-valued kernel over N centers.
struct BlockGramMatrix {
  Eigen::MatrixXd entries;
  PointSet centers;
  int block_dim = 1;

  Eigen::Index size() const { return entries.rows(); }
};

/// Gram matrix over `centers`; rejects repeated centers.
BlockGramMatrix assemble_gram(const OvKernel& K, const PointSet& centers);

/// (d |rows|) x (d |cols|) matrix whose block (i, j) is K(rows_i, cols_j).
Eigen::MatrixXd assemble_cross_gram(const OvKernel& K, const PointSet& rows, const PointSet& cols);

/// Same layout for d/dt K, derivative in the row point's time.
Eigen::MatrixXd assemble_cross_gram_dt(const OvKernel& K, const PointSet& rows, const PointSet& cols);

inline Eigen::VectorXd solve_ridge(const BlockGramMatrix& G, const Eigen::Ref<const Eigen::VectorXd>& rhs,
                                   double lambda, RidgeInfo* info = nullptr) {
  return solve_ridge(G.entries, rhs, lambda, info);
}

/// Row-major CSV with a "# rows,cols" header line.
void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& M);
void write_matrix_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& M);

}  // namespace ovk

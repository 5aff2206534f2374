#include "ovk/gram.hpp"

#include <fstream>
#include <ostream>

#include "ovk/csv.hpp"

namespace ovk {

namespace {

Eigen::VectorXd times_of(const PointSet& ps) {
  Eigen::VectorXd t(ps.size());
  for (Eigen::Index i = 0; i < ps.size(); ++i) t(i) = ps.t(i);
  return t;
}

}  // namespace

BlockGramMatrix assemble_gram(const OvKernel& K, const PointSet& centers) {
  if (centers.empty()) throw InputError("assemble_gram: no centers");
  if (!(centers.min_separation() > 0.0)) throw InputError("assemble_gram: duplicate centers");
  const Eigen::VectorXd t = times_of(centers);
  const auto x = centers.spatial();
  const Eigen::Index n = centers.size();
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      S(i, j) = K.factor(x.row(i), t(i), x.row(j), t(j));
      S(j, i) = S(i, j);
    }
  }
  return {kron_identity(S, K.output_dim()), centers, K.output_dim()};
}

Eigen::MatrixXd assemble_cross_gram(const OvKernel& K, const PointSet& rows, const PointSet& cols) {
  if (rows.spatial_dim() != cols.spatial_dim()) throw InputError("assemble_cross_gram: dimension mismatch");
  return kron_identity(kernel_factors(K, rows.spatial(), times_of(rows), cols.spatial(), times_of(cols)),
                       K.output_dim());
}

Eigen::MatrixXd assemble_cross_gram_dt(const OvKernel& K, const PointSet& rows, const PointSet& cols) {
  if (rows.spatial_dim() != cols.spatial_dim()) throw InputError("assemble_cross_gram_dt: dimension mismatch");
  return kron_identity(kernel_dt_factors(K, rows.spatial(), times_of(rows), cols.spatial(), times_of(cols)),
                       K.output_dim());
}

void write_matrix_csv(std::ostream& os, const Eigen::Ref<const Eigen::MatrixXd>& M) {
  os << "# " << M.rows() << ',' << M.cols() << '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      os << csv::format(M(i, j));
    }
    os << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& M) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_matrix_csv(out, M);
}

}  // namespace ovk

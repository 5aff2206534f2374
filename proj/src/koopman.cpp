#include "ovk/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ovk/csv.hpp"
#include "ovk/errors.hpp"

namespace ovk {

namespace {

bool same_kernel(const OvKernel& a, const OvKernel& b) {
  return a.spatial().family() == b.spatial().family() && a.spatial().bandwidth() == b.spatial().bandwidth() &&
         a.temporal().family() == b.temporal().family() && a.temporal().bandwidth() == b.temporal().bandwidth() &&
         a.alpha() == b.alpha() && a.output_dim() == b.output_dim();
}

}  // namespace

EmpiricalKoopman build_koopman(const OvKernel& K, const TrajectoryDataset& data, double pinv_rtol) {
  if (data.x_now.empty()) throw InputError("build_koopman: empty dataset");
  if (data.x_now.size() != data.x_next.size()) throw InputError("build_koopman: unpaired snapshots");
  EmpiricalKoopman out{K, data.x_now, assemble_gram(K, data.x_now),
                       assemble_cross_gram(K, data.x_next, data.x_now), {}, pinv_rtol, {}};
  out.gram_svd = truncated_svd(out.gram.entries, pinv_rtol);
  out.op = out.gram_svd.pseudo_inverse() * out.cross_gram;
  return out;
}

SpectralDecomposition decompose(const EmpiricalKoopman& op, int max_modes) {
  if (max_modes < 1) throw InputError("decompose: max_modes must be positive");
  if (!op.op.allFinite()) throw NumericalError("decompose: operator has non-finite entries");
  const auto& svd = op.gram_svd;
  const Eigen::Index r = svd.rank();
  if (r == 0) return {};

  // Nonzero eigenpairs of K_N live in range(V): K_N V y = V S^-1 U^T G' V y.
  // The symmetric scaling S^-1/2 (U^T G' V) S^-1/2 is similar and better balanced.
  const Eigen::VectorXd isqrt = svd.s.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd reduced =
      isqrt.asDiagonal() * (svd.U.transpose() * op.cross_gram * svd.V) * isqrt.asDiagonal();
  Eigen::EigenSolver<Eigen::MatrixXd> es(reduced, true);
  if (es.info() != Eigen::Success) {
    throw NumericalError("decompose: eigensolver failed on reduced operator of size " + std::to_string(r) +
                         ", smallest retained singular value " + std::to_string(svd.s(r - 1)));
  }
  const Eigen::MatrixXcd W = svd.V.cast<std::complex<double>>() *
                             (isqrt.cast<std::complex<double>>().asDiagonal() * es.eigenvectors());
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd G = op.gram.entries.cast<std::complex<double>>();
  const Eigen::MatrixXcd KN = op.op.cast<std::complex<double>>();
  const double n_states = double(op.centers.size());

  struct Mode {
    std::complex<double> value;
    Eigen::VectorXcd w;
    double residual;
    Eigen::Index index;
  };
  std::vector<Mode> modes;
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::VectorXcd w = W.col(k);
    Eigen::Index imax = 0;
    w.cwiseAbs().maxCoeff(&imax);
    if (std::abs(w(imax)) == 0.0) continue;
    w *= std::conj(w(imax)) / std::abs(w(imax));
    w(imax) = std::abs(w(imax));
    const double rms = std::sqrt((G * w).squaredNorm() / n_states);
    if (!(rms > 0.0)) continue;
    w /= rms;
    const double residual = (KN * w - lam(k) * w).norm() / w.norm();
    if (!(residual <= 1e-6)) continue;
    modes.push_back({lam(k), std::move(w), residual, k});
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    const double aa = std::arg(a.value), ab = std::arg(b.value);
    if (aa != ab) return aa < ab;
    return a.index < b.index;
  });
  const Eigen::Index keep = std::min<Eigen::Index>(max_modes, static_cast<Eigen::Index>(modes.size()));
  SpectralDecomposition dec;
  dec.eigenvalues.resize(keep);
  dec.coefficients.resize(op.size(), keep);
  dec.residuals.resize(keep);
  for (Eigen::Index k = 0; k < keep; ++k) {
    dec.eigenvalues(k) = modes[k].value;
    dec.coefficients.col(k) = modes[k].w;
    dec.residuals(k) = modes[k].residual;
  }
  return dec;
}

Eigen::MatrixXcd eigenfunction_values(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                      const PointSet& states, Eigen::Index rank) {
  if (rank <= 0 || rank > dec.size()) rank = dec.size();
  const Eigen::MatrixXd C = assemble_cross_gram(op.kernel, states, op.centers);
  return C.cast<std::complex<double>>() * dec.coefficients.leftCols(rank);
}

Eigen::MatrixXd sample_observable(const Observable& g, const PointSet& states, int block_dim) {
  Eigen::MatrixXd V;
  for (Eigen::Index i = 0; i < states.size(); ++i) {
    const Eigen::VectorXd v = g(states.x(i).transpose());
    if (i == 0) {
      if (v.size() % block_dim != 0) throw InputError("observable dimension is not a multiple of the kernel output_dim");
      V.resize(states.size() * block_dim, v.size() / block_dim);
    } else if (v.size() != V.cols() * block_dim) {
      throw InputError("observable returned vectors of varying length");
    }
    if (!v.allFinite()) throw InputError("observable is not finite at a sample state");
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      for (int a = 0; a < block_dim; ++a) V(i * block_dim + a, j) = v(j * block_dim + a);
    }
  }
  return V;
}

Eigen::MatrixXcd project_observable(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                    const Observable& g, Eigen::Index rank) {
  if (dec.size() == 0) throw NumericalError("project_observable: decomposition has no modes");
  if (rank <= 0 || rank > dec.size()) rank = dec.size();
  const Eigen::MatrixXcd Phi = (op.gram.entries.cast<std::complex<double>>() * dec.coefficients.leftCols(rank));
  const Eigen::MatrixXcd V = sample_observable(g, op.centers, op.block_dim()).cast<std::complex<double>>();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod;
  cod.setThreshold(1e-12);
  cod.compute(Phi);
  if (cod.rank() < rank) {
    throw NumericalError("project_observable: eigenfunction values have rank " + std::to_string(cod.rank()) +
                         " < " + std::to_string(rank));
  }
  return cod.solve(V);
}

ForecastModel make_forecast_model(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                  const Observable& g, Eigen::Index rank, double dt) {
  if (rank < 1 || rank > dec.size()) {
    throw InputError("forecast rank " + std::to_string(rank) + " outside 1.." + std::to_string(dec.size()));
  }
  ForecastModel fm{op.kernel, op.centers, dec.eigenvalues.head(rank), dec.coefficients.leftCols(rank),
                   project_observable(dec, op, g, rank), rank, 0, dt};
  fm.observable_dim = static_cast<int>(fm.projection.cols()) * op.block_dim();
  return fm;
}

namespace {

// Forecast at states whose eigenfunction values E ((d M) x r) are known.
Eigen::MatrixXd forecast_from_values(const ForecastModel& fm, const Eigen::MatrixXcd& E, Eigen::Index n_states,
                                     int steps) {
  const int d = fm.kernel.output_dim();
  Eigen::VectorXcd powers(fm.rank);
  for (Eigen::Index k = 0; k < fm.rank; ++k) powers(k) = std::pow(fm.eigenvalues(k), steps);
  const Eigen::MatrixXcd evolved = E * (powers.asDiagonal() * fm.projection);  // (d M) x q
  Eigen::MatrixXd out(n_states, fm.observable_dim);
  for (Eigen::Index i = 0; i < n_states; ++i) {
    for (Eigen::Index j = 0; j < evolved.cols(); ++j) {
      for (int a = 0; a < d; ++a) out(i, j * d + a) = evolved(i * d + a, j).real();
    }
  }
  return out;
}

Eigen::MatrixXcd values_at(const ForecastModel& fm, const PointSet& states) {
  return assemble_cross_gram(fm.kernel, states, fm.centers).cast<std::complex<double>>() * fm.coefficients;
}

}  // namespace

Eigen::MatrixXd forecast_batch(const ForecastModel& fm, const PointSet& states, int steps) {
  if (steps < 0) throw InputError("forecast: steps must be nonnegative");
  return forecast_from_values(fm, values_at(fm, states), states.size(), steps);
}

Eigen::VectorXd forecast(const ForecastModel& fm, const Eigen::VectorXd& x, int steps) {
  if (x.size() != fm.centers.spatial_dim()) throw InputError("forecast: state dimension mismatch");
  Eigen::MatrixXd c = x.transpose();
  const PointSet single(std::move(c), Box(x, x));
  return forecast_batch(fm, single, steps).row(0).transpose();
}

std::vector<double> forecast_error_curve(const ForecastModel& fm, const EvolvedObservable& truth,
                                         const PointSet& eval_states, int horizon) {
  if (horizon < 0) throw InputError("forecast_error_curve: horizon must be nonnegative");
  if (eval_states.empty()) throw InputError("forecast_error_curve: no evaluation states");
  const double w = eval_states.domain().volume() / double(eval_states.size());
  const Eigen::MatrixXcd E = values_at(fm, eval_states);
  std::vector<double> curve;
  for (int s = 0; s <= horizon; ++s) {
    const Eigen::MatrixXd f = forecast_from_values(fm, E, eval_states.size(), s);
    double sum = 0;
    for (Eigen::Index i = 0; i < eval_states.size(); ++i) {
      sum += (truth(eval_states.x(i).transpose(), s) - f.row(i).transpose()).squaredNorm();
    }
    curve.push_back(std::sqrt(w * sum));
  }
  return curve;
}

Eigen::MatrixXd apply_to_observable(const EmpiricalKoopman& op, const Observable& g) {
  const Eigen::MatrixXd V = sample_observable(g, op.centers, op.block_dim());
  const auto& svd = op.gram_svd;
  const Eigen::MatrixXd a = svd.V * (svd.s.cwiseInverse().asDiagonal() * (svd.U.transpose() * V));
  return op.op * a;
}

double operator_gap(const EmpiricalKoopman& a, const EmpiricalKoopman& b, const std::vector<Observable>& probes,
                    const PointSet& probe_grid) {
  if (!same_kernel(a.kernel, b.kernel)) throw InputError("operator_gap: operators use different kernels");
  const Eigen::MatrixXd Ca = assemble_cross_gram(a.kernel, probe_grid, a.centers);
  const Eigen::MatrixXd Cb = assemble_cross_gram(b.kernel, probe_grid, b.centers);
  double gap = 0;
  for (const auto& g : probes) {
    const Eigen::MatrixXd ga = Ca * apply_to_observable(a, g);
    const Eigen::MatrixXd gb = Cb * apply_to_observable(b, g);
    const double scale = sample_observable(g, probe_grid, a.block_dim()).norm();
    const double diff = (ga - gb).norm();
    gap = std::max(gap, scale > 0 ? diff / scale : diff);
  }
  return gap;
}

void write_eigenvalues_csv(const std::string& path, const SpectralDecomposition& dec) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  csv::write_header(out, {"k", "re", "im", "abs", "residual"});
  for (Eigen::Index k = 0; k < dec.size(); ++k) {
    const auto l = dec.eigenvalues(k);
    csv::write_row(out, {double(k + 1), l.real(), l.imag(), std::abs(l), dec.residuals(k)});
  }
}

}  // namespace ovk

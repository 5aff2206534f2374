#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ovk/dynamics.hpp"
#include "ovk/geometry.hpp"
#include "ovk/gram.hpp"
#include "ovk/kernel.hpp"

namespace ovk {

/// Kernel Koopman matrix K_N = pinv(G) G' with G_ij = K(x_i, x_j) and
/// G'_ij = K(Phi(x_i), x_j).
///
/// A coefficient vector w stands for the function sum_i K(., x_i) w_i; K_N
/// maps the coefficients of g to those of (an estimate of) g o Phi.
struct EmpiricalKoopman {
  OvKernel kernel;
  PointSet centers;
  BlockGramMatrix gram;
  Eigen::MatrixXd cross_gram;
  Eigen::MatrixXd op;
  double pinv_rtol = 1e-10;
  TruncatedSvd<double> gram_svd;  // retained part of G, also defines pinv(G)

  Eigen::Index size() const { return op.rows(); }
  int block_dim() const { return gram.block_dim; }
};

EmpiricalKoopman build_koopman(const OvKernel& K, const TrajectoryDataset& data, double pinv_rtol);

/// Eigenpairs of K_N sorted by descending modulus, then ascending argument.
/// Column k of `coefficients` defines phi_k = sum_i K(., x_i) w_{k,i}, scaled
/// to unit RMS over the sample states with its largest entry real positive.
struct SpectralDecomposition {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd coefficients;
  Eigen::VectorXd residuals;  // |K_N w - lambda w| / |w|

  Eigen::Index size() const { return eigenvalues.size(); }
};

SpectralDecomposition decompose(const EmpiricalKoopman& op, int max_modes);

/// Values of the eigenfunctions at `states`; row i*d + a is component a at state i.
Eigen::MatrixXcd eigenfunction_values(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                      const PointSet& states, Eigen::Index rank);

/// Sampled observable rearranged to (d N) x q, q = m / d: entry (i*d + a, j)
/// holds component j*d + a at state i.
Eigen::MatrixXd sample_observable(const Observable& g, const PointSet& states, int block_dim);

/// Least-squares coefficients (rank x q) of the sampled observable on the
/// leading `rank` eigenfunctions at the sample states (rank <= 0: all modes).
Eigen::MatrixXcd project_observable(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                    const Observable& g, Eigen::Index rank = 0);

struct ForecastModel {
  OvKernel kernel;
  PointSet centers;
  Eigen::VectorXcd eigenvalues;   // leading `rank` modes
  Eigen::MatrixXcd coefficients;  // dN x rank eigenfunction coefficients
  Eigen::MatrixXcd projection;    // rank x q
  Eigen::Index rank = 0;
  int observable_dim = 1;
  double dt = 0;
};

/// Rank-r model; the projection is refit on the leading r modes.
ForecastModel make_forecast_model(const SpectralDecomposition& dec, const EmpiricalKoopman& op,
                                  const Observable& g, Eigen::Index rank, double dt);

/// Re sum_{k <= r} proj_k phi_k(x) lambda_k^steps.
Eigen::VectorXd forecast(const ForecastModel& fm, const Eigen::VectorXd& x, int steps);
/// Row i is the forecast at states row i.
Eigen::MatrixXd forecast_batch(const ForecastModel& fm, const PointSet& states, int steps);

/// Truth after `steps` steps of the flow.
using EvolvedObservable = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, int steps)>;

/// Err(s) = sqrt(vol / M sum_i |f(x_i, s) - f_r(x_i, s)|^2) for s = 0..horizon.
std::vector<double> forecast_error_curve(const ForecastModel& fm, const EvolvedObservable& truth,
                                         const PointSet& eval_states, int horizon);

/// Self-convergence proxy between two operators with equal kernels: the
/// largest relative RMS difference of the estimated g o Phi on `probe_grid`.
double operator_gap(const EmpiricalKoopman& a, const EmpiricalKoopman& b, const std::vector<Observable>& probes,
                    const PointSet& probe_grid);

/// Coefficients of g o Phi estimated by K_N applied to the interpolant of g.
Eigen::MatrixXd apply_to_observable(const EmpiricalKoopman& op, const Observable& g);

/// Columns k, re, im, abs, residual.
void write_eigenvalues_csv(const std::string& path, const SpectralDecomposition& dec);

}  // namespace ovk

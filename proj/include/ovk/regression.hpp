#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "ovk/geometry.hpp"
#include "ovk/gram.hpp"
#include "ovk/kernel.hpp"

namespace ovk {

/// Observed field samples: row i of `targets` is y_i at site inputs.point(i).
struct TrainingSet {
  PointSet inputs;
  Eigen::MatrixXd targets;  // N x d

  int output_dim() const { return static_cast<int>(targets.cols()); }
  void validate() const;
};

/// Fitted representer expansion f(p) = sum_i K(p, center_i) c_i.
struct RepresenterModel {
  OvKernel kernel;
  PointSet centers;
  Eigen::MatrixXd coefficients;  // N x d, row i is c_i
  double lambda = 0;
  double rkhs_norm_sq = 0;  // c^T G c
  RidgeInfo solve_info;

  int output_dim() const { return kernel.output_dim(); }
};

/// Regularization weight for a training set of size n.
struct LambdaSchedule {
  enum class Kind { Fixed, Default, SourceRate } kind = Kind::Default;
  double value = 0;  // Fixed: lambda; SourceRate: the smoothness exponent r

  /// Fixed -> value; Default -> 1e-8 n; SourceRate -> n^(-1/(2r+1)).
  double at(Eigen::Index n) const;
  static LambdaSchedule parse(const std::string& text);
};

RepresenterModel fit(const OvKernel& K, const TrainingSet& data, double lambda);

Eigen::VectorXd predict(const RepresenterModel& m, const Point& p);
Eigen::VectorXd predict_time_derivative(const RepresenterModel& m, const Point& p);

/// Row i is the prediction at probes.point(i). Uses one cross-Gram product.
Eigen::MatrixXd predict_batch(const RepresenterModel& m, const PointSet& probes);
Eigen::MatrixXd predict_time_derivative_batch(const RepresenterModel& m, const PointSet& probes);

/// Field F(x, t) -> R^d.
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

struct FieldErrors {
  double l2_field = 0;
  double l2_dt = 0;
};

/// Discrete L2 proxies sqrt(vol/n sum |F - f|^2) of the field and of its
/// time derivative over `eval_grid`.
FieldErrors empirical_errors(const RepresenterModel& m, const VectorField& truth, const VectorField& truth_dt,
                             const PointSet& eval_grid);

/// CSV with columns x1..x_din, t, y1..y_d.
TrainingSet read_training_csv(const std::string& path);
void write_training_csv(const std::string& path, const TrainingSet& data);

void save_model(std::ostream& os, const RepresenterModel& m);
void save_model(const std::string& path, const RepresenterModel& m);
RepresenterModel load_model(std::istream& is);
RepresenterModel load_model(const std::string& path);

}  // namespace ovk

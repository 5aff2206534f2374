#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "ovk/geometry.hpp"

namespace ovk {

/// Right-hand side v(x, t) of dx/dt = v(x, t).
using VelocityField = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

/// Closed-form flow Phi(x, t0, dt).
using FlowFormula = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t0, double dt)>;

enum class BuiltinSystem { Sine2Pi, LinearContraction, Identity, Custom };

/// Flow map Phi_dt of an ODE, either closed-form or integrated with fixed-step RK4.
class FlowMap {
 public:
  enum class Kind { Analytic, Integrated };

  static FlowMap identity(int dim);
  /// dx/dt = rate * x, solved in closed form.
  static FlowMap linear_contraction(double rate, int dim = 1);
  /// dx/dt = sin(2 pi x), integrated with RK4.
  static FlowMap sine2pi(std::optional<double> substep = std::nullopt);
  static FlowMap integrated(VelocityField v, int dim, std::optional<double> substep = std::nullopt,
                            BuiltinSystem builtin = BuiltinSystem::Custom);
  static FlowMap analytic(FlowFormula formula, int dim, BuiltinSystem builtin = BuiltinSystem::Custom);

  /// Builtin by name: "sine2pi", "linear" (rate -1), "identity".
  static FlowMap builtin(std::string_view name);

  Kind kind() const { return kind_; }
  BuiltinSystem system() const { return builtin_; }
  int dim() const { return dim_; }
  /// Fixed RK4 substep; unset means dt / 50 per call.
  std::optional<double> substep() const { return substep_; }
  const VelocityField& velocity() const { return velocity_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x, double t0, double dt) const;

 private:
  Kind kind_ = Kind::Analytic;
  BuiltinSystem builtin_ = BuiltinSystem::Custom;
  int dim_ = 1;
  std::optional<double> substep_;
  VelocityField velocity_;
  FlowFormula formula_;
};

inline Eigen::VectorXd flow(const FlowMap& f, const Eigen::VectorXd& x, double t0, double dt) { return f(x, t0, dt); }

/// One classical fourth-order Runge-Kutta step.
Eigen::VectorXd rk4_step(const VelocityField& v, const Eigen::VectorXd& x, double t, double h);

/// Snapshot pairs (x_i, Phi_dt(x_i)).
struct TrajectoryDataset {
  PointSet x_now;
  PointSet x_next;
  double dt = 0;
  int observable_dim = 1;
};

TrajectoryDataset generate_pairs(const FlowMap& f, const PointSet& initial, double dt, int observable_dim = 1);

/// Columns x_now_1..d, x_next_1..d; dt in a "# dt=" comment line.
void write_csv(const std::string& path, const TrajectoryDataset& data);

/// Observable g: R^k -> R^m.
using Observable = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

struct BuiltinObservable {
  /// Time-dependent value; time-independent observables ignore t.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)> value;
  /// Partial derivative in t, where the benchmark needs one.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)> dt;
  int input_dim = 1;
  int output_dim = 1;

  Observable at_time(double t = 0.0) const;
};

/// "exp1_field": (sin(pi x) cos(pi t), cos(pi x) sin(pi t)) with its t-derivative.
/// "exp2_observable": (sin(2 pi x), cos(2 pi x)).
/// "coordinate": g(x) = x.
BuiltinObservable builtin_observable(std::string_view name);

}  // namespace ovk

#include "ovk/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "ovk/csv.hpp"
#include "ovk/errors.hpp"

namespace ovk {

using std::numbers::pi;

FlowMap FlowMap::identity(int dim) {
  return analytic([](const Eigen::VectorXd& x, double, double) { return x; }, dim, BuiltinSystem::Identity);
}

FlowMap FlowMap::linear_contraction(double rate, int dim) {
  return analytic([rate](const Eigen::VectorXd& x, double, double dt) -> Eigen::VectorXd { return x * std::exp(rate * dt); },
                  dim, BuiltinSystem::LinearContraction);
}

FlowMap FlowMap::sine2pi(std::optional<double> substep) {
  return integrated(
      [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return (2.0 * pi * x.array()).sin().matrix(); }, 1,
      substep, BuiltinSystem::Sine2Pi);
}

FlowMap FlowMap::integrated(VelocityField v, int dim, std::optional<double> substep, BuiltinSystem builtin) {
  if (dim < 1) throw InputError("flow dimension must be positive");
  if (substep && !(*substep > 0)) throw InputError("integrator substep must be positive");
  FlowMap f;
  f.kind_ = Kind::Integrated;
  f.builtin_ = builtin;
  f.dim_ = dim;
  f.substep_ = substep;
  f.velocity_ = std::move(v);
  return f;
}

FlowMap FlowMap::analytic(FlowFormula formula, int dim, BuiltinSystem builtin) {
  if (dim < 1) throw InputError("flow dimension must be positive");
  FlowMap f;
  f.kind_ = Kind::Analytic;
  f.builtin_ = builtin;
  f.dim_ = dim;
  f.formula_ = std::move(formula);
  return f;
}

FlowMap FlowMap::builtin(std::string_view name) {
  if (name == "sine2pi") return sine2pi();
  if (name == "linear") return linear_contraction(-1.0);
  if (name == "identity") return identity(1);
  throw InputError("unknown builtin system '" + std::string(name) + "'");
}

Eigen::VectorXd rk4_step(const VelocityField& v, const Eigen::VectorXd& x, double t, double h) {
  const Eigen::VectorXd k1 = v(x, t);
  const Eigen::VectorXd k2 = v(x + 0.5 * h * k1, t + 0.5 * h);
  const Eigen::VectorXd k3 = v(x + 0.5 * h * k2, t + 0.5 * h);
  const Eigen::VectorXd k4 = v(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd FlowMap::operator()(const Eigen::VectorXd& x, double t0, double dt) const {
  if (x.size() != dim_) throw InputError("flow: state dimension mismatch");
  if (!(dt >= 0)) throw InputError("flow: dt must be nonnegative");
  if (kind_ == Kind::Analytic) return formula_(x, t0, dt);
  if (dt == 0) return x;
  const long steps = substep_ ? std::max(1L, static_cast<long>(std::ceil(dt / *substep_ - 1e-9))) : 50L;
  const double h = dt / double(steps);
  Eigen::VectorXd state = x;
  for (long s = 0; s < steps; ++s) {
    state = rk4_step(velocity_, state, t0 + double(s) * h, h);
    if (!state.allFinite()) throw NumericalError("flow: state became non-finite during integration");
  }
  return state;
}

TrajectoryDataset generate_pairs(const FlowMap& f, const PointSet& initial, double dt, int observable_dim) {
  if (initial.empty()) throw InputError("generate_pairs: no initial states");
  if (!(dt > 0)) throw InputError("generate_pairs: dt must be positive");
  if (initial.spatial_dim() != f.dim() || initial.time_axis() != TimeAxis::None) {
    throw InputError("generate_pairs: initial states must be untimed points of the flow dimension");
  }
  Eigen::MatrixXd next(initial.size(), f.dim());
  for (Eigen::Index i = 0; i < initial.size(); ++i) {
    next.row(i) = f(initial.coords().row(i).transpose(), 0.0, dt).transpose();
  }
  Box box(initial.domain().lower.cwiseMin(next.colwise().minCoeff().transpose()),
          initial.domain().upper.cwiseMax(next.colwise().maxCoeff().transpose()));
  return {initial, PointSet(std::move(next), std::move(box), TimeAxis::None, initial.kind(), initial.seed()), dt,
          observable_dim};
}

void write_csv(const std::string& path, const TrajectoryDataset& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << "# dt=" << csv::format(data.dt) << '\n';
  std::vector<std::string> names;
  const int d = data.x_now.dim();
  for (int a = 0; a < d; ++a) names.push_back("x_now_" + std::to_string(a + 1));
  for (int a = 0; a < d; ++a) names.push_back("x_next_" + std::to_string(a + 1));
  csv::write_header(out, names);
  for (Eigen::Index i = 0; i < data.x_now.size(); ++i) {
    std::vector<double> row;
    for (int a = 0; a < d; ++a) row.push_back(data.x_now.coords()(i, a));
    for (int a = 0; a < d; ++a) row.push_back(data.x_next.coords()(i, a));
    csv::write_row(out, row);
  }
}

Observable BuiltinObservable::at_time(double t) const {
  return [v = value, t](const Eigen::VectorXd& x) { return v(x, t); };
}

BuiltinObservable builtin_observable(std::string_view name) {
  if (name == "exp1_field") {
    BuiltinObservable o;
    o.input_dim = 1;
    o.output_dim = 2;
    o.value = [](const Eigen::VectorXd& x, double t) {
      return Eigen::Vector2d(std::sin(pi * x(0)) * std::cos(pi * t), std::cos(pi * x(0)) * std::sin(pi * t)).eval();
    };
    o.dt = [](const Eigen::VectorXd& x, double t) {
      return Eigen::Vector2d(-pi * std::sin(pi * x(0)) * std::sin(pi * t), pi * std::cos(pi * x(0)) * std::cos(pi * t))
          .eval();
    };
    return o;
  }
  if (name == "exp2_observable") {
    BuiltinObservable o;
    o.input_dim = 1;
    o.output_dim = 2;
    o.value = [](const Eigen::VectorXd& x, double) {
      return Eigen::Vector2d(std::sin(2 * pi * x(0)), std::cos(2 * pi * x(0))).eval();
    };
    o.dt = [](const Eigen::VectorXd&, double) { return Eigen::Vector2d::Zero().eval(); };
    return o;
  }
  if (name == "coordinate") {
    BuiltinObservable o;
    o.input_dim = 1;
    o.output_dim = 1;
    o.value = [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return x; };
    o.dt = [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(x.size()); };
    return o;
  }
  throw InputError("unknown observable '" + std::string(name) + "'");
}

}  // namespace ovk

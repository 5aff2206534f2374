#include "ovk/regression.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "ovk/csv.hpp"
#include "ovk/errors.hpp"

namespace ovk {

namespace {

// Row-major stacking: entry i*d + a holds M(i, a).
Eigen::VectorXd stack_rows(const Eigen::MatrixXd& M) {
  Eigen::VectorXd v(M.size());
  for (Eigen::Index i = 0; i < M.rows(); ++i) v.segment(i * M.cols(), M.cols()) = M.row(i).transpose();
  return v;
}

Eigen::MatrixXd unstack_rows(const Eigen::VectorXd& v, Eigen::Index d) {
  Eigen::MatrixXd M(v.size() / d, d);
  for (Eigen::Index i = 0; i < M.rows(); ++i) M.row(i) = v.segment(i * d, d).transpose();
  return M;
}

void check_point(const RepresenterModel& m, const Point& p) {
  if (p.x.size() != m.centers.spatial_dim()) throw InputError("probe dimension does not match model centers");
  if (!p.x.allFinite() || !std::isfinite(p.t)) throw InputError("probe point is not finite");
}

}  // namespace

void TrainingSet::validate() const {
  if (inputs.empty()) throw InputError("training set is empty");
  if (targets.rows() != inputs.size()) throw InputError("training set: inputs and targets differ in length");
  if (targets.cols() < 1) throw InputError("training set: targets have no components");
  if (!targets.allFinite()) throw InputError("training set: non-finite target values");
}

double LambdaSchedule::at(Eigen::Index n) const {
  switch (kind) {
    case Kind::Fixed: return value;
    case Kind::Default: return 1e-8 * double(n);
    case Kind::SourceRate: return std::pow(double(n), -1.0 / (2.0 * value + 1.0));
  }
  return value;
}

LambdaSchedule LambdaSchedule::parse(const std::string& text) {
  LambdaSchedule s;
  if (text.empty() || text == "default") return s;
  auto number = [&](const std::string& str) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != str.size()) throw InputError("bad lambda value '" + text + "'");
    return v;
  };
  if (text.rfind("rate:", 0) == 0) {
    s.kind = Kind::SourceRate;
    s.value = number(text.substr(5));
    if (!(s.value > 0)) throw InputError("lambda rate exponent must be positive");
    return s;
  }
  s.kind = Kind::Fixed;
  s.value = number(text);
  if (!(s.value >= 0)) throw InputError("lambda must be nonnegative");
  return s;
}

RepresenterModel fit(const OvKernel& K, const TrainingSet& data, double lambda) {
  data.validate();
  if (data.output_dim() != K.output_dim()) throw InputError("target dimension does not match kernel output_dim");
  const BlockGramMatrix G = assemble_gram(K, data.inputs);
  const Eigen::VectorXd y = stack_rows(data.targets);
  RidgeInfo info;
  const Eigen::VectorXd c = solve_ridge(G, y, lambda, &info);
  RepresenterModel m{K, data.inputs, unstack_rows(c, K.output_dim()), lambda, 0.0, info};
  m.rkhs_norm_sq = std::max(0.0, c.dot(G.entries * c));
  return m;
}

Eigen::VectorXd predict(const RepresenterModel& m, const Point& p) {
  check_point(m, p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.output_dim());
  for (Eigen::Index i = 0; i < m.centers.size(); ++i) {
    out += m.kernel.factor(p.x, p.t, m.centers.x(i).transpose(), m.centers.t(i)) * m.coefficients.row(i).transpose();
  }
  return out;
}

Eigen::VectorXd predict_time_derivative(const RepresenterModel& m, const Point& p) {
  check_point(m, p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.output_dim());
  for (Eigen::Index i = 0; i < m.centers.size(); ++i) {
    out += m.kernel.dt_factor(p.x, p.t, m.centers.x(i).transpose(), m.centers.t(i)) *
           m.coefficients.row(i).transpose();
  }
  return out;
}

Eigen::MatrixXd predict_batch(const RepresenterModel& m, const PointSet& probes) {
  const Eigen::MatrixXd C = assemble_cross_gram(m.kernel, probes, m.centers);
  return unstack_rows(C * stack_rows(m.coefficients), m.output_dim());
}

Eigen::MatrixXd predict_time_derivative_batch(const RepresenterModel& m, const PointSet& probes) {
  const Eigen::MatrixXd C = assemble_cross_gram_dt(m.kernel, probes, m.centers);
  return unstack_rows(C * stack_rows(m.coefficients), m.output_dim());
}

FieldErrors empirical_errors(const RepresenterModel& m, const VectorField& truth, const VectorField& truth_dt,
                             const PointSet& eval_grid) {
  if (eval_grid.empty()) throw InputError("empirical_errors: empty evaluation grid");
  const Eigen::MatrixXd f = predict_batch(m, eval_grid);
  const Eigen::MatrixXd df = predict_time_derivative_batch(m, eval_grid);
  double sum_f = 0, sum_dt = 0;
  for (Eigen::Index i = 0; i < eval_grid.size(); ++i) {
    const Eigen::VectorXd x = eval_grid.x(i).transpose();
    const double t = eval_grid.t(i);
    sum_f += (truth(x, t) - f.row(i).transpose()).squaredNorm();
    sum_dt += (truth_dt(x, t) - df.row(i).transpose()).squaredNorm();
  }
  const double w = eval_grid.domain().volume() / double(eval_grid.size());
  return {std::sqrt(w * sum_f), std::sqrt(w * sum_dt)};
}

TrainingSet read_training_csv(const std::string& path) {
  const csv::Table table = csv::read(path);
  const int t_col = table.column("t");
  if (t_col < 1) throw InputError("training csv needs columns x1..xk, t, y1..yd");
  const int d_in = t_col;
  const int d = static_cast<int>(table.header.size()) - d_in - 1;
  if (d < 1) throw InputError("training csv has no target columns");
  if (table.rows.empty()) throw InputError("training csv has no rows");
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd coords(n, d_in + 1), targets(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a <= d_in; ++a) coords(i, a) = table.rows[i][a];
    for (int a = 0; a < d; ++a) targets(i, a) = table.rows[i][d_in + 1 + a];
  }
  Box box(coords.colwise().minCoeff().transpose(), coords.colwise().maxCoeff().transpose());
  TrainingSet ts{PointSet(std::move(coords), std::move(box), TimeAxis::Last), std::move(targets)};
  ts.validate();
  return ts;
}

void write_training_csv(const std::string& path, const TrainingSet& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  std::vector<std::string> names;
  for (int a = 0; a < data.inputs.spatial_dim(); ++a) names.push_back("x" + std::to_string(a + 1));
  names.emplace_back("t");
  for (int a = 0; a < data.output_dim(); ++a) names.push_back("y" + std::to_string(a + 1));
  csv::write_header(out, names);
  for (Eigen::Index i = 0; i < data.inputs.size(); ++i) {
    std::vector<double> row;
    for (int a = 0; a < data.inputs.spatial_dim(); ++a) row.push_back(data.inputs.x(i)(a));
    row.push_back(data.inputs.t(i));
    for (int a = 0; a < data.output_dim(); ++a) row.push_back(data.targets(i, a));
    csv::write_row(out, row);
  }
}

// Model archive: a version line followed by "[section]" blocks, each a CSV
// header row plus data rows.
//
//   #ovk-model,1
//   [kernel]
//   spatial_family,spatial_sigma,temporal_family,temporal_sigma,alpha,output_dim
//   [solver]        lambda,rkhs_norm_sq
//   [domain]        one row per axis: lower,upper
//   [centers]       x1..xk,t
//   [coefficients]  c1..cd
//
// Families are written by name in the kernel row.
void save_model(std::ostream& os, const RepresenterModel& m) {
  const auto& K = m.kernel;
  os << "#ovk-model,1\n[kernel]\n";
  os << "spatial_family,spatial_sigma,temporal_family,temporal_sigma,alpha,output_dim\n";
  os << to_string(K.spatial().family()) << ',' << csv::format(K.spatial().bandwidth()) << ','
     << to_string(K.temporal().family()) << ',' << csv::format(K.temporal().bandwidth()) << ','
     << csv::format(K.alpha()) << ',' << K.output_dim() << '\n';
  os << "[solver]\nlambda,rkhs_norm_sq\n" << csv::format(m.lambda) << ',' << csv::format(m.rkhs_norm_sq) << '\n';
  os << "[domain]\nlower,upper\n";
  const Box& box = m.centers.domain();
  for (int a = 0; a < box.dim(); ++a) csv::write_row(os, {box.lower(a), box.upper(a)});
  os << "[centers]\n";
  std::vector<std::string> names;
  for (int a = 0; a < m.centers.spatial_dim(); ++a) names.push_back("x" + std::to_string(a + 1));
  if (m.centers.time_axis() == TimeAxis::Last) names.emplace_back("t");
  csv::write_header(os, names);
  for (Eigen::Index i = 0; i < m.centers.size(); ++i) {
    const Eigen::RowVectorXd r = m.centers.coords().row(i);
    csv::write_row(os, std::vector<double>(r.data(), r.data() + r.size()));
  }
  os << "[coefficients]\n";
  names.clear();
  for (int a = 0; a < m.output_dim(); ++a) names.push_back("c" + std::to_string(a + 1));
  csv::write_header(os, names);
  for (Eigen::Index i = 0; i < m.coefficients.rows(); ++i) {
    const Eigen::RowVectorXd r = m.coefficients.row(i);
    csv::write_row(os, std::vector<double>(r.data(), r.data() + r.size()));
  }
}

void save_model(const std::string& path, const RepresenterModel& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  save_model(out, m);
}

RepresenterModel load_model(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("#ovk-model,", 0) != 0) throw InputError("not an ovk model archive");
  if (line != "#ovk-model,1") throw InputError("unsupported model archive version: " + line.substr(11));

  std::vector<std::pair<std::string, std::vector<std::string>>> sections;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      sections.push_back({line.substr(1, line.size() - 2), {}});
    } else {
      if (sections.empty()) throw InputError("model archive: data before first section");
      sections.back().second.push_back(line);
    }
  }
  auto section = [&](const std::string& name) -> const std::vector<std::string>& {
    for (const auto& [n, lines] : sections) {
      if (n == name) {
        if (lines.empty()) throw InputError("model archive: section [" + name + "] has no header");
        return lines;
      }
    }
    throw InputError("model archive: missing section [" + name + "]");
  };
  auto numeric = [&](const std::string& name) {
    std::stringstream ss;
    for (const auto& l : section(name)) ss << l << '\n';
    return csv::read(ss);
  };

  const auto& kl = section("kernel");
  if (kl.size() != 2) throw InputError("model archive: [kernel] needs one data row");
  std::vector<std::string> kf;
  {
    std::stringstream ss(kl[1]);
    std::string cell;
    while (std::getline(ss, cell, ',')) kf.push_back(cell);
  }
  if (kf.size() != 6) throw InputError("model archive: malformed kernel row");
  const OvKernel K(Kernel(parse_kernel_family(kf[0]), std::stod(kf[1])),
                   Kernel(parse_kernel_family(kf[2]), std::stod(kf[3])), std::stod(kf[4]), std::stoi(kf[5]));

  const csv::Table solver = numeric("solver");
  const csv::Table domain = numeric("domain");
  const csv::Table centers = numeric("centers");
  const csv::Table coeffs = numeric("coefficients");
  if (solver.rows.size() != 1) throw InputError("model archive: [solver] needs one row");
  const int D = static_cast<int>(centers.header.size());
  if (static_cast<int>(domain.rows.size()) != D) throw InputError("model archive: domain/centers mismatch");
  if (coeffs.rows.size() != centers.rows.size()) throw InputError("model archive: centers/coefficients mismatch");
  if (static_cast<int>(coeffs.header.size()) != K.output_dim()) throw InputError("model archive: bad coefficient width");

  Eigen::VectorXd lo(D), hi(D);
  for (int a = 0; a < D; ++a) {
    lo(a) = domain.rows[a][0];
    hi(a) = domain.rows[a][1];
  }
  const Eigen::Index n = static_cast<Eigen::Index>(centers.rows.size());
  Eigen::MatrixXd coords(n, D), c(n, K.output_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < D; ++a) coords(i, a) = centers.rows[i][a];
    for (int a = 0; a < K.output_dim(); ++a) c(i, a) = coeffs.rows[i][a];
  }
  const TimeAxis ta = centers.header.back() == "t" ? TimeAxis::Last : TimeAxis::None;
  RepresenterModel m{K, PointSet(std::move(coords), Box(lo, hi), ta), std::move(c), solver.rows[0][0],
                     solver.rows[0][1], {}};
  return m;
}

RepresenterModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace ovk

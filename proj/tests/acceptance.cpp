// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//   acceptance <ovk-cli> <configs-dir> <work-dir>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ovk/experiments.hpp"

using namespace ovk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double gauss(double t, double tp, double s) { return std::exp(-(t - tp) * (t - tp) / (s * s)); }

OvKernel gauss_ov(double sx, double st, double alpha, int d) {
  return OvKernel(Kernel::gaussian(sx), Kernel::gaussian(st), alpha, d);
}

TrainingSet random_training(std::mt19937_64& rng, int n, int d, int din, std::uint64_t seed) {
  std::normal_distribution<double> N01;
  TrainingSet out;
  out.inputs = random_points(Box::square(0, 1, din + 1), n, seed, TimeAxis::Last);
  out.targets.resize(n, d);
  for (auto& v : out.targets.reshaped()) v = N01(rng);
  return out;
}

ExperimentConfig load(const fs::path& ini, ExperimentKind kind, const fs::path& out) {
  auto values = read_ini(ini.string());
  values["run.output_dir"] = out.string();
  return make_config(kind, values);
}

Outcome kernel_correctness() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> T(0.0, 1.0), S(0.1, 2.0);
  const double h = 1e-4;
  double worst = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const double t = T(rng), tp = T(rng), s = S(rng);
    const double fd = (gauss(t + h, tp + h, s) - gauss(t + h, tp - h, s) - gauss(t - h, tp + h, s) +
                       gauss(t - h, tp - h, s)) /
                      (4 * h * h);
    const double exact = eval_dt_dt_scalar(Kernel::gaussian(s), t, tp);
    // relative to the kernel's own scale 2/s^2 = d1d2 at u = 0
    worst = std::max(worst, std::abs(exact - fd) / (2.0 / (s * s)));
  }
  o.require(worst <= 1e-5, "fd mismatch " + num(worst));

  for (double s : {0.05, 0.2, 1.0}) {
    Eigen::VectorXd t(20);
    for (auto& v : t) v = T(rng);
    const auto k = Kernel::gaussian(s);
    Eigen::MatrixXd G(20, 20);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) G(i, j) = eval_dt_dt_scalar(k, t(i), t(j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double ratio = es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
    o.require(ratio >= -1e-8, "K1 gram not psd at sigma " + num(s) + ": " + num(ratio));
  }
  o.detail = o.ok ? "max fd error " + num(worst) : o.detail;
  return o;
}

Outcome representer_system() {
  Outcome o;
  const auto field = builtin_observable("exp1_field");
  auto ps = grid_points(Box::square(0, 1, 2), {25, 40}, TimeAxis::Last);
  double worst = 0;
  for (double s : {0.05, 0.1, 0.2}) {
    auto G = assemble_gram(gauss_ov(s, s, 0.1, 2), ps);
    Eigen::VectorXd y(G.size());
    for (Eigen::Index i = 0; i < ps.size(); ++i) y.segment(2 * i, 2) = field.value(ps.x(i).transpose(), ps.t(i));
    for (double lambda : {1e-12, 1e-10, 1e-8, 1e-3}) {
      const Eigen::VectorXd c = solve_ridge(G, y, lambda);
      Eigen::VectorXd r = G.entries * c + lambda * c - y;
      worst = std::max(worst, r.norm() / y.norm());
    }
  }
  o.require(worst <= 1e-10, "dN=2000 residual " + num(worst));

  std::mt19937_64 rng(12);
  std::normal_distribution<double> N01;
  auto sites = grid_points(Box::square(0, 1, 2), {11, 11}, TimeAxis::Last);
  TrainingSet data;
  data.inputs = sites;
  data.targets.resize(sites.size(), 2);
  for (auto& v : data.targets.reshaped()) v = N01(rng);
  double interp = 0;
  for (double s : {0.1, 0.2}) {
    auto m = fit(gauss_ov(s, s, 0.0, 2), data, 1e-12);
    interp = std::max(interp, (predict_batch(m, sites) - data.targets).rowwise().norm().maxCoeff() /
                                  data.targets.rowwise().norm().maxCoeff());
  }
  o.require(interp <= 1e-6, "interpolation error " + num(interp));

  auto train = random_training(rng, 30, 2, 1, 77);
  const auto K = gauss_ov(0.3, 0.3, 0.05, 2);
  auto m = fit(K, train, 1e-6);
  double scal = 0;
  for (double s : {3.7, -0.01, 1e3}) {
    TrainingSet scaled = train;
    scaled.targets *= s;
    auto ms = fit(K, scaled, 1e-6);
    scal = std::max(scal, (ms.coefficients - s * m.coefficients).norm() / (std::abs(s) * m.coefficients.norm()));
  }
  o.require(scal <= 1e-12, "scaling equivariance " + num(scal));
  if (o.ok) o.detail = "residual " + num(worst) + ", interpolation " + num(interp) + ", scaling " + num(scal);
  return o;
}

Outcome temporal_derivative() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> S(0.25, 1.0), A(0.0, 0.3), U(0.0, 1.0);
  std::uniform_int_distribution<int> D(1, 3), N(3, 20), Din(1, 2);
  const double h = 1e-4;
  double worst = 0;
  int with_alpha = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = D(rng), din = Din(rng);
    const double alpha = rep % 4 == 0 ? 0.0 : A(rng);
    with_alpha += alpha > 0;
    auto m = fit(gauss_ov(S(rng), S(rng), alpha, d), random_training(rng, N(rng), d, din, 700 + rep), 1e-4);
    Eigen::VectorXd x(din);
    for (auto& v : x) v = U(rng);
    const double t = U(rng);
    const Eigen::VectorXd exact = predict_time_derivative(m, Point{x, t});
    const Eigen::VectorXd fd = (predict(m, Point{x, t + h}) - predict(m, Point{x, t - h})) / (2 * h);
    const double scale = std::max(exact.norm(), predict(m, Point{x, t}).norm());
    worst = std::max(worst, (exact - fd).norm() / scale);
  }
  o.require(worst <= 1e-5, "fd mismatch " + num(worst));
  o.require(with_alpha >= 50, "too few alpha > 0 cases");
  if (o.ok) o.detail = "max relative error " + num(worst) + " (" + std::to_string(with_alpha) + " with alpha > 0)";
  return o;
}

Outcome exp1_rates(const fs::path& configs, const fs::path& work) {
  Outcome o;
  auto r = run_exp1(load(configs / "exp1.ini", ExperimentKind::Exp1, work / "acc_exp1"));
  o.require(r.rows.size() == 4 && r.rows.front().n == 64 && r.rows.back().n == 512, "sweep is not 64..512");
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    o.require(r.rows[i].l2_field < r.rows[i - 1].l2_field, "l2_field not decreasing at N=" + std::to_string(r.rows[i].n));
    o.require(r.rows[i].l2_dt < r.rows[i - 1].l2_dt, "l2_dt not decreasing at N=" + std::to_string(r.rows[i].n));
  }
  o.require(r.field_slope && r.field_slope->slope <= -0.5, "field slope above -0.5");
  o.require(r.dt_slope && r.dt_slope->slope <= -0.5, "dt slope above -0.5");
  if (o.ok) o.detail = "slopes field " + num(r.field_slope->slope) + ", dt " + num(r.dt_slope->slope);
  return o;
}

Outcome koopman_oracles() {
  Outcome o;
  const OvKernel K = gauss_ov(0.5, 0.5, 0.0, 1);
  double id_dev = 0;
  for (int n : {50, 100, 200}) {
    auto data = generate_pairs(FlowMap::identity(1), grid_points(Box::interval(-1, 1), {n}), 0.1);
    auto dec = decompose(build_koopman(K, data, 1e-8), 1000);
    o.require(dec.size() > 0, "identity flow kept no modes");
    for (Eigen::Index k = 0; k < dec.size(); ++k) id_dev = std::max(id_dev, std::abs(dec.eigenvalues(k) - 1.0));
  }
  o.require(id_dev <= 1e-8, "identity eigenvalue off by " + num(id_dev));

  auto data = generate_pairs(FlowMap::linear_contraction(-1.0), grid_points(Box::interval(-1, 1), {200}), 0.1);
  auto dec = decompose(build_koopman(K, data, 1e-10), 200);
  if (dec.size() < 3) {
    o.require(false, "linear flow kept fewer than 3 modes");
    return o;
  }
  const double l1 = std::abs(dec.eigenvalues(1)), l2 = std::abs(dec.eigenvalues(2));
  const double e1 = std::abs(l1 / std::exp(-0.1) - 1), e2 = std::abs(l2 / std::exp(-0.2) - 1);
  o.require(e1 <= 0.05, "|lambda_1| = " + num(l1));
  o.require(e2 <= 0.05, "|lambda_2| = " + num(l2));
  if (o.ok) o.detail = "identity dev " + num(id_dev) + ", linear " + num(l1) + ", " + num(l2);
  return o;
}

Outcome spectral_convergence(const fs::path& configs, const fs::path& work) {
  Outcome o;
  auto r = run_exp2(load(configs / "exp2.ini", ExperimentKind::Exp2, work / "acc_exp2"));
  o.require(r.sizes == std::vector<int>{100, 200, 400, 800}, "unexpected sweep");
  for (std::size_t i = 1; i < r.eigen_changes.size(); ++i) {
    for (std::size_t k = 0; k < 3 && k < r.eigen_changes[i].size(); ++k)
      o.require(r.eigen_changes[i][k] < r.eigen_changes[i - 1][k],
                "|dlambda_" + std::to_string(k + 1) + "| not decreasing at N=" + std::to_string(r.sizes[i]));
    o.require(r.gaps[i] < r.gaps[i - 1], "operator gap not decreasing at N=" + std::to_string(r.sizes[i]));
  }
  if (o.ok) {
    o.detail = "gaps";
    for (double g : r.gaps) o.detail += " " + num(g);
  }
  return o;
}

Outcome exp3_monotone(const fs::path& configs, const fs::path& work) {
  Outcome o;
  for (const char* name : {"exp3.ini", "exp3_linear.ini"}) {
    auto r = run_exp3(load(configs / name, ExperimentKind::Exp3, work / (std::string("acc_") + name)));
    double excess = -1e300;
    for (Eigen::Index s = 0; s < r.errors.rows(); ++s)
      for (Eigen::Index k = 1; k < r.errors.cols(); ++k) excess = std::max(excess, r.errors(s, k) - r.errors(s, k - 1));
    o.require(excess <= 1e-8, std::string(name) + ": error grows with rank by " + num(excess));
  }

  const OvKernel K = gauss_ov(0.5, 0.5, 0.0, 1);
  auto data = generate_pairs(FlowMap::linear_contraction(-1.0), grid_points(Box::interval(-1, 1), {200}), 0.1);
  auto op = build_koopman(K, data, 1e-10);
  auto dec = decompose(op, 200);
  auto fm = make_forecast_model(dec, op, builtin_observable("coordinate").at_time(), dec.size(), 0.1);
  const double f5 = forecast(fm, Eigen::VectorXd::Constant(1, 1.0), 5)(0);
  o.require(std::abs(f5 / std::exp(-0.5) - 1) <= 0.05, "5-step forecast at x=1 is " + num(f5));
  if (o.ok) o.detail = "5-step forecast " + num(f5) + " vs " + num(std::exp(-0.5));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const fs::path& configs, const fs::path& work) {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> runs{
      {"exp1", "exp1.ini"}, {"exp2", "exp2.ini"}, {"exp2", "exp2_identity.ini"}, {"exp3", "exp3.ini"},
      {"exp3", "exp3_linear.ini"}, {"fit", "fit.ini"}, {"forecast", "forecast.ini"}};
  int files = 0;
  for (const auto& [sub, ini] : runs) {
    fs::path dirs[2] = {work / ("det_a_" + ini), work / ("det_b_" + ini)};
    for (int i = 0; i < 2; ++i) {
      fs::remove_all(dirs[i]);
      const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" + (configs / ini).string() + "\" --out \"" +
                              dirs[i].string() + "\" --seed 7 > /dev/null";
      if (std::system(cmd.c_str()) != 0) o.require(false, sub + " " + ini + " exited nonzero");
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      if (e.path().extension() == ".txt") continue;  // manifest carries a timestamp
      ++files;
      o.require(slurp(e.path()) == slurp(dirs[1] / e.path().filename()), ini + ": " + e.path().filename().string() + " differs");
    }
  }
  o.require(files > 0, "no output files compared");
  if (o.ok) o.detail = std::to_string(files) + " files identical across reruns";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli, configs, work;
  app.add_option("cli", cli, "ovk executable")->required()->check(CLI::ExistingFile);
  app.add_option("configs", configs, "configs directory")->required()->check(CLI::ExistingDirectory);
  app.add_option("work", work, "scratch directory")->required();
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel correctness", kernel_correctness},
      {"representer system", representer_system},
      {"temporal derivative", temporal_derivative},
      {"exp1 rates", [&] { return exp1_rates(configs, work); }},
      {"koopman oracles", koopman_oracles},
      {"spectral self-convergence", [&] { return spectral_convergence(configs, work); }},
      {"exp3 rank monotonicity", [&] { return exp3_monotone(configs, work); }},
      {"determinism", [&] { return determinism(cli, configs, work); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.ok;
    std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}

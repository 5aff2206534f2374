#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ovk/csv.hpp"
#include "ovk/experiments.hpp"

using namespace ovk;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ovk_bench_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("slope fit closed forms") {
  std::vector<std::pair<double, double>> inv{{10, 0.1}, {20, 0.05}, {40, 0.025}, {80, 0.0125}};
  auto s = fit_slope(inv);
  CHECK(s.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(s.stderr_) <= 1e-12);

  CHECK(std::abs(fit_slope({{1, 3.0}, {2, 3.0}, {5, 3.0}}).slope) <= 1e-15);
  CHECK(fit_slope({{1, 1.0}, {2, 0.25}, {4, 0.0625}}).slope == doctest::Approx(-2.0).epsilon(1e-12));

  // y = N^-1 * (1, 2, 1): slope by hand is -1, residuals -c, 2c... with c = ln 2 / 3
  auto noisy = fit_slope({{1, 1.0}, {2, 1.0}, {4, 0.25}});
  CHECK(noisy.slope == doctest::Approx(-1.0).epsilon(1e-12));
  const double c = std::log(2.0) / 3.0, sxx = 2 * std::log(2.0) * std::log(2.0);
  CHECK(noisy.stderr_ == doctest::Approx(std::sqrt(6 * c * c / sxx)).epsilon(1e-12));

  CHECK_THROWS_AS(fit_slope({{1, 1.0}, {2, 0.5}}), InputError);
  CHECK_THROWS_AS(fit_slope({{1, 1.0}, {2, 0.0}, {4, 0.1}}), InputError);
  CHECK_THROWS_AS(fit_slope({{1, 1.0}, {2, -0.5}, {4, 0.1}}), InputError);
  CHECK_THROWS_AS(fit_slope({{2, 1.0}, {2, 0.5}, {2, 0.1}}), InputError);
}

TEST_CASE("grid shape") {
  CHECK(grid_shape(64) == std::pair{8, 8});
  CHECK(grid_shape(128) == std::pair{8, 16});
  CHECK(grid_shape(12) == std::pair{3, 4});
  CHECK(grid_shape(4) == std::pair{2, 2});
  CHECK_THROWS_AS(grid_shape(3), InputError);
  CHECK_THROWS_AS(grid_shape(13), InputError);
}

TEST_CASE("ini parsing") {
  std::istringstream in("experiment = exp2\n# comment\n; also\n[Run]\nSweep = 10, 20, 40\n\n[kernel]\nspatial.sigma=0.4\n");
  auto m = parse_ini(in);
  CHECK(m.at("experiment") == "exp2");
  CHECK(m.at("run.sweep") == "10, 20, 40");
  CHECK(m.at("kernel.spatial.sigma") == "0.4");
  CHECK(m.size() == 3);
  CHECK_THROWS_AS(read_ini("/nonexistent/x.ini"), InputError);
}

TEST_CASE("config construction and validation") {
  auto c = make_config(ExperimentKind::Exp2, {{"run.sweep", "10, 20, 40"}, {"kernel.spatial.sigma", "0.4"}});
  CHECK(c.sweep == std::vector<int>{10, 20, 40});
  CHECK(c.spatial_sigma == 0.4);
  CHECK(c.kernel().output_dim() == 1);
  auto [lo, hi] = c.state_interval();
  CHECK(lo == 1e-3);
  CHECK(hi == 1 - 1e-3);

  CHECK(make_config(ExperimentKind::Exp3, {{"koopman.rank_list", "1,2,5"}}).rank_list == std::vector<int>{1, 2, 5});
  CHECK(defaults_for(ExperimentKind::Exp1).output_dim == 2);

  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.swep", "10"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.sweep", "40, 20"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.sweep", ""}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.sweep", "2"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.sweep", "1e2"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp3, {{"koopman.rank_list", "3, 2"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"kernel.spatial.sigma", "0"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"experiment", "exp1"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"dynamics.system", "lorenz"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Exp2, {{"run.pinv_rtol", "1"}}), InputError);
  CHECK_THROWS_AS(make_config(ExperimentKind::Fit, {}), InputError);
  CHECK_THROWS_AS(parse_experiment_kind("exp4"), InputError);
}

TEST_CASE("exp1 with one size writes rows but no slope") {
  const auto out = scratch("exp1_single");
  auto c = make_config(ExperimentKind::Exp1, {{"run.sweep", "64"}, {"run.output_dir", out}, {"exp1.eval_resolution", "32"}});
  auto r = run_exp1(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].n == 64);
  CHECK(r.rows[0].n_space * r.rows[0].n_time == 64);
  CHECK(r.rows[0].h_fill > 0);
  CHECK(r.rows[0].l2_field > 0);
  CHECK(std::isfinite(r.rows[0].l2_dt));
  CHECK_FALSE(r.field_slope.has_value());
  CHECK(fs::exists(fs::path(out) / "exp1_rates.csv"));
  CHECK_FALSE(fs::exists(fs::path(out) / "exp1_slopes.csv"));
  CHECK(fs::exists(fs::path(out) / "manifest.txt"));
  CHECK(csv::read((fs::path(out) / "exp1_rates.csv").string()).rows.size() == 1);
}

TEST_CASE("exp1 errors fall with the sample count") {
  const auto out = scratch("exp1_small");
  auto c = make_config(ExperimentKind::Exp1, {{"run.sweep", "36, 64, 144"}, {"run.output_dir", out}, {"exp1.eval_resolution", "32"}});
  auto r = run_exp1(c);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[2].l2_field < r.rows[0].l2_field);
  CHECK(r.rows[2].h_fill < r.rows[0].h_fill);
  REQUIRE(r.field_slope.has_value());
  CHECK(r.field_slope->slope < 0);
  const auto slopes = slurp(fs::path(out) / "exp1_slopes.csv");
  CHECK(slopes.rfind("series,slope,stderr\nl2_field,", 0) == 0);
  CHECK(slopes.find("\nl2_dt,") != std::string::npos);
}

TEST_CASE("exp2 small sweep") {
  const auto out = scratch("exp2");
  auto c = make_config(ExperimentKind::Exp2, {{"run.sweep", "50, 100"}, {"run.output_dir", out}});
  auto r = run_exp2(c);
  CHECK(r.sizes == std::vector<int>{50, 100, 200});
  REQUIRE(r.spectra.size() == 3);
  CHECK(r.gaps.size() == 2);
  REQUIRE(r.eigen_changes.size() == 2);
  for (const auto& s : r.spectra) CHECK(std::abs(s.eigenvalues(0) - 1.0) <= 1e-4);
  for (double g : r.gaps) CHECK(g >= 0);
  CHECK(fs::exists(fs::path(out) / "exp2_eigenvalues.csv"));
  CHECK(fs::exists(fs::path(out) / "exp2_eigenvalues_N200.csv"));
  CHECK(csv::read((fs::path(out) / "exp2_convergence.csv").string()).rows.size() == 2);
}

TEST_CASE("exp3 linear flow") {
  const auto out = scratch("exp3");
  auto c = make_config(ExperimentKind::Exp3, {{"run.sweep", "100"},
                                              {"run.output_dir", out},
                                              {"kernel.spatial.sigma", "0.5"},
                                              {"dynamics.system", "linear"},
                                              {"dynamics.domain", "-1, 1"},
                                              {"koopman.observable", "coordinate"},
                                              {"koopman.rank_list", "1, 2, 3"},
                                              {"koopman.horizon", "5"},
                                              {"koopman.eval_points", "101"}});
  auto r = run_exp3(c);
  CHECK(r.ranks == std::vector<int>{1, 2, 3});
  REQUIRE(r.errors.rows() == 6);
  REQUIRE(r.errors.cols() == 3);
  for (Eigen::Index s = 0; s < 6; ++s)
    for (Eigen::Index k = 1; k < 3; ++k) CHECK(r.errors(s, k) <= r.errors(s, k - 1) + 1e-8);
  CHECK(r.truth_rms.size() == 6);
  // rms of x e^{-0.1 s} on [-1, 1] with the discrete L2 weight 2/M
  CHECK(r.truth_rms[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(0.02));
  auto t = csv::read((fs::path(out) / "exp3_errors.csv").string());
  CHECK(t.rows.size() == 6);
  CHECK(t.header.back() == "err_r3");

  auto bad = make_config(ExperimentKind::Exp3, {{"run.sweep", "20"}, {"run.output_dir", out}, {"koopman.rank_list", "500"}});
  CHECK_THROWS_AS(run_exp3(bad), NumericalError);
}

TEST_CASE("fit round trip through files") {
  const auto dir = fs::path(scratch("fit"));
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "train.csv");
    f << "x1,t,y1\n";
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) {
        const double x = 0.25 * i, t = j / 3.0;
        f << x << "," << t << "," << std::sin(x + t) << "\n";
      }
    std::ofstream e(dir / "eval.csv");
    e << "x1,t\n0.3,0.2\n0.7,0.9\n";
  }
  auto c = make_config(ExperimentKind::Fit, {{"fit.train", (dir / "train.csv").string()},
                                             {"fit.eval", (dir / "eval.csv").string()},
                                             {"run.output_dir", (dir / "out").string()},
                                             {"kernel.spatial.sigma", "0.5"},
                                             {"kernel.temporal.sigma", "0.5"},
                                             {"run.lambda", "1e-8"}});
  auto m = run_fit(c);
  CHECK(m.output_dim() == 1);
  auto p = csv::read((dir / "out" / "predictions.csv").string());
  CHECK(p.header == std::vector<std::string>{"x1", "t", "y1", "dy1_dt"});
  REQUIRE(p.rows.size() == 2);
  CHECK(p.rows[0][0] == 0.3);
  CHECK(p.rows[0][1] == 0.2);
  CHECK(p.rows[1][0] == 0.7);
  CHECK(p.rows[1][1] == 0.9);
  CHECK(p.rows[0][2] == doctest::Approx(std::sin(0.5)).epsilon(1e-2));
  CHECK(p.rows[0][3] == doctest::Approx(std::cos(0.5)).epsilon(5e-2));

  auto loaded = load_model((dir / "out" / "model.ovk").string());
  CHECK(loaded.coefficients == m.coefficients);
}

TEST_CASE("forecast runner") {
  const auto out = scratch("forecast");
  auto c = make_config(ExperimentKind::Forecast, {{"run.sweep", "100"}, {"run.output_dir", out}, {"forecast.rank", "3"}, {"forecast.steps", "4"}, {"forecast.points", "11"}});
  auto fm = run_forecast(c);
  CHECK(fm.rank == 3);
  auto t = csv::read((fs::path(out) / "forecast.csv").string());
  CHECK(t.rows.size() == 5 * 11);
  CHECK(fs::exists(fs::path(out) / "eigenvalues.csv"));
}

TEST_CASE("reruns are byte identical, serial or parallel") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = make_config(ExperimentKind::Exp2, {{"run.sweep", "40, 80"}, {"run.output_dir", a}});
  auto cb = make_config(ExperimentKind::Exp2, {{"run.sweep", "40, 80"}, {"run.output_dir", b}, {"run.parallel", "true"}});
  run_exp2(ca);
  run_exp2(cb);
  for (const char* f : {"exp2_eigenvalues.csv", "exp2_convergence.csv"}) CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));

  const auto r1 = scratch("det_r1"), r2 = scratch("det_r2"), r3 = scratch("det_r3");
  auto rnd = [](const std::string& out, const char* seed) {
    return make_config(ExperimentKind::Exp1, {{"run.sweep", "36"}, {"run.output_dir", out}, {"exp1.sampling", "random"}, {"exp1.eval_resolution", "16"}, {"run.seed", seed}});
  };
  run_exp1(rnd(r1, "5"));
  run_exp1(rnd(r2, "5"));
  run_exp1(rnd(r3, "6"));
  CHECK(slurp(fs::path(r1) / "exp1_rates.csv") == slurp(fs::path(r2) / "exp1_rates.csv"));
  CHECK(slurp(fs::path(r1) / "exp1_rates.csv") != slurp(fs::path(r3) / "exp1_rates.csv"));
}

#include "ovk/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <random>

#include "ovk/csv.hpp"
#include "ovk/errors.hpp"

namespace ovk {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  const auto path = fs::path(cfg.output_dir) / name;
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  return f;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_manifest(const ExperimentConfig& cfg, Clock::time_point start, const std::vector<std::string>& notes = {}) {
  auto f = open_out(cfg, "manifest.txt");
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  f << "ovk " << OVK_VERSION << "\n";
  f << "experiment " << to_string(cfg.experiment) << "\n";
  f << "finished " << stamp << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", secs);
  f << "wall_clock_seconds " << buf << "\n";
  f << "\n[effective]\n";
  f << "kernel.spatial = " << to_string(cfg.spatial_family) << " " << fmt(cfg.spatial_sigma) << "\n";
  f << "kernel.temporal = " << to_string(cfg.temporal_family) << " " << fmt(cfg.temporal_sigma) << "\n";
  f << "kernel.alpha = " << fmt(cfg.alpha) << "\n";
  f << "kernel.output_dim = " << cfg.output_dim << "\n";
  f << "run.sweep =";
  for (std::size_t i = 0; i < cfg.sweep.size(); ++i) f << (i ? ", " : " ") << cfg.sweep[i];
  f << "\n";
  f << "run.seed = " << cfg.seed << "\n";
  f << "run.parallel = " << (cfg.parallel ? "true" : "false") << "\n";
  f << "run.pinv_rtol = " << fmt(cfg.pinv_rtol) << "\n";
  if (cfg.experiment == ExperimentKind::Exp2 || cfg.experiment == ExperimentKind::Exp3 ||
      cfg.experiment == ExperimentKind::Forecast) {
    auto [lo, hi] = cfg.state_interval();
    f << "dynamics.system = " << cfg.system << "\n";
    f << "dynamics.dt = " << fmt(cfg.dt) << "\n";
    f << "dynamics.domain = " << fmt(lo) << ", " << fmt(hi) << "\n";
  }
  for (const auto& n : notes) f << n << "\n";
  f << "\n[config]\n";
  for (const auto& [k, v] : cfg.raw) f << k << " = " << v << "\n";
}

// Runs fn(i) for i < n, concurrently when asked; results keep input order.
template <typename Fn>
auto map_sweep(std::size_t n, bool parallel, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  std::vector<decltype(fn(std::size_t{}))> out;
  out.reserve(n);
  if (!parallel) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<decltype(fn(std::size_t{}))>> jobs;
  for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, fn, i));
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

PointSet exp1_training(const ExperimentConfig& cfg, int n, int n_space, int n_time) {
  const Box box = Box::square(0.0, 1.0, 2);
  if (cfg.sampling == "grid") return grid_points(box, {n_space, n_time}, TimeAxis::Last);
  // uniform random x, grid t
  std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(n));
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd c(n, 2);
  for (int i = 0; i < n_space; ++i) {
    const double x = U(rng);
    for (int j = 0; j < n_time; ++j) {
      c(i * n_time + j, 0) = x;
      c(i * n_time + j, 1) = double(j) / double(n_time - 1);
    }
  }
  return PointSet(std::move(c), box, TimeAxis::Last, SamplingKind::UniformRandom, cfg.seed);
}

SpectralDecomposition checked_decompose(const EmpiricalKoopman& op, int max_modes) {
  auto dec = decompose(op, max_modes);
  if (dec.size() == 0) throw NumericalError("no eigenpair passed the residual check");
  return dec;
}

EmpiricalKoopman koopman_at(const ExperimentConfig& cfg, const FlowMap& flow, int n) {
  const auto data = generate_pairs(flow, config_states(cfg, n), cfg.dt, cfg.output_dim);
  return build_koopman(cfg.kernel(), data, cfg.pinv_rtol);
}

void write_spectrum_rows(std::ostream& os, int n, const SpectralDecomposition& dec, int top) {
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(top, dec.size()); ++k) {
    const auto l = dec.eigenvalues(k);
    csv::write_row(os, {double(n), double(k + 1), l.real(), l.imag(), std::abs(l), dec.residuals(k)});
  }
}

std::vector<Observable> trig_probes() {
  std::vector<Observable> out;
  constexpr double pi = std::numbers::pi;
  for (int m = 1; m <= 3; ++m) {
    out.push_back([m](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::sin(2 * pi * m * x(0))); });
    if (m < 3)
      out.push_back([m](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::cos(2 * pi * m * x(0))); });
  }
  return out;
}

// g(Phi^s(x)) with trajectories cached per state.
class EvolvedTruth {
 public:
  EvolvedTruth(FlowMap flow, Observable g, double dt) : flow_(std::move(flow)), g_(std::move(g)), dt_(dt) {}
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, int steps) {
    auto& traj = cache_[std::vector<double>(x.data(), x.data() + x.size())];
    if (traj.empty()) traj.push_back(x);
    while (static_cast<int>(traj.size()) <= steps) {
      const double t0 = dt_ * double(traj.size() - 1);
      traj.push_back(flow_(traj.back(), t0, dt_));
    }
    return g_(traj[steps]);
  }

 private:
  FlowMap flow_;
  Observable g_;
  double dt_;
  std::map<std::vector<double>, std::vector<Eigen::VectorXd>> cache_;
};

PointSet eval_states(const ExperimentConfig& cfg, int count) {
  auto [lo, hi] = cfg.state_interval();
  return grid_points(Box::interval(lo, hi), {count});
}

}  // namespace

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& rows) {
  if (rows.size() < 3) throw InputError("fit_slope: need at least 3 rows");
  const double n = double(rows.size());
  double mx = 0, my = 0;
  for (auto [N, e] : rows) {
    if (!(N > 0)) throw InputError("fit_slope: N must be positive");
    if (!(e > 0) || !std::isfinite(e)) throw InputError("fit_slope: errors must be positive");
    mx += std::log(N);
    my += std::log(e);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (auto [N, e] : rows) {
    const double dx = std::log(N) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (!(sxx > 0)) throw InputError("fit_slope: N values must not all coincide");
  SlopeFit out;
  out.slope = sxy / sxx;
  double ssr = 0;
  for (auto [N, e] : rows) {
    const double r = std::log(e) - (my + out.slope * (std::log(N) - mx));
    ssr += r * r;
  }
  out.stderr_ = std::sqrt(ssr / (n - 2) / sxx);
  return out;
}

std::pair<int, int> grid_shape(int n) {
  if (n < 4) throw InputError("grid_shape: n must be >= 4");
  int s = static_cast<int>(std::sqrt(double(n)));
  while (s > 1 && n % s != 0) --s;
  if (s < 2) throw InputError("grid_shape: " + std::to_string(n) + " has no factorization with both sides >= 2");
  return {s, n / s};
}

FlowMap config_flow(const ExperimentConfig& cfg) { return FlowMap::builtin(cfg.system); }

PointSet config_states(const ExperimentConfig& cfg, int n) { return eval_states(cfg, n); }

RateReport run_exp1(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Exp1) throw InputError("run_exp1: config is not exp1");
  cfg.validate();
  const auto start = Clock::now();
  const auto field = builtin_observable("exp1_field");
  const OvKernel K = cfg.kernel();
  if (K.output_dim() != field.output_dim) throw InputError("exp1: kernel.output_dim must be 2");
  const PointSet eval = grid_points(Box::square(0.0, 1.0, 2), {cfg.eval_resolution, cfg.eval_resolution}, TimeAxis::Last);

  auto run_one = [&](std::size_t idx) {
    const int n = cfg.sweep[idx];
    auto [ns, nt] = grid_shape(n);
    TrainingSet data;
    data.inputs = exp1_training(cfg, n, ns, nt);
    data.targets.resize(n, 2);
    for (int i = 0; i < n; ++i) data.targets.row(i) = field.value(data.inputs.x(i).transpose(), data.inputs.t(i)).transpose();
    const auto model = fit(K, data, cfg.lambda.at(n));
    const auto err = empirical_errors(model, field.value, field.dt, eval);
    return RateRow{n, ns, nt, fill_distance(data.inputs, cfg.probe_resolution), err.l2_field, err.l2_dt};
  };

  RateReport report;
  auto f = open_out(cfg, "exp1_rates.csv");
  csv::write_header(f, {"n", "n_space", "n_time", "h_fill", "l2_field", "l2_dt"});
  auto emit = [&](const RateRow& r) {
    csv::write_row(f, {double(r.n), double(r.n_space), double(r.n_time), r.h_fill, r.l2_field, r.l2_dt});
    f.flush();
    report.rows.push_back(r);
  };
  if (cfg.parallel) {
    for (const auto& r : map_sweep(cfg.sweep.size(), true, run_one)) emit(r);
  } else {
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) emit(run_one(i));
  }

  if (report.rows.size() >= 3) {
    std::vector<std::pair<double, double>> a, b;
    for (const auto& r : report.rows) {
      a.emplace_back(r.n, r.l2_field);
      b.emplace_back(r.n, r.l2_dt);
    }
    report.field_slope = fit_slope(a);
    report.dt_slope = fit_slope(b);
    auto s = open_out(cfg, "exp1_slopes.csv");
    csv::write_header(s, {"series", "slope", "stderr"});
    s << "l2_field," << fmt(report.field_slope->slope) << "," << fmt(report.field_slope->stderr_) << "\n";
    s << "l2_dt," << fmt(report.dt_slope->slope) << "," << fmt(report.dt_slope->stderr_) << "\n";
  }
  write_manifest(cfg, start);
  return report;
}

Exp2Result run_exp2(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Exp2) throw InputError("run_exp2: config is not exp2");
  cfg.validate();
  const auto start = Clock::now();
  const FlowMap flow = config_flow(cfg);

  Exp2Result res;
  res.sizes = cfg.sweep;
  res.sizes.push_back(2 * cfg.sweep.back());
  const auto ops = map_sweep(res.sizes.size(), cfg.parallel, [&](std::size_t i) { return koopman_at(cfg, flow, res.sizes[i]); });

  auto fe = open_out(cfg, "exp2_eigenvalues.csv");
  csv::write_header(fe, {"n", "k", "re", "im", "abs", "residual"});
  for (std::size_t i = 0; i < ops.size(); ++i) {
    res.spectra.push_back(checked_decompose(ops[i], cfg.max_modes));
    write_spectrum_rows(fe, res.sizes[i], res.spectra.back(), cfg.top_modes);
    write_eigenvalues_csv((fs::path(cfg.output_dir) / ("exp2_eigenvalues_N" + std::to_string(res.sizes[i]) + ".csv")).string(),
                          res.spectra.back());
  }

  const auto probes = trig_probes();
  const PointSet probe_grid = eval_states(cfg, 512);
  // gap and eigenvalue change between N and the next size
  for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
    res.gaps.push_back(operator_gap(ops[i], ops[i + 1], probes, probe_grid));
    std::vector<double> ch;
    const auto& a = res.spectra[i].eigenvalues;
    const auto& b = res.spectra[i + 1].eigenvalues;
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>({cfg.top_modes, a.size(), b.size()}); ++k)
      ch.push_back(std::abs(a(k) - b(k)));
    res.eigen_changes.push_back(std::move(ch));
  }

  auto fc = open_out(cfg, "exp2_convergence.csv");
  std::vector<std::string> hdr = {"n", "n_next", "gap"};
  for (int k = 1; k <= cfg.top_modes; ++k) hdr.push_back("dlambda_" + std::to_string(k));
  csv::write_header(fc, hdr);
  for (std::size_t i = 0; i < res.gaps.size(); ++i) {
    std::vector<double> row = {double(res.sizes[i]), double(res.sizes[i + 1]), res.gaps[i]};
    for (int k = 0; k < cfg.top_modes; ++k)
      row.push_back(k < int(res.eigen_changes[i].size()) ? res.eigen_changes[i][k] : std::nan(""));
    csv::write_row(fc, row);
  }
  write_manifest(cfg, start, {"probe_grid = 512"});
  return res;
}

Exp3Result run_exp3(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Exp3) throw InputError("run_exp3: config is not exp3");
  cfg.validate();
  const auto start = Clock::now();
  const FlowMap flow = config_flow(cfg);
  const int n = cfg.sweep.back();
  const auto op = koopman_at(cfg, flow, n);

  Exp3Result res;
  res.spectrum = checked_decompose(op, cfg.max_modes);
  const int modes = static_cast<int>(res.spectrum.size());
  if (cfg.rank_list.empty()) {
    for (int r = 1; r <= modes; ++r) res.ranks.push_back(r);
  } else {
    res.ranks = cfg.rank_list;
    if (res.ranks.back() > modes)
      throw NumericalError("rank " + std::to_string(res.ranks.back()) + " exceeds the " + std::to_string(modes) +
                           " retained modes");
  }

  const auto obs = builtin_observable(cfg.observable);
  if (obs.input_dim != 1) throw InputError("exp3: observable must take a scalar state");
  const Observable g = obs.at_time(0.0);
  const PointSet eval = eval_states(cfg, cfg.eval_resolution);
  EvolvedTruth truth(flow, g, cfg.dt);
  EvolvedObservable truth_fn = [&](const Eigen::VectorXd& x, int s) { return truth(x, s); };

  const double w = eval.domain().volume() / double(eval.size());
  for (int s = 0; s <= cfg.horizon; ++s) {
    double sum = 0;
    for (Eigen::Index i = 0; i < eval.size(); ++i) sum += truth(eval.x(i).transpose(), s).squaredNorm();
    res.truth_rms.push_back(std::sqrt(w * sum));
  }

  res.errors.resize(cfg.horizon + 1, static_cast<Eigen::Index>(res.ranks.size()));
  for (std::size_t j = 0; j < res.ranks.size(); ++j) {
    const auto fm = make_forecast_model(res.spectrum, op, g, res.ranks[j], cfg.dt);
    const auto curve = forecast_error_curve(fm, truth_fn, eval, cfg.horizon);
    for (int s = 0; s <= cfg.horizon; ++s) res.errors(s, static_cast<Eigen::Index>(j)) = curve[s];
  }

  // residual of the full-rank least-squares fit, straight from the eigenfunction values
  {
    const auto P = project_observable(res.spectrum, op, g, modes);
    const auto E = eigenfunction_values(res.spectrum, op, eval, modes);
    const Eigen::MatrixXd fit = (E * P).real();
    const int d = op.block_dim();
    double sum = 0;
    for (Eigen::Index i = 0; i < eval.size(); ++i) {
      const Eigen::VectorXd gi = g(eval.x(i).transpose());
      for (Eigen::Index c = 0; c < gi.size(); ++c) {
        const double diff = gi(c) - fit(i * d + c % d, c / d);
        sum += diff * diff;
      }
    }
    res.projection_residual = std::sqrt(w * sum);
  }

  auto fe = open_out(cfg, "exp3_errors.csv");
  std::vector<std::string> hdr = {"steps", "t", "truth_rms"};
  for (int r : res.ranks) hdr.push_back("err_r" + std::to_string(r));
  csv::write_header(fe, hdr);
  for (int s = 0; s <= cfg.horizon; ++s) {
    std::vector<double> row = {double(s), s * cfg.dt, res.truth_rms[s]};
    for (Eigen::Index j = 0; j < res.errors.cols(); ++j) row.push_back(res.errors(s, j));
    csv::write_row(fe, row);
  }
  write_eigenvalues_csv((fs::path(cfg.output_dir) / "exp3_eigenvalues.csv").string(), res.spectrum);
  write_manifest(cfg, start,
                 {"n = " + std::to_string(n), "observable = " + cfg.observable,
                  "eval_points = " + std::to_string(cfg.eval_resolution),
                  "projection_residual = " + fmt(res.projection_residual)});
  return res;
}

RepresenterModel run_fit(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Fit) throw InputError("run_fit: config is not fit");
  cfg.validate();
  const auto start = Clock::now();
  const TrainingSet data = read_training_csv(cfg.train_path);
  ExperimentConfig c = cfg;
  if (!cfg.raw.count("kernel.output_dim")) c.output_dim = data.output_dim();
  const auto model = fit(c.kernel(), data, c.lambda.at(data.inputs.size()));

  fs::create_directories(cfg.output_dir);
  save_model((fs::path(cfg.output_dir) / "model.ovk").string(), model);

  PointSet probes = data.inputs;
  if (!cfg.eval_path.empty()) {
    const auto table = csv::read(cfg.eval_path);
    const int cols = data.inputs.dim();
    if (static_cast<int>(table.header.size()) < cols)
      throw InputError("fit.eval: expected at least " + std::to_string(cols) + " columns (x..., t)");
    Eigen::MatrixXd pc(static_cast<Eigen::Index>(table.rows.size()), cols);
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      for (int j = 0; j < cols; ++j) pc(static_cast<Eigen::Index>(i), j) = table.rows[i][j];
    Box box(pc.colwise().minCoeff().transpose(), pc.colwise().maxCoeff().transpose());
    probes = PointSet(std::move(pc), box, TimeAxis::Last);
  }
  const auto y = predict_batch(model, probes);
  const auto dy = predict_time_derivative_batch(model, probes);

  auto f = open_out(cfg, "predictions.csv");
  std::vector<std::string> hdr;
  for (int j = 0; j < probes.spatial_dim(); ++j) hdr.push_back("x" + std::to_string(j + 1));
  hdr.push_back("t");
  for (int a = 0; a < model.output_dim(); ++a) hdr.push_back("y" + std::to_string(a + 1));
  for (int a = 0; a < model.output_dim(); ++a) hdr.push_back("dy" + std::to_string(a + 1) + "_dt");
  csv::write_header(f, hdr);
  for (Eigen::Index i = 0; i < probes.size(); ++i) {
    std::vector<double> row;
    for (int j = 0; j < probes.dim(); ++j) row.push_back(probes.coords()(i, j));
    for (int a = 0; a < model.output_dim(); ++a) row.push_back(y(i, a));
    for (int a = 0; a < model.output_dim(); ++a) row.push_back(dy(i, a));
    csv::write_row(f, row);
  }

  auto s = open_out(cfg, "fit_summary.csv");
  csv::write_header(s, {"n", "lambda", "rkhs_norm_sq", "jitter", "relative_residual"});
  csv::write_row(s, {double(data.inputs.size()), model.lambda, model.rkhs_norm_sq, model.solve_info.jitter,
                     model.solve_info.relative_residual});
  write_manifest(c, start, {"train = " + cfg.train_path});
  return model;
}

ForecastModel run_forecast(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Forecast) throw InputError("run_forecast: config is not forecast");
  cfg.validate();
  const auto start = Clock::now();
  const FlowMap flow = config_flow(cfg);
  const auto op = koopman_at(cfg, flow, cfg.sweep.back());
  const auto dec = checked_decompose(op, cfg.max_modes);
  const Eigen::Index rank = cfg.forecast_rank == 0 ? dec.size() : cfg.forecast_rank;
  if (rank > dec.size())
    throw NumericalError("forecast.rank " + std::to_string(rank) + " exceeds the " + std::to_string(dec.size()) +
                         " retained modes");
  const auto obs = builtin_observable(cfg.observable);
  const auto fm = make_forecast_model(dec, op, obs.at_time(0.0), rank, cfg.dt);

  fs::create_directories(cfg.output_dir);
  write_eigenvalues_csv((fs::path(cfg.output_dir) / "eigenvalues.csv").string(), dec);
  const PointSet states = eval_states(cfg, cfg.forecast_points);
  auto f = open_out(cfg, "forecast.csv");
  std::vector<std::string> hdr = {"steps", "t", "x"};
  const int m = obs.output_dim;
  for (int a = 0; a < m; ++a) hdr.push_back("f" + std::to_string(a + 1));
  csv::write_header(f, hdr);
  for (int s = 0; s <= cfg.forecast_steps; ++s) {
    const auto F = forecast_batch(fm, states, s);
    for (Eigen::Index i = 0; i < states.size(); ++i) {
      std::vector<double> row = {double(s), s * cfg.dt, states.x(i)(0)};
      for (int a = 0; a < m; ++a) row.push_back(F(i, a));
      csv::write_row(f, row);
    }
  }
  write_manifest(cfg, start, {"rank = " + std::to_string(rank), "observable = " + cfg.observable});
  return fm;
}

}  // namespace ovk

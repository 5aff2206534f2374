#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ovk/kernel.hpp"
#include "ovk/koopman.hpp"
#include "ovk/regression.hpp"

namespace ovk {

enum class ExperimentKind { Exp1, Exp2, Exp3, Fit, Forecast };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Flat "section.key" -> value map read from an INI-style file.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_ini(std::istream& is);
ConfigMap read_ini(const std::string& path);

/// Settings of one benchmark run. Defaults depend on the experiment kind;
/// see defaults_for().
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Exp1;

  KernelFamily spatial_family = KernelFamily::Gaussian;
  double spatial_sigma = 0.2;
  KernelFamily temporal_family = KernelFamily::Gaussian;
  double temporal_sigma = 0.2;
  double alpha = 0.0;
  int output_dim = 1;

  std::vector<int> sweep;
  LambdaSchedule lambda;
  double pinv_rtol = 1e-10;
  std::uint64_t seed = 0;
  bool parallel = false;
  std::string output_dir = "ovk_out";

  // exp1
  std::string sampling = "grid";  // grid | random
  int eval_resolution = 64;
  int probe_resolution = 256;

  // koopman experiments
  std::string system = "sine2pi";
  double dt = 0.1;
  std::optional<std::pair<double, double>> domain;  // default depends on system
  double state_offset = 1e-3;
  int max_modes = 200;
  int top_modes = 5;
  std::string observable = "exp2_observable";
  std::vector<int> rank_list;
  int horizon = 20;

  // fit / forecast
  std::string train_path;
  std::string eval_path;
  int forecast_rank = 0;  // 0: all modes
  int forecast_steps = 10;
  int forecast_points = 101;

  ConfigMap raw;  // echoed into the manifest

  OvKernel kernel() const;
  /// Sample-state interval for the dynamics experiments.
  std::pair<double, double> state_interval() const;
  void validate() const;
};

ExperimentConfig defaults_for(ExperimentKind kind);
/// Applies `values` on top of defaults_for(kind); unknown keys are an input error.
ExperimentConfig make_config(ExperimentKind kind, const ConfigMap& values);

struct SlopeFit {
  double slope = 0;
  double stderr_ = 0;
};

/// Ordinary least squares of log(error) on log(N). Needs >= 3 rows, errors > 0.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& rows);

struct RateRow {
  int n = 0;
  int n_space = 0;
  int n_time = 0;
  double h_fill = 0;
  double l2_field = 0;
  double l2_dt = 0;
};

struct RateReport {
  std::vector<RateRow> rows;
  std::optional<SlopeFit> field_slope;
  std::optional<SlopeFit> dt_slope;
};

/// n_space x n_time factorization of n, as square as possible, with the extra
/// factor on the time axis (n_time >= n_space).
std::pair<int, int> grid_shape(int n);

struct Exp2Result {
  std::vector<int> sizes;                           // sweep followed by 2 * last
  std::vector<SpectralDecomposition> spectra;       // one per size
  std::vector<double> gaps;                         // gap(N, 2N) per sweep entry
  std::vector<std::vector<double>> eigen_changes;   // |lambda_k(N) - lambda_k(2N)|, k < top_modes
};

struct Exp3Result {
  std::vector<int> ranks;
  Eigen::MatrixXd errors;  // (horizon + 1) x ranks
  double projection_residual = 0;  // full-rank fit residual at step 0 on the evaluation grid
  std::vector<double> truth_rms;   // per step
  SpectralDecomposition spectrum;
};

/// Each runner writes its CSV tables and a manifest into cfg.output_dir.
RateReport run_exp1(const ExperimentConfig& cfg);
Exp2Result run_exp2(const ExperimentConfig& cfg);
Exp3Result run_exp3(const ExperimentConfig& cfg);
RepresenterModel run_fit(const ExperimentConfig& cfg);
ForecastModel run_forecast(const ExperimentConfig& cfg);

/// The benchmark flow and observable named in the config.
FlowMap config_flow(const ExperimentConfig& cfg);
PointSet config_states(const ExperimentConfig& cfg, int n);

}  // namespace ovk

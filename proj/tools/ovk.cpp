// ovk: runs the benchmark experiments from an INI config.
//
//   ovk exp1|exp2|exp3|fit|forecast --config <path> [--out <dir>] [--seed <int>] [--parallel]
//
// exit status: 0 ok, 1 bad input or unsupported setting, 2 numerical failure

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ovk/errors.hpp"
#include "ovk/experiments.hpp"

namespace {

void summarize(const ovk::RateReport& r) {
  for (const auto& row : r.rows)
    std::printf("N=%d  h_fill=%.4g  l2_field=%.6g  l2_dt=%.6g\n", row.n, row.h_fill, row.l2_field, row.l2_dt);
  if (r.field_slope)
    std::printf("slope l2_field %.4f (se %.3g), l2_dt %.4f (se %.3g)\n", r.field_slope->slope, r.field_slope->stderr_,
                r.dt_slope->slope, r.dt_slope->stderr_);
}

void summarize(const ovk::Exp2Result& r) {
  for (std::size_t i = 0; i < r.gaps.size(); ++i) {
    std::printf("N=%d->%d  gap=%.4g", r.sizes[i], r.sizes[i + 1], r.gaps[i]);
    for (double c : r.eigen_changes[i]) std::printf("  %.3g", c);
    std::printf("\n");
  }
}

void summarize(const ovk::Exp3Result& r) {
  std::printf("ranks %zu, horizon %lld, projection residual %.4g\n", r.ranks.size(),
              static_cast<long long>(r.errors.rows()) - 1, r.projection_residual);
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(5, r.spectrum.size()); ++k)
    std::printf("lambda_%lld = %.6f %+.6fi\n", static_cast<long long>(k + 1), r.spectrum.eigenvalues(k).real(),
                r.spectrum.eigenvalues(k).imag());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-valued kernel regression and kernel Koopman benchmarks"};
  app.set_version_flag("--version", std::string(OVK_VERSION));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::optional<long long> seed;
  bool parallel = false;
  for (const char* name : {"exp1", "exp2", "exp3", "fit", "forecast"}) {
    auto* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides run.output_dir)");
    sub->add_option("--seed", seed, "seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--parallel", parallel, "run sweep entries concurrently");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto kind = ovk::parse_experiment_kind(app.get_subcommands().front()->get_name());
    auto values = ovk::read_ini(config_path);
    // data paths in the config are relative to the config file
    const auto base = std::filesystem::path(config_path).parent_path();
    for (const char* key : {"fit.train", "fit.eval"}) {
      auto it = values.find(key);
      if (it != values.end() && std::filesystem::path(it->second).is_relative()) it->second = (base / it->second).string();
    }
    if (!out_dir.empty()) values["run.output_dir"] = out_dir;
    if (seed) values["run.seed"] = std::to_string(*seed);
    if (parallel) values["run.parallel"] = "true";
    const auto cfg = ovk::make_config(kind, values);

    switch (kind) {
      case ovk::ExperimentKind::Exp1: summarize(ovk::run_exp1(cfg)); break;
      case ovk::ExperimentKind::Exp2: summarize(ovk::run_exp2(cfg)); break;
      case ovk::ExperimentKind::Exp3: summarize(ovk::run_exp3(cfg)); break;
      case ovk::ExperimentKind::Fit: {
        const auto m = ovk::run_fit(cfg);
        std::printf("fitted %lld centers, lambda %.3g, |f|^2 %.6g\n", static_cast<long long>(m.centers.size()), m.lambda,
                    m.rkhs_norm_sq);
        break;
      }
      case ovk::ExperimentKind::Forecast: {
        const auto fm = ovk::run_forecast(cfg);
        std::printf("forecast rank %lld\n", static_cast<long long>(fm.rank));
        break;
      }
    }
    std::printf("results in %s\n", cfg.output_dir.c_str());
    return 0;
  } catch (const ovk::NumericalError& e) {
    std::fprintf(stderr, "ovk: numerical failure: %s\n", e.what());
    return 2;
  } catch (const ovk::InputError& e) {
    std::fprintf(stderr, "ovk: %s\n", e.what());
    return 1;
  } catch (const ovk::UnsupportedError& e) {
    std::fprintf(stderr, "ovk: unsupported: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ovk: %s\n", e.what());
    return 1;
  }
}

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "ovk/errors.hpp"
#include "ovk/experiments.hpp"

namespace ovk {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("config " + key + ": not a number: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InputError("config " + key + ": not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw InputError("config " + key + ": not a boolean: '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(to_int(key, item)));
  }
  return out;
}

bool strictly_increasing(const std::vector<int>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](int a, int b) { return a >= b; }) == v.end();
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  auto l = lower(name);
  if (l == "exp1") return ExperimentKind::Exp1;
  if (l == "exp2") return ExperimentKind::Exp2;
  if (l == "exp3") return ExperimentKind::Exp3;
  if (l == "fit") return ExperimentKind::Fit;
  if (l == "forecast") return ExperimentKind::Forecast;
  throw InputError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Exp1: return "exp1";
    case ExperimentKind::Exp2: return "exp2";
    case ExperimentKind::Exp3: return "exp3";
    case ExperimentKind::Fit: return "fit";
    case ExperimentKind::Forecast: return "forecast";
  }
  return "?";
}

// [section] headers prefix the keys; '#' and ';' start comment lines.
ConfigMap parse_ini(std::istream& is) {
  ConfigMap out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError("config line " + std::to_string(lineno) + ": bad section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    auto key = lower(trim(line.substr(0, eq)));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key");
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

ConfigMap read_ini(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config '" + path + "'");
  return parse_ini(f);
}

OvKernel ExperimentConfig::kernel() const {
  return OvKernel(Kernel(spatial_family, spatial_sigma), Kernel(temporal_family, temporal_sigma), alpha, output_dim);
}

std::pair<double, double> ExperimentConfig::state_interval() const {
  if (domain) return *domain;
  if (system == "sine2pi") return {state_offset, 1.0 - state_offset};
  if (system == "linear") return {-1.0, 1.0};
  return {0.0, 1.0};
}

void ExperimentConfig::validate() const {
  if (sweep.empty()) throw InputError("run.sweep is empty");
  if (!strictly_increasing(sweep)) throw InputError("run.sweep must be strictly increasing");
  if (sweep.front() < 4) throw InputError("run.sweep entries must be >= 4");
  if (!rank_list.empty()) {
    if (!strictly_increasing(rank_list)) throw InputError("koopman.rank_list must be strictly increasing");
    if (rank_list.front() < 1) throw InputError("koopman.rank_list entries must be positive");
  }
  if (!(spatial_sigma > 0) || !(temporal_sigma > 0)) throw InputError("kernel sigma must be positive");
  if (alpha < 0) throw InputError("kernel.alpha must be nonnegative");
  if (output_dim < 1) throw InputError("kernel.output_dim must be >= 1");
  if (!(pinv_rtol > 0) || pinv_rtol >= 1) throw InputError("run.pinv_rtol must lie in (0, 1)");
  if (sampling != "grid" && sampling != "random") throw InputError("exp1.sampling must be grid or random");
  if (eval_resolution < 2) throw InputError("exp1.eval_resolution must be >= 2");
  if (probe_resolution < 10) throw InputError("exp1.probe_resolution must be >= 10");
  if (system != "sine2pi" && system != "linear" && system != "identity")
    throw InputError("dynamics.system must be sine2pi, linear or identity");
  if (!(dt > 0)) throw InputError("dynamics.dt must be positive");
  auto [lo, hi] = state_interval();
  if (!(lo < hi)) throw InputError("dynamics.domain must have lower < upper");
  if (state_offset < 0 || state_offset >= 0.5) throw InputError("dynamics.state_offset must lie in [0, 0.5)");
  if (max_modes < 1 || top_modes < 1) throw InputError("koopman mode counts must be positive");
  if (horizon < 0) throw InputError("koopman.horizon must be nonnegative");
  if (forecast_rank < 0 || forecast_steps < 0 || forecast_points < 1) throw InputError("bad forecast settings");
  if (experiment == ExperimentKind::Fit && train_path.empty()) throw InputError("fit.train is required");
}

ExperimentConfig defaults_for(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::Exp1:
      c.sweep = {64, 128, 256, 512};
      c.spatial_sigma = c.temporal_sigma = 0.2;
      c.alpha = 0.1;
      c.output_dim = 2;
      c.lambda = LambdaSchedule::parse("1e-10");
      c.output_dir = "ovk_exp1";
      break;
    case ExperimentKind::Exp2:
      c.sweep = {100, 200, 400};
      c.spatial_sigma = c.temporal_sigma = 0.3;
      c.output_dir = "ovk_exp2";
      break;
    case ExperimentKind::Exp3:
      c.sweep = {200};
      c.spatial_sigma = c.temporal_sigma = 0.3;
      c.domain = std::pair{0.25, 0.75};
      c.horizon = 20;
      c.eval_resolution = 257;
      c.output_dir = "ovk_exp3";
      break;
    case ExperimentKind::Fit:
      c.sweep = {4};
      c.lambda = LambdaSchedule::parse("default");
      c.output_dir = "ovk_fit";
      break;
    case ExperimentKind::Forecast:
      c.sweep = {200};
      c.spatial_sigma = c.temporal_sigma = 0.3;
      c.domain = std::pair{0.25, 0.75};
      c.observable = "coordinate";
      c.output_dir = "ovk_forecast";
      break;
  }
  return c;
}

ExperimentConfig make_config(ExperimentKind kind, const ConfigMap& values) {
  ExperimentConfig c = defaults_for(kind);
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"experiment", [&](auto& k, auto& v) {
         if (parse_experiment_kind(v) != kind) throw InputError("config " + k + " = " + v + " does not match the subcommand");
       }},
      {"kernel.spatial.family", [&](auto&, auto& v) { c.spatial_family = parse_kernel_family(v); }},
      {"kernel.spatial.sigma", [&](auto& k, auto& v) { c.spatial_sigma = to_double(k, v); }},
      {"kernel.temporal.family", [&](auto&, auto& v) { c.temporal_family = parse_kernel_family(v); }},
      {"kernel.temporal.sigma", [&](auto& k, auto& v) { c.temporal_sigma = to_double(k, v); }},
      {"kernel.alpha", [&](auto& k, auto& v) { c.alpha = to_double(k, v); }},
      {"kernel.output_dim", [&](auto& k, auto& v) { c.output_dim = static_cast<int>(to_int(k, v)); }},
      {"run.sweep", [&](auto& k, auto& v) { c.sweep = to_int_list(k, v); }},
      {"run.lambda", [&](auto&, auto& v) { c.lambda = LambdaSchedule::parse(v); }},
      {"run.pinv_rtol", [&](auto& k, auto& v) { c.pinv_rtol = to_double(k, v); }},
      {"run.seed", [&](auto& k, auto& v) {
         auto s = to_int(k, v);
         if (s < 0) throw InputError("run.seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"run.parallel", [&](auto& k, auto& v) { c.parallel = to_bool(k, v); }},
      {"run.output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"exp1.sampling", [&](auto&, auto& v) { c.sampling = lower(v); }},
      {"exp1.eval_resolution", [&](auto& k, auto& v) { c.eval_resolution = static_cast<int>(to_int(k, v)); }},
      {"exp1.probe_resolution", [&](auto& k, auto& v) { c.probe_resolution = static_cast<int>(to_int(k, v)); }},
      {"dynamics.system", [&](auto&, auto& v) { c.system = lower(v); }},
      {"dynamics.dt", [&](auto& k, auto& v) { c.dt = to_double(k, v); }},
      {"dynamics.domain", [&](auto& k, auto& v) {
         if (lower(v) == "auto") {
           c.domain.reset();
           return;
         }
         auto comma = v.find(',');
         if (comma == std::string::npos) throw InputError("config " + k + ": expected lower, upper");
         c.domain = std::pair{to_double(k, trim(v.substr(0, comma))), to_double(k, trim(v.substr(comma + 1)))};
       }},
      {"dynamics.state_offset", [&](auto& k, auto& v) { c.state_offset = to_double(k, v); }},
      {"koopman.max_modes", [&](auto& k, auto& v) { c.max_modes = static_cast<int>(to_int(k, v)); }},
      {"koopman.top_modes", [&](auto& k, auto& v) { c.top_modes = static_cast<int>(to_int(k, v)); }},
      {"koopman.observable", [&](auto&, auto& v) { c.observable = v; }},
      {"koopman.rank_list", [&](auto& k, auto& v) { c.rank_list = to_int_list(k, v); }},
      {"koopman.eval_points", [&](auto& k, auto& v) { c.eval_resolution = static_cast<int>(to_int(k, v)); }},
      {"koopman.horizon", [&](auto& k, auto& v) { c.horizon = static_cast<int>(to_int(k, v)); }},
      {"fit.train", [&](auto&, auto& v) { c.train_path = v; }},
      {"fit.eval", [&](auto&, auto& v) { c.eval_path = v; }},
      {"forecast.rank", [&](auto& k, auto& v) { c.forecast_rank = static_cast<int>(to_int(k, v)); }},
      {"forecast.steps", [&](auto& k, auto& v) { c.forecast_steps = static_cast<int>(to_int(k, v)); }},
      {"forecast.points", [&](auto& k, auto& v) { c.forecast_points = static_cast<int>(to_int(k, v)); }},
  };
  for (const auto& [key, value] : values) {
    auto it = setters.find(key);
    if (it == setters.end()) throw InputError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  c.raw = values;
  c.validate();
  return c;
}

}  // namespace ovk

// Copyright 2026 the repro-dp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REPRODP_EXPERIMENT_HPP_
#define REPRODP_EXPERIMENT_HPP_

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reprodp/baselines.hpp"
#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"
#include "reprodp/inference.hpp"
#include "reprodp/models.hpp"
#include "reprodp/optimize.hpp"

namespace reprodp {

using nlohmann::json;

enum class Method { kRepro, kBootstrapPercentile, kBootstrapT, kInversion };
enum class Task { kCi, kPValue, kGrid };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kRepro: return "repro";
    case Method::kBootstrapPercentile: return "bootstrap_percentile";
    case Method::kBootstrapT: return "bootstrap_t";
    case Method::kInversion: return "inversion";
  }
  return "?";
}

struct ExperimentConfig {
  std::string model;
  json params;  // forwarded to the model factory
  Method method = Method::kRepro;
  Task task = Task::kCi;
  std::string statistic = "default";
  std::string orientation = "two_sided";  // for statistic = "scalar"
  double alpha = 0.05;
  int R = 200;
  int B = 200;
  int replicates = 1;
  std::uint64_t master_seed = 1;
  std::vector<double> true_theta;
  std::vector<double> observed;  // explicit summary; empty = simulate
  int interest = -1;             // -1 = model default coordinate
  double tol = 1e-3;
  int grid_resolution = 20;
  std::map<std::string, double> null_fixed;  // p-value: pinned coordinates
  bool early_stop = true;
  bool alternative = false;  // mann-whitney: Beta(2,5) second group
  bool restrict_n = true;    // unknown-n preliminary interval
  double restrict_coverage = 0.9999;
  std::map<std::string, std::pair<double, double>> box_override;
  OptimizerSpec opt;
  bool opt_overridden = false;
  std::string out;
  int jobs = 1;
};

namespace exp_detail {

inline double json_number(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("config: '" + key + "' must be a number (or \"inf\"/\"-inf\")");
}

inline void require_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
  }
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool fixed_runtime() {
  const char* v = std::getenv("REPRO_DP_FIXED_RUNTIME");
  return v != nullptr && v[0] != '\0' && !(v[0] == '0' && v[1] == '\0');
}

inline bool log_enabled() {
  const char* v = std::getenv("REPRO_DP_LOG");
  return v != nullptr && v[0] != '\0' && !(v[0] == '0' && v[1] == '\0');
}

class Stopwatch {
 public:
  long long ms() const {
    if (fixed_runtime()) return 0;
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration_cast<std::chrono::milliseconds>(now - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace exp_detail

inline ExperimentConfig parse_config(const json& j) {
  const std::vector<std::string> allowed = {
      "model",      "params",     "method",        "task",
      "statistic",  "orientation", "alpha",        "R",
      "B",          "replicates", "master_seed",   "true_theta",
      "observed",   "interest",   "tol",           "grid_resolution",
      "null",       "early_stop", "alternative",   "restrict_n",
      "restrict_coverage",        "box",           "optimizer",
      "out",        "jobs"};
  exp_detail::require_keys(j, allowed, "top level");

  ExperimentConfig c;
  if (!j.contains("model") || !j.at("model").is_string()) {
    throw ConfigError("config: 'model' (string) is required");
  }
  c.model = j.at("model").get<std::string>();
  bool known = false;
  for (const std::string& name : model_names()) known = known || name == c.model;
  if (!known) throw ConfigError("config: unknown model '" + c.model + "'");
  c.params = j.value("params", json::object());
  if (!c.params.is_object()) throw ConfigError("config: 'params' must be an object");

  const std::string method = j.value("method", std::string("repro"));
  if (method == "repro") {
    c.method = Method::kRepro;
  } else if (method == "bootstrap_percentile") {
    c.method = Method::kBootstrapPercentile;
  } else if (method == "bootstrap_t") {
    c.method = Method::kBootstrapT;
  } else if (method == "inversion") {
    c.method = Method::kInversion;
  } else {
    throw ConfigError("config: unknown method '" + method + "'");
  }
  if (c.method == Method::kInversion && c.model != "exponential") {
    throw ConfigError("config: method 'inversion' applies only to the exponential model");
  }

  const std::string task = j.value("task", std::string("ci"));
  if (task == "ci") {
    c.task = Task::kCi;
  } else if (task == "pvalue") {
    c.task = Task::kPValue;
  } else if (task == "grid") {
    c.task = Task::kGrid;
  } else {
    throw ConfigError("config: unknown task '" + task + "'");
  }
  if (c.task != Task::kCi && c.method != Method::kRepro) {
    throw ConfigError("config: task '" + task + "' requires method 'repro'");
  }

  c.statistic = j.value("statistic", std::string("default"));
  c.orientation = j.value("orientation", std::string("two_sided"));
  c.alpha = j.value("alpha", 0.05);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("config: alpha in (0,1)");
  c.R = j.value("R", 200);
  c.B = j.value("B", 200);
  c.replicates = j.value("replicates", 1);
  if (c.R < 1 || c.B < 2 || c.replicates < 1) {
    throw ConfigError("config: need R >= 1, B >= 2, replicates >= 1");
  }
  if (j.contains("master_seed")) {
    if (!j.at("master_seed").is_number_unsigned() && !j.at("master_seed").is_number_integer()) {
      throw ConfigError("config: 'master_seed' must be a nonnegative integer");
    }
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
  }
  if (j.contains("true_theta")) {
    for (const auto& v : j.at("true_theta")) {
      c.true_theta.push_back(exp_detail::json_number(v, "true_theta"));
    }
  }
  if (j.contains("observed")) {
    for (const auto& v : j.at("observed")) {
      c.observed.push_back(exp_detail::json_number(v, "observed"));
    }
  }
  c.interest = j.value("interest", -1);
  c.tol = j.value("tol", 1e-3);
  if (!(c.tol > 0.0)) throw ConfigError("config: tol must be positive");
  c.grid_resolution = j.value("grid_resolution", 20);
  if (c.grid_resolution < 1) throw ConfigError("config: grid_resolution >= 1");
  if (j.contains("null")) {
    if (!j.at("null").is_object()) {
      throw ConfigError("config: 'null' must map coordinate names to values");
    }
    for (auto it = j.at("null").begin(); it != j.at("null").end(); ++it) {
      c.null_fixed[it.key()] = exp_detail::json_number(it.value(), "null." + it.key());
    }
  }
  c.early_stop = j.value("early_stop", true);
  c.alternative = j.value("alternative", false);
  c.restrict_n = j.value("restrict_n", true);
  c.restrict_coverage = j.value("restrict_coverage", 0.9999);
  if (!(c.restrict_coverage > 0.0 && c.restrict_coverage < 1.0)) {
    throw ConfigError("config: restrict_coverage in (0,1)");
  }
  if (j.contains("box")) {
    if (!j.at("box").is_object()) {
      throw ConfigError("config: 'box' must map coordinate names to [lo, hi]");
    }
    for (auto it = j.at("box").begin(); it != j.at("box").end(); ++it) {
      if (!it.value().is_array() || it.value().size() != 2) {
        throw ConfigError("config: box." + it.key() + " must be [lo, hi]");
      }
      c.box_override[it.key()] = {exp_detail::json_number(it.value()[0], "box"),
                                  exp_detail::json_number(it.value()[1], "box")};
    }
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    exp_detail::require_keys(o, {"n_starts", "max_evals_per_start", "grid_points_1d",
                                 "method", "seed", "simplex_scale", "xtol"},
                             "optimizer");
    c.opt.n_starts = o.value("n_starts", c.opt.n_starts);
    c.opt.max_evals_per_start = o.value("max_evals_per_start", c.opt.max_evals_per_start);
    c.opt.grid_points_1d = o.value("grid_points_1d", c.opt.grid_points_1d);
    c.opt.simplex_scale = o.value("simplex_scale", c.opt.simplex_scale);
    c.opt.xtol = o.value("xtol", c.opt.xtol);
    c.opt.seed = o.value("seed", c.opt.seed);
    const std::string om = o.value("method", std::string("nelder_mead"));
    if (om == "nelder_mead") {
      c.opt.method = OptMethod::kNelderMeadBox;
    } else if (om == "quasi_newton") {
      c.opt.method = OptMethod::kQuasiNewtonBox;
    } else {
      throw ConfigError("config: unknown optimizer method '" + om + "'");
    }
    c.opt_overridden = true;
  }
  c.out = j.value("out", std::string());
  c.jobs = j.value("jobs", 1);
  if (c.jobs < 1) throw ConfigError("config: jobs >= 1");
  return c;
}

// Builds the model for a config; `alternative` selects the data-generating
// variant used for observed summaries (only the Mann-Whitney model has one).
inline ModelSpec make_model(const ExperimentConfig& c, bool alternative = false) {
  const json& p = c.params;
  auto num = [&p](const std::string& key, double fallback,
                  bool required = false) {
    if (!p.contains(key)) {
      if (required) throw ConfigError("config: params." + key + " is required");
      return fallback;
    }
    return exp_detail::json_number(p.at(key), "params." + key);
  };
  ModelSpec m;
  if (c.model == "bernoulli") {
    exp_detail::require_keys(p, {"n", "epsilon"}, "params");
    m = bernoulli_tulap(static_cast<int>(num("n", 0, true)), num("epsilon", 1.0));
  } else if (c.model == "poisson") {
    exp_detail::require_keys(p, {"n", "c", "epsilon", "theta_max"}, "params");
    m = poisson_clamped(static_cast<int>(num("n", 0, true)),
                        static_cast<int>(num("c", 0, true)), num("epsilon", 1.0),
                        num("theta_max", models_detail::kInf));
  } else if (c.model == "normal") {
    exp_detail::require_keys(p, {"n", "clamp_lo", "clamp_hi", "epsilon", "noise"},
                             "params");
    const std::string noise = p.value("noise", std::string("gaussian"));
    if (noise != "gaussian" && noise != "laplace") {
      throw ConfigError("config: params.noise must be 'gaussian' or 'laplace'");
    }
    m = normal_locscale(static_cast<int>(num("n", 0, true)), num("clamp_lo", 0.0),
                        num("clamp_hi", 3.0), num("epsilon", 1.0),
                        noise == "gaussian" ? NoiseKind::kGaussian : NoiseKind::kLaplace);
  } else if (c.model == "linreg") {
    exp_detail::require_keys(p, {"n", "delta", "mu"}, "params");
    m = linreg_ssp(static_cast<int>(num("n", 0, true)), num("delta", 2.0),
                   num("mu", 1.0));
  } else if (c.model == "logistic") {
    exp_detail::require_keys(p, {"n", "epsilon", "share"}, "params");
    m = logistic_objpert(static_cast<int>(num("n", 0, true)), num("epsilon", 1.0),
                         num("share", 0.9));
  } else if (c.model == "exponential") {
    exp_detail::require_keys(p, {"n", "c", "epsilon"}, "params");
    m = exponential_clamped(static_cast<int>(num("n", 0, true)), num("c", 0, true),
                            num("epsilon", 1.0));
  } else if (c.model == "bernoulli-unknown-n") {
    exp_detail::require_keys(p, {"epsilon", "n_lo", "n_hi"}, "params");
    m = bernoulli_unknown_n(num("epsilon", 1.0),
                            static_cast<long>(num("n_lo", 1.0)),
                            static_cast<long>(num("n_hi", 1000.0)));
  } else if (c.model == "mann-whitney") {
    exp_detail::require_keys(p, {"n", "eps_m", "eps_u", "noise"}, "params");
    const std::string noise = p.value("noise", std::string("laplace"));
    if (noise != "gaussian" && noise != "laplace") {
      throw ConfigError("config: params.noise must be 'gaussian' or 'laplace'");
    }
    m = mann_whitney(static_cast<int>(num("n", 0, true)), num("eps_m", 0.3, true),
                     num("eps_u", 0.7, true),
                     noise == "gaussian" ? NoiseKind::kGaussian : NoiseKind::kLaplace,
                     alternative);
  } else {
    throw ConfigError("config: unknown model '" + c.model + "'");
  }

  for (const auto& [name, bounds] : c.box_override) {
    bool found = false;
    for (std::size_t k = 0; k < m.box.names.size(); ++k) {
      if (m.box.names[k] == name) {
        m.box.lower[k] = bounds.first;
        m.box.upper[k] = bounds.second;
        found = true;
      }
    }
    if (!found) throw ConfigError("config: box override for unknown coordinate '" + name + "'");
  }
  if (c.interest >= 0) {
    if (c.interest >= m.box.dim()) throw ConfigError("config: interest out of range");
    m.box.interest_index = c.interest;
  }
  m.box.validate();
  return m;
}

inline TestStatistic make_statistic(const ExperimentConfig& c, const ModelSpec& m) {
  auto side = [&c]() {
    if (c.orientation == "two_sided") return Orientation::kTwoSided;
    if (c.orientation == "low") return Orientation::kLowUnusual;
    if (c.orientation == "high") return Orientation::kHighUnusual;
    throw ConfigError("config: unknown orientation '" + c.orientation + "'");
  };
  if (c.statistic == "default") return m.default_statistic;
  if (c.statistic == "mahalanobis") return mahalanobis_statistic();
  if (c.statistic == "halfspace") return depth_statistic(DepthKind::kHalfspace);
  if (c.statistic == "simplicial") return depth_statistic(DepthKind::kSimplicial);
  if (c.statistic == "spatial") return depth_statistic(DepthKind::kSpatial);
  if (c.statistic == "scalar") return scalar_statistic(side());
  if (c.statistic == "pivot") {
    const json& p = c.params;
    if (c.model == "bernoulli-unknown-n") {
      return unknown_n_pivot_statistic(exp_detail::json_number(p.at("epsilon"), "epsilon"));
    }
    if (c.model == "mann-whitney") {
      return mann_whitney_pivot_statistic(
          static_cast<int>(exp_detail::json_number(p.at("n"), "n")),
          exp_detail::json_number(p.at("eps_m"), "eps_m"),
          exp_detail::json_number(p.at("eps_u"), "eps_u"));
    }
    throw ConfigError("config: no pivot statistic registered for model '" + c.model + "'");
  }
  throw ConfigError("config: unknown statistic '" + c.statistic + "'");
}

// Null region for p-values: coordinates named in `null` are pinned, the
// rest range over the model box (which must then be finite there).
inline Region null_region(const ExperimentConfig& c, const ModelSpec& m) {
  Region r = inf_detail::region_from_box(m.box);
  for (const auto& [name, value] : c.null_fixed) {
    bool found = false;
    for (std::size_t k = 0; k < m.box.names.size(); ++k) {
      if (m.box.names[k] == name) {
        r.lower[k] = value;
        r.upper[k] = value;
        found = true;
      }
    }
    if (!found) throw ConfigError("config: null pins unknown coordinate '" + name + "'");
  }
  for (std::size_t k = 0; k < r.lower.size(); ++k) {
    if (!std::isfinite(r.lower[k]) || !std::isfinite(r.upper[k])) {
      throw ConfigError("config: p-value null region must be bounded; override the box");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Single-run results.
// ---------------------------------------------------------------------------
struct CiRun {
  ConfidenceInterval ci;
  int coord = 0;
  bool failed = false;
  std::string error;
  long long runtime_ms = 0;
};

struct PValueRun {
  PValueResult res;
  bool reject = false;
  bool failed = false;
  std::string error;
  long long runtime_ms = 0;
};

// Observed summary for one replicate: explicit values win; otherwise the
// generating equation runs at true_theta on the dedicated observed stream.
inline Summary observed_summary(const ExperimentConfig& c, const ModelSpec& model,
                                const ModelSpec& data_model, std::uint64_t seed) {
  if (!c.observed.empty()) {
    if (c.observed.size() != static_cast<std::size_t>(model.summary_dim)) {
      throw ConfigError("config: observed summary has wrong dimension");
    }
    return Summary(c.observed);
  }
  if (c.true_theta.empty()) {
    throw ConfigError("config: need either 'observed' or 'true_theta'");
  }
  if (!data_model.box.contains(c.true_theta)) {
    throw ConfigError("config: true_theta outside the model box");
  }
  const Seed seed_obs = draw_observed_seed(data_model.layout, seed);
  return generate(data_model, c.true_theta, seed_obs);
}

inline OptimizerSpec default_optimizer(const ExperimentConfig& c) {
  OptimizerSpec o = c.opt;
  if (!c.opt_overridden) {
    o.n_starts = 4;
    o.max_evals_per_start = 200;
    o.grid_points_1d = 48;
  }
  return o;
}

// One confidence-interval run against an observed summary. An
// `unknown-n` model is first restricted to the preliminary count range and
// the level is adjusted by the spent error budget.
inline CiRun run_ci(const ExperimentConfig& c, const ModelSpec& model_in,
                    const Summary& s_obs, std::uint64_t seed) {
  exp_detail::Stopwatch watch;
  CiRun run;
  ModelSpec model = model_in;
  run.coord = model.box.interest_index;
  try {
    switch (c.method) {
      case Method::kRepro: {
        double alpha = c.alpha;
        if (c.model == "bernoulli-unknown-n" && c.restrict_n) {
          const auto range = unknown_n_range(s_obs, exp_detail::json_number(
                                                        c.params.at("epsilon"), "epsilon"),
                                             c.restrict_coverage);
          model.box.lower[1] = std::max(model.box.lower[1], static_cast<double>(range.first));
          model.box.upper[1] = std::min(model.box.upper[1], static_cast<double>(range.second));
          if (model.box.lower[1] > model.box.upper[1]) {
            model.box.upper[1] = model.box.lower[1];
          }
          alpha = std::max(1e-6, alpha - (1.0 - c.restrict_coverage));
        }
        const TestStatistic stat = make_statistic(c, model);
        const SeedBank bank = draw_seed_bank(model.layout, c.R, seed);
        run.ci = confidence_interval(alpha, model.box, bank, model, stat, s_obs,
                                     c.tol, default_optimizer(c));
        break;
      }
      case Method::kBootstrapPercentile:
      case Method::kBootstrapT: {
        const BootstrapResult bs = parametric_bootstrap_ci(
            model, s_obs, model.box.interest_index, c.alpha, c.B, seed);
        run.ci = c.method == Method::kBootstrapPercentile ? bs.percentile
                                                          : bs.simplified_t;
        break;
      }
      case Method::kInversion: {
        const json& p = c.params;
        run.ci = exponential_inversion_ci(
            s_obs[0], exp_detail::json_number(p.at("c"), "c"),
            static_cast<int>(exp_detail::json_number(p.at("n"), "n")),
            exp_detail::json_number(p.at("epsilon"), "epsilon"), c.alpha,
            model.box.lower[0], model.box.upper[0]);
        break;
      }
    }
  } catch (const Error& e) {
    run.failed = true;
    run.error = e.what();
  }
  run.runtime_ms = watch.ms();
  return run;
}

inline PValueRun run_pvalue(const ExperimentConfig& c, const ModelSpec& model,
                            const Summary& s_obs, std::uint64_t seed) {
  exp_detail::Stopwatch watch;
  PValueRun run;
  try {
    const TestStatistic stat = make_statistic(c, model);
    const SeedBank bank = draw_seed_bank(model.layout, c.R, seed);
    const Region region = null_region(c, model);
    OptimizerSpec opt = default_optimizer(c);
    if (model.moment_estimate) {
      opt.warm_starts.push_back(
          inf_detail::clamp_to_box(model.box, model.moment_estimate(s_obs)));
    }
    run.res = pvalue(region, bank, model, stat, s_obs, opt,
                     c.early_stop ? c.alpha : 0.0);
    run.reject = run.res.p <= c.alpha;
  } catch (const Error& e) {
    run.failed = true;
    run.error = e.what();
  }
  run.runtime_ms = watch.ms();
  return run;
}

// ---------------------------------------------------------------------------
// CSV commands. Each returns the process exit code and fills `csv`.
// ---------------------------------------------------------------------------
namespace exp_detail {

inline void log_line(const std::string& line) {
  if (log_enabled()) std::cerr << "[repro-dp] " << line << "\n";
}

}  // namespace exp_detail

inline int cmd_ci(const ExperimentConfig& c, std::string* csv) {
  const ModelSpec model = make_model(c);
  const ModelSpec data_model = make_model(c, c.alternative);
  const Summary s_obs = observed_summary(c, model, data_model, c.master_seed);
  const CiRun run = run_ci(c, model, s_obs, c.master_seed);
  std::ostringstream os;
  os << "model,method,alpha,R,coord,lower,upper,width,empty,seed,runtime_ms\n";
  if (run.failed) throw NumericError("ci failed: " + run.error);
  const std::string coord = model.box.names.empty()
                                ? std::to_string(run.coord)
                                : model.box.names[static_cast<std::size_t>(run.coord)];
  os << c.model << ',' << method_name(c.method) << ',' << exp_detail::fmt(c.alpha)
     << ',' << (c.method == Method::kRepro ? c.R : (c.method == Method::kInversion ? 0 : c.B))
     << ',' << coord << ',' << exp_detail::fmt(run.ci.lower) << ','
     << exp_detail::fmt(run.ci.upper) << ',' << exp_detail::fmt(run.ci.width())
     << ',' << (run.ci.empty ? 1 : 0) << ',' << c.master_seed << ','
     << run.runtime_ms << "\n";
  *csv = os.str();
  return 0;
}

inline int cmd_pvalue(const ExperimentConfig& c, std::string* csv) {
  if (c.method != Method::kRepro) {
    throw ConfigError("pvalue: requires method 'repro'");
  }
  const ModelSpec model = make_model(c);
  const ModelSpec data_model = make_model(c, c.alternative);
  const Summary s_obs = observed_summary(c, model, data_model, c.master_seed);
  const PValueRun run = run_pvalue(c, model, s_obs, c.master_seed);
  if (run.failed) throw NumericError("pvalue failed: " + run.error);
  std::ostringstream os;
  os << "model,p,early_stopped,seed,runtime_ms\n";
  os << c.model << ',' << exp_detail::fmt(run.res.p) << ','
     << (run.res.early_stopped ? 1 : 0) << ',' << c.master_seed << ','
     << run.runtime_ms << "\n";
  *csv = os.str();
  return 0;
}

inline int cmd_grid(const ExperimentConfig& c, std::string* csv) {
  if (c.method != Method::kRepro) {
    throw ConfigError("grid: requires method 'repro'");
  }
  const ModelSpec model = make_model(c);
  if (model.box.dim() != 2) {
    throw ConfigError("grid: requires a two-parameter model");
  }
  const ModelSpec data_model = make_model(c, c.alternative);
  const Summary s_obs = observed_summary(c, model, data_model, c.master_seed);
  const TestStatistic stat = make_statistic(c, model);
  const SeedBank bank = draw_seed_bank(model.layout, c.R, c.master_seed);
  const GridResult grid =
      confidence_grid(c.alpha, model.box, bank, model, stat, s_obs,
                      c.grid_resolution, default_optimizer(c), c.tol);
  std::ostringstream os;
  os << "x_lo,x_hi,y_lo,y_hi\n";
  for (const GridCell& cell : grid.cells) {
    os << exp_detail::fmt(cell.lower[0]) << ',' << exp_detail::fmt(cell.upper[0])
       << ',' << exp_detail::fmt(cell.lower[1]) << ','
       << exp_detail::fmt(cell.upper[1]) << "\n";
  }
  *csv = os.str();
  return 0;
}

// Replicated study: replicate i runs under master_seed ^ i. Per-replicate
// rows are followed by `mean` and `se` summary rows over the successful
// replicates (proportions use the binomial SE, widths the sample-mean SE).
inline int cmd_replicate(const ExperimentConfig& c, std::string* csv) {
  if (c.replicates < 2) throw ConfigError("replicate: needs replicates >= 2");
  const ModelSpec model = make_model(c);
  const ModelSpec data_model = make_model(c, c.alternative);
  const int coord = model.box.interest_index;
  const double truth =
      c.true_theta.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : c.true_theta[static_cast<std::size_t>(coord)];

  struct Row {
    CiRun ci;
    PValueRun pv;
  };
  std::vector<Row> rows(static_cast<std::size_t>(c.replicates));
  auto work = [&](int i) {
    const std::uint64_t seed = c.master_seed ^ static_cast<std::uint64_t>(i);
    try {
      const Summary s_obs = observed_summary(c, model, data_model, seed);
      if (c.task == Task::kPValue) {
        rows[static_cast<std::size_t>(i)].pv = run_pvalue(c, model, s_obs, seed);
      } else {
        rows[static_cast<std::size_t>(i)].ci = run_ci(c, model, s_obs, seed);
      }
    } catch (const Error& e) {
      rows[static_cast<std::size_t>(i)].ci.failed = true;
      rows[static_cast<std::size_t>(i)].ci.error = e.what();
      rows[static_cast<std::size_t>(i)].pv.failed = true;
      rows[static_cast<std::size_t>(i)].pv.error = e.what();
    }
    exp_detail::log_line("replicate " + std::to_string(i) + " done");
  };
  if (c.jobs <= 1) {
    for (int i = 0; i < c.replicates; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < c.jobs; ++t) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < c.replicates; i = next.fetch_add(1)) {
          work(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  std::ostringstream os;
  os << "model,method,task,alpha,R,coord,row,lower,upper,width,covered,p,reject,"
        "failed,runtime_ms\n";
  const std::string coord_name =
      model.box.names.empty() ? std::to_string(coord)
                              : model.box.names[static_cast<std::size_t>(coord)];
  auto prefix = [&os, &c, &coord_name](const std::string& row_id) -> std::ostream& {
    os << c.model << ',' << method_name(c.method) << ','
       << (c.task == Task::kPValue ? "pvalue" : "ci") << ','
       << exp_detail::fmt(c.alpha) << ',' << c.R << ',' << coord_name << ','
       << row_id << ',';
    return os;
  };

  int failures = 0;
  double cover_sum = 0.0, width_sum = 0.0, width_sq = 0.0, p_sum = 0.0,
         reject_sum = 0.0;
  long ok = 0;
  bool width_infinite = false;
  for (int i = 0; i < c.replicates; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    if (c.task == Task::kPValue) {
      if (r.pv.failed) {
        ++failures;
        prefix(std::to_string(i)) << ",,,,,," << 1 << ',' << r.pv.runtime_ms << "\n";
        continue;
      }
      ++ok;
      p_sum += r.pv.res.p;
      reject_sum += r.pv.reject ? 1.0 : 0.0;
      prefix(std::to_string(i)) << ",,,," << exp_detail::fmt(r.pv.res.p) << ','
                                << (r.pv.reject ? 1 : 0) << ",0,"
                                << r.pv.runtime_ms << "\n";
    } else {
      if (r.ci.failed) {
        ++failures;
        prefix(std::to_string(i)) << ",,,,,," << 1 << ',' << r.ci.runtime_ms << "\n";
        continue;
      }
      ++ok;
      const bool covered = !std::isnan(truth) && r.ci.ci.contains(truth);
      const double width = r.ci.ci.width();
      cover_sum += covered ? 1.0 : 0.0;
      if (std::isinf(width)) {
        width_infinite = true;
      } else {
        width_sum += width;
        width_sq += width * width;
      }
      prefix(std::to_string(i)) << exp_detail::fmt(r.ci.ci.lower) << ','
                                << exp_detail::fmt(r.ci.ci.upper) << ','
                                << exp_detail::fmt(width) << ','
                                << (covered ? 1 : 0) << ",,,0,"
                                << r.ci.runtime_ms << "\n";
    }
  }

  const double kn = static_cast<double>(ok > 0 ? ok : 1);
  if (c.task == Task::kPValue) {
    const double p_mean = p_sum / kn;
    const double rej = reject_sum / kn;
    const double rej_se = std::sqrt(std::max(0.0, rej * (1.0 - rej)) / kn);
    prefix("mean") << ",,,," << exp_detail::fmt(p_mean) << ','
                   << exp_detail::fmt(rej) << ",," << "\n";
    prefix("se") << ",,,,," << exp_detail::fmt(rej_se) << ",," << "\n";
  } else {
    const double cov = cover_sum / kn;
    const double cov_se = std::sqrt(std::max(0.0, cov * (1.0 - cov)) / kn);
    double w_mean, w_se;
    if (width_infinite) {
      w_mean = std::numeric_limits<double>::infinity();
      w_se = std::numeric_limits<double>::quiet_NaN();
    } else {
      w_mean = width_sum / kn;
      const double var = std::max(0.0, width_sq / kn - w_mean * w_mean);
      w_se = std::sqrt(var / kn);
    }
    prefix("mean") << ",," << exp_detail::fmt(w_mean) << ','
                   << exp_detail::fmt(cov) << ",,,," << "\n";
    prefix("se") << ",," << exp_detail::fmt(w_se) << ','
                 << exp_detail::fmt(cov_se) << ",,,," << "\n";
  }
  *csv = os.str();
  const double fail_rate = static_cast<double>(failures) / c.replicates;
  return fail_rate > 0.01 ? 4 : 0;
}

}  // namespace reprodp

#endif  // REPRODP_EXPERIMENT_HPP_

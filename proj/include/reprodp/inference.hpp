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

#ifndef REPRODP_INFERENCE_HPP_
#define REPRODP_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"
#include "reprodp/mathutil.hpp"
#include "reprodp/optimize.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {

namespace inf_detail {

// floor/ceil with a relative snap so decimal products like 0.05*200
// land on the intended integer despite binary rounding.
inline long snap_floor(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) {
    return static_cast<long>(r);
  }
  return static_cast<long>(std::floor(x));
}

inline long snap_ceil(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) {
    return static_cast<long>(r);
  }
  return static_cast<long>(std::ceil(x));
}

}  // namespace inf_detail

// Order-statistic acceptance band: accept when the observed value sits
// between the a-th and b-th order statistic of the size-(R+1) cloud.
struct Band {
  long a = 0;
  long b = 0;
  double alpha = 0.0;
  long R = 0;
};

// Valid bands need b - a >= ceil((1-alpha)(R+1)) - 1. The two_sided choice
// splits the tail mass evenly (with a clamped up to 1 when the formula
// yields 0, which only raises coverage); the one-sided choices put all the
// mass on a single tail.
inline Band choose_band(double alpha, long R, Orientation side) {
  if (R < 1) throw InvalidArgument("choose_band: R >= 1 required");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("choose_band: alpha must lie in (0,1)");
  }
  const double n = static_cast<double>(R + 1);
  if (alpha * n < 1.0 - 1e-9) {
    throw InfeasibleBand("choose_band: alpha < 1/(R+1); increase R");
  }
  const long span = inf_detail::snap_ceil((1.0 - alpha) * n) - 1;
  Band band;
  band.alpha = alpha;
  band.R = R;
  switch (side) {
    case Orientation::kTwoSided:
      band.a = std::max<long>(1, inf_detail::snap_floor(0.5 * alpha * n));
      band.b = band.a + span;
      break;
    case Orientation::kLowUnusual:
      band.a = inf_detail::snap_floor(alpha * n) + 1;
      band.b = R + 1;
      break;
    case Orientation::kHighUnusual:
      band.a = 1;
      band.b = inf_detail::snap_ceil((1.0 - alpha) * n);
      break;
  }
  if (band.a < 1 || band.b < band.a || band.b > R + 1 || band.b - band.a < span) {
    throw InfeasibleBand("choose_band: no feasible band for these alpha, R");
  }
  return band;
}

// Acceptance threshold floor(alpha (R+1)) + 1 shared by the accept test
// and the p-value duality.
inline long accept_threshold(double alpha, long R) {
  return choose_band(alpha, R, Orientation::kLowUnusual).a;
}

// Binds one (model, bank, observed summary, statistic) tuple and answers
// region acceptance queries. All queries reuse the same seed bank, so
// results across regions are mutually consistent; warm starts chain
// witnesses from earlier queries into later ones.
class Acceptor {
 public:
  Acceptor(const ModelSpec& model, const SeedBank& bank, const Summary& s_obs,
           const TestStatistic& stat, double alpha, OptimizerSpec opt)
      : ev_(model, bank, s_obs, stat, /*fold_to_low=*/true),
        opt_(std::move(opt)),
        alpha_(alpha),
        threshold_(static_cast<double>(accept_threshold(alpha, bank.R()))) {}

  double alpha() const { return alpha_; }
  double threshold() const { return threshold_; }
  long accept_calls() const { return accept_calls_; }
  long objective_evals() const { return objective_evals_; }
  RankEvaluator& evaluator() { return ev_; }

  // Objective of the region test: count_leq + 1 + T_obs, maximized.
  double objective(const std::vector<double>& theta) {
    const RankPoint rp = ev_.rank(theta);
    return static_cast<double>(rp.count_leq) + 1.0 + rp.t_obs;
  }

  bool test(const Region& region, const std::vector<std::vector<double>>& warm,
            OptResult* out = nullptr, const OptimizerSpec* override_spec = nullptr) {
    OptimizerSpec o = override_spec != nullptr ? *override_spec : opt_;
    for (const auto& w : warm) o.warm_starts.push_back(w);
    const OptResult res = optimize_rank(
        [this](const std::vector<double>& th) { return objective(th); }, region,
        o, threshold_);
    ++accept_calls_;
    objective_evals_ += res.evals;
    if (out != nullptr) *out = res;
    return res.value >= threshold_;
  }

 private:
  RankEvaluator ev_;
  OptimizerSpec opt_;
  double alpha_;
  double threshold_;
  long accept_calls_ = 0;
  long objective_evals_ = 0;
};

// Region acceptance test: TRUE iff the supremum over theta_set of
// (#{T_i <= T_obs} + 1 + T_obs) reaches floor(alpha (R+1)) + 1, which holds
// exactly when theta_set intersects the confidence set (up to optimizer
// completeness). The threshold doubles as an exact early-exit bound.
inline bool accept(const Region& theta_set, double alpha, const SeedBank& bank,
                   const ModelSpec& model, const TestStatistic& stat,
                   const Summary& s_obs, const OptimizerSpec& opt,
                   OptResult* trace = nullptr) {
  Acceptor acc(model, bank, s_obs, stat, alpha, opt);
  return acc.test(theta_set, {}, trace);
}

struct ConfidenceInterval {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  bool empty = false;
  // provenance
  double alpha = 0.0;
  long R = 0;
  double tol = 0.0;
  std::uint64_t master_seed = 0;
  long accept_calls = 0;
  long objective_evals = 0;

  bool contains(double x) const { return !empty && x >= lower && x <= upper; }
  double width() const { return empty ? 0.0 : upper - lower; }
};

namespace inf_detail {

inline std::vector<double> clamp_to_box(const ParamBox& box, std::vector<double> x) {
  for (int j = 0; j < box.dim(); ++j) {
    const std::size_t k = static_cast<std::size_t>(j);
    x[k] = std::min(std::max(x[k], box.lower[k]), box.upper[k]);
    if (box.is_integer(j)) x[k] = std::round(x[k]);
  }
  return x;
}

inline Region region_from_box(const ParamBox& box) {
  Region r;
  r.lower = box.lower;
  r.upper = box.upper;
  r.integer = box.integer;
  return r;
}

// Replace the interest coordinate's bounds by a sub-segment.
inline Region slab(const Region& full, std::size_t ix, double lo, double hi) {
  Region r = full;
  r.lower[ix] = lo;
  r.upper[ix] = hi;
  return r;
}

// Anchor point for windowing unbounded coordinates: first warm start when
// available, otherwise a finite point inside the box.
inline std::vector<double> search_anchor(
    const ParamBox& box, const std::vector<std::vector<double>>& warm) {
  if (!warm.empty()) return warm.front();
  std::vector<double> c(box.lower.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double lo = box.lower[j], hi = box.upper[j];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      c[j] = 0.5 * (lo + hi);
    } else if (std::isfinite(lo)) {
      c[j] = lo + 1.0;
    } else if (std::isfinite(hi)) {
      c[j] = hi - 1.0;
    } else {
      c[j] = 0.0;
    }
  }
  return c;
}

}  // namespace inf_detail

// Confidence interval for the interest coordinate of `box` by bisection.
//
// Search order: (1) find an accepted point by maximizing the acceptance
// objective over the whole box (unbounded coordinates start from a window
// around the warm start and widen geometrically; a denser retry runs
// before concluding the set is empty); (2) on each side, locate a finite
// cap beyond which everything is rejected, doubling outward for unbounded
// boxes and declaring +-infinity after 60 doublings; (3) bisect, testing
// the slab between the midpoint and the cap so the interval can only
// shrink where the whole slab is rejected. Endpoints are reported at the
// caps, making the interval conservative by at most tol per side.
inline ConfidenceInterval confidence_interval(
    double alpha, const ParamBox& box, const SeedBank& bank,
    const ModelSpec& model, const TestStatistic& stat, const Summary& s_obs,
    double tol, const OptimizerSpec& opt) {
  box.validate();
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw InvalidArgument("confidence_interval: tol must be finite and positive");
  }
  const std::size_t ix = static_cast<std::size_t>(box.interest_index);
  if (box.is_integer(static_cast<int>(ix))) {
    throw InvalidArgument(
        "confidence_interval: integer interest coordinate; enumerate instead");
  }
  for (int j = 0; j < box.dim(); ++j) {
    const std::size_t k = static_cast<std::size_t>(j);
    if (k == ix) continue;
    if (!std::isfinite(box.lower[k]) || !std::isfinite(box.upper[k])) {
      throw InvalidArgument("confidence_interval: nuisance bounds must be finite");
    }
  }

  ConfidenceInterval ci;
  ci.alpha = alpha;
  ci.R = bank.R();
  ci.tol = tol;
  ci.master_seed = bank.master_seed;

  Acceptor acc(model, bank, s_obs, stat, alpha, opt);

  std::vector<std::vector<double>> warm = opt.warm_starts;
  if (model.moment_estimate) {
    warm.push_back(inf_detail::clamp_to_box(box, model.moment_estimate(s_obs)));
  }

  // Step 1: accepted initial point.
  const Region full = inf_detail::region_from_box(box);
  const std::vector<double> center = inf_detail::search_anchor(box, warm);
  std::vector<double> theta_init;
  {
    const bool bounded_interest = std::isfinite(box.lower[ix]) && std::isfinite(box.upper[ix]);
    const int max_attempts = bounded_interest ? 1 : 8;
    OptResult res;
    bool found = false;
    for (int k = 0; k < max_attempts && !found; ++k) {
      Region init = full;
      const double w = std::max(1.0, std::fabs(center[ix])) * std::ldexp(1.0, k);
      if (!std::isfinite(init.lower[ix])) init.lower[ix] = center[ix] - w;
      if (!std::isfinite(init.upper[ix])) init.upper[ix] = center[ix] + w;
      found = acc.test(init, warm, &res);
    }
    if (!found) {
      // denser sweep before declaring the interval empty
      Region init = full;
      if (!std::isfinite(init.lower[ix])) {
        init.lower[ix] = center[ix] - 128.0 * std::max(1.0, std::fabs(center[ix]));
      }
      if (!std::isfinite(init.upper[ix])) {
        init.upper[ix] = center[ix] + 128.0 * std::max(1.0, std::fabs(center[ix]));
      }
      const OptimizerSpec dense = opt.paranoid();
      found = acc.test(init, warm, &res, &dense);
    }
    if (!found) {
      ci.empty = true;
      ci.accept_calls = acc.accept_calls();
      ci.objective_evals = acc.objective_evals();
      return ci;
    }
    theta_init = res.argmax;
  }

  // Step 2+3 per side. dir=+1 explores above beta_init, dir=-1 below.
  const double beta_init = theta_init[ix];
  double endpoints[2] = {0.0, 0.0};
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? -1.0 : 1.0;
    const double box_edge = dir > 0 ? box.upper[ix] : box.lower[ix];
    double a = beta_init;                    // accepted frontier
    std::vector<double> witness = theta_init;
    double cap = box_edge;                   // everything beyond is rejected
    bool infinite = false;
    if (!std::isfinite(box_edge)) {
      const double base = std::max(1.0, std::fabs(beta_init));
      infinite = true;
      double prev_edge = beta_init + dir * base;
      for (int k = 1; k <= 60; ++k) {
        const double next_edge = beta_init + dir * base * std::ldexp(1.0, k);
        const Region probe =
            dir > 0 ? inf_detail::slab(full, ix, prev_edge, next_edge)
                    : inf_detail::slab(full, ix, next_edge, prev_edge);
        OptResult res;
        if (acc.test(probe, {witness}, &res)) {
          witness = res.argmax;
          a = res.argmax[ix];
          prev_edge = next_edge;
        } else {
          cap = prev_edge;
          infinite = false;
          break;
        }
      }
    }
    if (infinite) {
      endpoints[side] = dir * std::numeric_limits<double>::infinity();
      continue;
    }
    while (std::fabs(cap - a) > tol) {
      const double mid = 0.5 * (a + cap);
      if (!(mid > std::min(a, cap) && mid < std::max(a, cap))) break;
      const Region probe = dir > 0 ? inf_detail::slab(full, ix, mid, cap)
                                   : inf_detail::slab(full, ix, cap, mid);
      OptResult res;
      if (acc.test(probe, {witness}, &res)) {
        witness = res.argmax;
        a = res.argmax[ix];
      } else {
        cap = mid;
      }
    }
    endpoints[side] = cap;
  }

  ci.lower = endpoints[0];
  ci.upper = endpoints[1];
  if (!(ci.lower <= ci.upper)) std::swap(ci.lower, ci.upper);
  ci.accept_calls = acc.accept_calls();
  ci.objective_evals = acc.objective_evals();
  return ci;
}

struct GridCell {
  std::vector<double> lower, upper;

  bool contains(const std::vector<double>& x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
    }
    return true;
  }
};

struct GridResult {
  std::vector<GridCell> cells;  // accepted cells, row-major discovery order
  GridCell bounding_box;        // product of the per-coordinate intervals
  int resolution = 0;
  std::vector<ConfidenceInterval> coordinate_intervals;
  bool empty = false;  // some coordinate interval came back empty
  long accept_calls = 0;
  long objective_evals = 0;
};

// Joint confidence region rasterized at resolution r per axis: the product
// of per-coordinate confidence intervals (all sharing `bank`) is split
// into r^d cells and each cell is kept iff its region test accepts.
inline GridResult confidence_grid(double alpha, const ParamBox& box,
                                  const SeedBank& bank, const ModelSpec& model,
                                  const TestStatistic& stat, const Summary& s_obs,
                                  int r, const OptimizerSpec& opt,
                                  double tol = 1e-3) {
  box.validate();
  if (r < 1) throw InvalidArgument("confidence_grid: resolution must be >= 1");
  const int d = box.dim();
  double cell_count = 1.0;
  for (int j = 0; j < d; ++j) cell_count *= static_cast<double>(r);
  if (cell_count > 1e6) {
    throw InvalidArgument("confidence_grid: r^d exceeds the 1e6 cell budget");
  }

  GridResult grid;
  grid.resolution = r;
  for (int j = 0; j < d; ++j) {
    ParamBox bj = box;
    bj.interest_index = j;
    ConfidenceInterval cj =
        confidence_interval(alpha, bj, bank, model, stat, s_obs, tol, opt);
    grid.accept_calls += cj.accept_calls;
    grid.objective_evals += cj.objective_evals;
    if (cj.empty) {
      grid.empty = true;
      grid.coordinate_intervals.push_back(cj);
      return grid;
    }
    if (!std::isfinite(cj.lower) || !std::isfinite(cj.upper)) {
      throw UnboundedGrid(
          "confidence_grid: infinite coordinate interval; clamp the box first");
    }
    grid.coordinate_intervals.push_back(cj);
  }

  grid.bounding_box.lower.resize(static_cast<std::size_t>(d));
  grid.bounding_box.upper.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    grid.bounding_box.lower[static_cast<std::size_t>(j)] =
        grid.coordinate_intervals[static_cast<std::size_t>(j)].lower;
    grid.bounding_box.upper[static_cast<std::size_t>(j)] =
        grid.coordinate_intervals[static_cast<std::size_t>(j)].upper;
  }

  Acceptor acc(model, bank, s_obs, stat, alpha, opt);
  std::vector<std::vector<double>> warm;
  if (model.moment_estimate) {
    warm.push_back(inf_detail::clamp_to_box(box, model.moment_estimate(s_obs)));
  }

  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  const long total = static_cast<long>(cell_count);
  for (long c = 0; c < total; ++c) {
    long rem = c;
    GridCell cell;
    cell.lower.resize(static_cast<std::size_t>(d));
    cell.upper.resize(static_cast<std::size_t>(d));
    for (int j = d - 1; j >= 0; --j) {
      idx[static_cast<std::size_t>(j)] = static_cast<int>(rem % r);
      rem /= r;
    }
    for (int j = 0; j < d; ++j) {
      const std::size_t k = static_cast<std::size_t>(j);
      const double lo = grid.bounding_box.lower[k];
      const double hi = grid.bounding_box.upper[k];
      const double step = (hi - lo) / r;
      cell.lower[k] = lo + step * idx[k];
      cell.upper[k] = idx[k] + 1 == r ? hi : lo + step * (idx[k] + 1);
    }
    Region cr;
    cr.lower = cell.lower;
    cr.upper = cell.upper;
    cr.integer = box.integer;
    OptResult res;
    if (acc.test(cr, warm, &res)) {
      grid.cells.push_back(cell);
      warm.clear();
      warm.push_back(res.argmax);  // chain the latest witness
    }
  }
  grid.accept_calls += acc.accept_calls();
  grid.objective_evals += acc.objective_evals();
  return grid;
}

struct PValueResult {
  double p = 1.0;
  bool early_stopped = false;
  double sup_objective = 0.0;  // M = sup (count_leq + T_obs)
  std::vector<double> argmax;
  long objective_evals = 0;
  long R = 0;
  std::uint64_t master_seed = 0;
};

// p-value for H0: theta in theta_null. M = sup over the null region of
// (count_leq + T_obs); p = min{floor(M)+1, R+1}/(R+1). With a significance
// level supplied, the search exits as soon as some theta certifies p >
// level (the reported p is then that certified lower bound); the exit
// threshold floor(level (R+1)) is exact, as is the saturation exit at M >=
// R where p = 1 regardless of the rest of the search.
inline PValueResult pvalue(const Region& theta_null, const SeedBank& bank,
                           const ModelSpec& model, const TestStatistic& stat,
                           const Summary& s_obs, const OptimizerSpec& opt,
                           double early_stop_level = 0.0) {
  theta_null.validate();
  const long R = bank.R();
  RankEvaluator ev(model, bank, s_obs, stat, /*fold_to_low=*/true);
  auto objective = [&ev](const std::vector<double>& theta) {
    const RankPoint rp = ev.rank(theta);
    return static_cast<double>(rp.count_leq) + rp.t_obs;
  };
  double stop_at = static_cast<double>(R);  // saturation: p is exactly 1
  const bool level_on = early_stop_level > 0.0 && early_stop_level < 1.0;
  if (level_on) {
    const long t = inf_detail::snap_floor(early_stop_level * (R + 1));
    stop_at = std::min(stop_at, static_cast<double>(t));
  }
  const OptResult res = optimize_rank(objective, theta_null, opt, stop_at);
  PValueResult out;
  out.sup_objective = res.value;
  out.argmax = res.argmax;
  out.objective_evals = res.evals;
  out.R = R;
  out.master_seed = bank.master_seed;
  long num = inf_detail::snap_floor(res.value) + 1;
  if (num > R + 1) num = R + 1;
  if (num < 1) num = 1;
  out.p = static_cast<double>(num) / static_cast<double>(R + 1);
  out.early_stopped = level_on && res.early_stopped;
  return out;
}

inline PValueResult pvalue(const std::vector<double>& theta_null,
                           const SeedBank& bank, const ModelSpec& model,
                           const TestStatistic& stat, const Summary& s_obs,
                           const OptimizerSpec& opt,
                           double early_stop_level = 0.0) {
  Region point;
  point.lower = theta_null;
  point.upper = theta_null;
  return pvalue(point, bank, model, stat, s_obs, opt, early_stop_level);
}

// Width of a per-coordinate-corrected normal-mean interval relative to the
// nominal one when d coordinates must hold simultaneously:
// z_{1-alpha*/2} / z_{1-alpha/2} with alpha* = 1 - (1-alpha)^{1/d}.
inline double overcoverage_relative_width(double alpha, int d) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("overcoverage_relative_width: alpha in (0,1)");
  }
  if (d < 1) throw InvalidArgument("overcoverage_relative_width: d >= 1");
  const double alpha_star = 1.0 - std::pow(1.0 - alpha, 1.0 / d);
  return normal_quantile(1.0 - 0.5 * alpha_star) /
         normal_quantile(1.0 - 0.5 * alpha);
}

}  // namespace reprodp

#endif  // REPRODP_INFERENCE_HPP_

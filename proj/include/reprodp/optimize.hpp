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

#ifndef REPRODP_OPTIMIZE_HPP_
#define REPRODP_OPTIMIZE_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "reprodp/error.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {

enum class OptMethod { kNelderMeadBox, kQuasiNewtonBox };

// Axis-aligned search region. Integer coordinates are enumerated
// exhaustively (never relaxed); continuous coordinates are searched with a
// derivative-free method. Bounds must be finite: callers clamp unbounded
// parameter boxes before optimizing.
struct Region {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> integer;  // empty = all continuous

  std::size_t dim() const { return lower.size(); }

  bool is_integer(std::size_t j) const {
    return j < integer.size() && integer[j];
  }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
      throw InvalidArgument("Region: bound size mismatch");
    }
    for (std::size_t j = 0; j < lower.size(); ++j) {
      if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) ||
          lower[j] > upper[j]) {
        throw InvalidArgument("Region: bounds must be finite with lower <= upper");
      }
    }
  }

  std::vector<double> clamped(std::vector<double> x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = std::min(std::max(x[j], lower[j]), upper[j]);
      if (is_integer(j)) x[j] = std::round(x[j]);
    }
    return x;
  }

  std::vector<double> center() const {
    std::vector<double> c(dim());
    for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lower[j] + upper[j]);
    return clamped(std::move(c));
  }
};

struct OptimizerSpec {
  int n_starts = 8;            // Latin-hypercube starts (warm starts are extra)
  int max_evals_per_start = 400;
  OptMethod method = OptMethod::kNelderMeadBox;
  std::uint64_t seed = 0;      // start-placement stream key
  std::vector<std::vector<double>> warm_starts;
  int grid_points_1d = 64;     // dense scan for one free coordinate
  double simplex_scale = 0.15;  // initial simplex edge, fraction of box side
  double xtol = 1e-6;          // simplex collapse threshold, fraction of side

  // Densified copy for re-running searches whose completeness is suspect.
  OptimizerSpec paranoid() const {
    OptimizerSpec p = *this;
    p.n_starts *= 4;
    p.grid_points_1d *= 4;
    p.max_evals_per_start *= 2;
    return p;
  }
};

struct OptResult {
  std::vector<double> argmax;
  double value = -std::numeric_limits<double>::infinity();
  long evals = 0;
  bool early_stopped = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace opt_detail {

// Shared evaluation bookkeeping: best-so-far tracking, the >= threshold
// early exit (exact for integer accept/p-value thresholds), and external
// cancellation polling. Non-finite objective values are recorded as misses.
struct Tracker {
  const Objective& f;
  double stop_when_ge;
  const std::atomic<bool>* stop_flag;
  OptResult res;
  bool stopped = false;

  Tracker(const Objective& fn, double threshold, const std::atomic<bool>* flag)
      : f(fn), stop_when_ge(threshold), stop_flag(flag) {}

  double eval(const std::vector<double>& x) {
    if (stopped) return -std::numeric_limits<double>::infinity();
    const double v = f(x);
    ++res.evals;
    if (std::isfinite(v) && v > res.value) {
      res.value = v;
      res.argmax = x;
    }
    if (std::isfinite(v) && v >= stop_when_ge) {
      stopped = true;
      res.early_stopped = true;
    }
    if (stop_flag != nullptr && stop_flag->load(std::memory_order_relaxed)) {
      stopped = true;
      res.early_stopped = true;
    }
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  }
};

// Box-projected Nelder-Mead ascent on the free coordinates listed in
// `free_idx`; the other coordinates of `x0` stay fixed.
inline void nelder_mead(Tracker* tr, const Region& region,
                        const std::vector<std::size_t>& free_idx,
                        const std::vector<double>& x0, double simplex_scale,
                        double xtol, int max_evals) {
  const std::size_t k = free_idx.size();
  const long budget_end = tr->res.evals + max_evals;
  auto clamp_free = [&](std::vector<double>& x) {
    for (std::size_t j : free_idx) {
      x[j] = std::min(std::max(x[j], region.lower[j]), region.upper[j]);
    }
  };
  struct Vertex {
    std::vector<double> x;
    double v;
  };
  std::vector<Vertex> simplex;
  simplex.reserve(k + 1);
  {
    std::vector<double> x = x0;
    clamp_free(x);
    simplex.push_back({x, tr->eval(x)});
  }
  for (std::size_t i = 0; i < k && !tr->stopped; ++i) {
    const std::size_t j = free_idx[i];
    std::vector<double> x = simplex[0].x;
    double h = simplex_scale * (region.upper[j] - region.lower[j]);
    if (h <= 0.0) h = std::max(1e-8, 1e-4 * std::fabs(x[j]));
    if (x[j] + h > region.upper[j]) h = -h;
    x[j] += h;
    clamp_free(x);
    simplex.push_back({x, tr->eval(x)});
  }
  if (tr->stopped || simplex.size() < k + 1) return;

  auto by_value_desc = [](const Vertex& a, const Vertex& b) { return a.v > b.v; };
  while (!tr->stopped && tr->res.evals < budget_end) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value_desc);
    // collapse test on the free coordinates
    bool collapsed = true;
    for (std::size_t j : free_idx) {
      double lo = simplex[0].x[j], hi = simplex[0].x[j];
      for (const Vertex& v : simplex) {
        lo = std::min(lo, v.x[j]);
        hi = std::max(hi, v.x[j]);
      }
      const double side = std::max(region.upper[j] - region.lower[j], 1e-300);
      if (hi - lo > xtol * side) {
        collapsed = false;
        break;
      }
    }
    if (collapsed) return;

    Vertex& worst = simplex.back();
    std::vector<double> centroid(x0.size(), 0.0);
    for (std::size_t j : free_idx) {
      double c = 0.0;
      for (std::size_t i = 0; i + 1 < simplex.size(); ++i) c += simplex[i].x[j];
      centroid[j] = c / static_cast<double>(k);
    }
    auto along = [&](double t) {
      std::vector<double> x = x0;
      for (std::size_t j : free_idx) {
        x[j] = centroid[j] + t * (centroid[j] - worst.x[j]);
      }
      clamp_free(x);
      return x;
    };
    const std::vector<double> xr = along(1.0);
    const double fr = tr->eval(xr);
    if (tr->stopped) return;
    if (fr > simplex[0].v) {
      const std::vector<double> xe = along(2.0);
      const double fe = tr->eval(xe);
      if (tr->stopped) return;
      if (fe > fr) {
        worst = {xe, fe};
      } else {
        worst = {xr, fr};
      }
      continue;
    }
    if (fr > simplex[simplex.size() - 2].v) {
      worst = {xr, fr};
      continue;
    }
    const std::vector<double> xc = fr > worst.v ? along(0.5) : along(-0.5);
    const double fc = tr->eval(xc);
    if (tr->stopped) return;
    if (fc > std::max(fr, worst.v)) {
      worst = {xc, fc};
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i < simplex.size() && !tr->stopped; ++i) {
      for (std::size_t j : free_idx) {
        simplex[i].x[j] = 0.5 * (simplex[0].x[j] + simplex[i].x[j]);
      }
      clamp_free(simplex[i].x);
      simplex[i].v = tr->eval(simplex[i].x);
    }
  }
}

// Projected BFGS ascent with central-difference gradients, for callers who
// know their objective is smooth. Falls back to steepest ascent whenever
// the approximate curvature fails to give an ascent direction.
inline void quasi_newton(Tracker* tr, const Region& region,
                         const std::vector<std::size_t>& free_idx,
                         const std::vector<double>& x0, double xtol,
                         int max_evals) {
  const std::size_t k = free_idx.size();
  const long budget_end = tr->res.evals + max_evals;
  auto clamp_free = [&](std::vector<double>& x) {
    for (std::size_t j : free_idx) {
      x[j] = std::min(std::max(x[j], region.lower[j]), region.upper[j]);
    }
  };
  std::vector<double> x = x0;
  clamp_free(x);
  double fx = tr->eval(x);
  if (tr->stopped) return;

  auto gradient = [&](const std::vector<double>& at, std::vector<double>* g) {
    g->assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = free_idx[i];
      const double h = 1e-6 * std::max(1.0, std::fabs(at[j]));
      std::vector<double> xp = at, xm = at;
      xp[j] += h;
      xm[j] -= h;
      clamp_free(xp);
      clamp_free(xm);
      const double denom = xp[j] - xm[j];
      if (denom <= 0.0) continue;
      const double fp = tr->eval(xp);
      if (tr->stopped) return;
      const double fm = tr->eval(xm);
      if (tr->stopped) return;
      (*g)[i] = (fp - fm) / denom;
    }
  };

  std::vector<double> hinv(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) hinv[i * k + i] = 1.0;
  std::vector<double> g(k), gnew(k), dir(k);
  gradient(x, &g);
  if (tr->stopped) return;

  while (!tr->stopped && tr->res.evals < budget_end) {
    for (std::size_t i = 0; i < k; ++i) {
      double v = 0.0;
      for (std::size_t l = 0; l < k; ++l) v += hinv[i * k + l] * g[l];
      dir[i] = v;
    }
    double dg = 0.0, gnorm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      dg += dir[i] * g[i];
      gnorm = std::max(gnorm, std::fabs(g[i]));
    }
    if (gnorm < 1e-10) return;
    if (dg <= 0.0) {
      dir = g;  // curvature reset
      for (std::size_t i = 0; i < k; ++i) hinv[i * k + i] = 1.0;
    }
    double step = 1.0;
    std::vector<double> xn;
    double fn = -std::numeric_limits<double>::infinity();
    bool moved = false;
    for (int ls = 0; ls < 30 && !tr->stopped; ++ls) {
      xn = x;
      for (std::size_t i = 0; i < k; ++i) xn[free_idx[i]] += step * dir[i];
      clamp_free(xn);
      fn = tr->eval(xn);
      if (fn > fx) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (tr->stopped || !moved) return;
    double shift = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = free_idx[i];
      const double side = std::max(region.upper[j] - region.lower[j], 1e-300);
      shift = std::max(shift, std::fabs(xn[j] - x[j]) / side);
    }
    gradient(xn, &gnew);
    if (tr->stopped) return;
    // BFGS update on the inverse approximation (ascent convention)
    std::vector<double> s(k), y(k);
    double sy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      s[i] = xn[free_idx[i]] - x[free_idx[i]];
      y[i] = g[i] - gnew[i];  // negated-gradient differences
      sy += s[i] * y[i];
    }
    if (sy > 1e-12) {
      std::vector<double> hy(k, 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t l = 0; l < k; ++l) hy[i] += hinv[i * k + l] * y[l];
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < k; ++i) yhy += y[i] * hy[i];
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
          hinv[i * k + l] += ((sy + yhy) * s[i] * s[l]) / (sy * sy) -
                             (hy[i] * s[l] + s[i] * hy[l]) / sy;
        }
      }
    }
    x = std::move(xn);
    fx = fn;
    g = gnew;
    if (shift < xtol) return;
  }
}

inline std::vector<std::vector<double>> latin_hypercube(
    const Region& region, const std::vector<std::size_t>& free_idx, int n,
    std::uint64_t seed) {
  RngStream rng(seed, stream_id::optimizer());
  std::uint64_t slot = 0;
  std::vector<std::vector<double>> starts(
      static_cast<std::size_t>(n), std::vector<double>(region.dim(), 0.0));
  for (std::size_t j : free_idx) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int r = static_cast<int>(rng.uniform(slot++) * (i + 1));
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(std::min(r, i))]);
    }
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform(slot++);
      const double frac = (perm[static_cast<std::size_t>(i)] + u) / n;
      starts[static_cast<std::size_t>(i)][j] =
          region.lower[j] + frac * (region.upper[j] - region.lower[j]);
    }
  }
  return starts;
}

}  // namespace opt_detail

// Multi-start derivative-free maximization of `objective` over `region`.
// Integer coordinates are enumerated exhaustively, ordered by proximity to
// the warm starts so that threshold early exits fire quickly. Continuous
// searches run Nelder-Mead (or BFGS when requested) from each warm start
// plus `n_starts` Latin-hypercube starts; with one free coordinate a dense
// grid scan precedes the polish. The search stops as soon as a value
// reaches `stop_when_ge` (exact for the integer acceptance thresholds) or
// `stop_flag` is raised. Throws a numeric error when no evaluation was
// finite.
inline OptResult optimize_rank(
    const Objective& objective, const Region& region, const OptimizerSpec& opt,
    double stop_when_ge = std::numeric_limits<double>::infinity(),
    const std::atomic<bool>* stop_flag = nullptr) {
  region.validate();
  if (opt.n_starts < 1) throw InvalidArgument("OptimizerSpec: n_starts >= 1");
  const std::size_t d = region.dim();
  opt_detail::Tracker tr(objective, stop_when_ge, stop_flag);

  std::vector<std::size_t> int_idx, free_idx;
  for (std::size_t j = 0; j < d; ++j) {
    if (region.is_integer(j)) {
      int_idx.push_back(j);
    } else if (region.upper[j] > region.lower[j]) {
      free_idx.push_back(j);
    }
  }

  // Enumerate the integer lattice (single empty combo when none).
  std::vector<std::vector<double>> combos(1, std::vector<double>());
  for (std::size_t j : int_idx) {
    const double lo = std::ceil(region.lower[j] - 1e-9);
    const double hi = std::floor(region.upper[j] + 1e-9);
    if (lo > hi) throw InvalidArgument("Region: empty integer range");
    std::vector<std::vector<double>> next;
    next.reserve(combos.size() * static_cast<std::size_t>(hi - lo + 1));
    for (const auto& c : combos) {
      for (double v = lo; v <= hi; v += 1.0) {
        auto e = c;
        e.push_back(v);
        next.push_back(std::move(e));
        if (next.size() > 200000) {
          throw InvalidArgument("Region: integer lattice too large to enumerate");
        }
      }
    }
    combos = std::move(next);
  }
  if (!int_idx.empty() && !opt.warm_starts.empty()) {
    auto dist = [&](const std::vector<double>& combo) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& w : opt.warm_starts) {
        if (w.size() != d) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < int_idx.size(); ++i) {
          const double v = combo[i] - w[int_idx[i]];
          s += v * v;
        }
        best = std::min(best, s);
      }
      return best;
    };
    std::stable_sort(combos.begin(), combos.end(),
                     [&](const std::vector<double>& a, const std::vector<double>& b) {
                       return dist(a) < dist(b);
                     });
  }

  for (const auto& combo : combos) {
    if (tr.stopped) break;
    std::vector<double> base = region.center();
    for (std::size_t i = 0; i < int_idx.size(); ++i) base[int_idx[i]] = combo[i];

    std::vector<std::vector<double>> starts;
    for (const auto& w : opt.warm_starts) {
      if (w.size() != d) throw InvalidArgument("warm start dimension mismatch");
      auto s = region.clamped(w);
      for (std::size_t i = 0; i < int_idx.size(); ++i) s[int_idx[i]] = combo[i];
      starts.push_back(std::move(s));
    }
    if (free_idx.empty()) {
      // fully pinned: one evaluation per combo
      tr.eval(base);
      continue;
    }
    if (free_idx.size() == 1) {
      const std::size_t j = free_idx[0];
      const int g = std::max(2, opt.grid_points_1d);
      for (const auto& s : starts) {
        tr.eval(s);
        if (tr.stopped) break;
      }
      for (int i = 0; i < g && !tr.stopped; ++i) {
        std::vector<double> x = base;
        x[j] = region.lower[j] +
               (region.upper[j] - region.lower[j]) * i / (g - 1);
        tr.eval(x);
      }
      if (tr.stopped) break;
      if (!tr.res.argmax.empty()) {
        opt_detail::nelder_mead(&tr, region, free_idx, tr.res.argmax,
                                1.0 / (g - 1), opt.xtol,
                                opt.max_evals_per_start);
      }
      continue;
    }
    auto lhs = opt_detail::latin_hypercube(region, free_idx, opt.n_starts,
                                           opt.seed);
    for (auto& s : lhs) {
      for (std::size_t j = 0; j < d; ++j) {
        if (std::find(free_idx.begin(), free_idx.end(), j) == free_idx.end()) {
          s[j] = base[j];
        }
      }
      starts.push_back(std::move(s));
    }
    for (const auto& s : starts) {
      if (tr.stopped) break;
      if (opt.method == OptMethod::kQuasiNewtonBox) {
        opt_detail::quasi_newton(&tr, region, free_idx, s, opt.xtol,
                                 opt.max_evals_per_start);
      } else {
        opt_detail::nelder_mead(&tr, region, free_idx, s, opt.simplex_scale,
                                opt.xtol, opt.max_evals_per_start);
      }
    }
  }

  if (tr.res.argmax.empty()) {
    throw NumericError("optimize_rank: no finite objective evaluation");
  }
  return tr.res;
}

}  // namespace reprodp

#endif  // REPRODP_OPTIMIZE_HPP_

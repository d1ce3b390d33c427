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

#ifndef REPRODP_MODELS_HPP_
#define REPRODP_MODELS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reprodp/depth.hpp"
#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"
#include "reprodp/mathutil.hpp"
#include "reprodp/mechanisms.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {
namespace models_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline ParamBox scalar_box(const std::string& name, double lo, double hi) {
  ParamBox box;
  box.lower = {lo};
  box.upper = {hi};
  box.names = {name};
  box.integer = {false};
  box.interest_index = 0;
  return box;
}

// Per-seed sorted copy plus prefix sums of the values and their squares,
// so clamped means reduce to two binary searches per (seed, theta).
struct SortedPrefix {
  std::vector<double> sorted;
  std::vector<double> prefix1;  // prefix1[k] = sum of sorted[0..k-1]
  std::vector<double> prefix2;  // prefix2[k] = sum of squares

  explicit SortedPrefix(std::vector<double> values) : sorted(std::move(values)) {
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    prefix1.assign(n + 1, 0.0);
    prefix2.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      prefix1[i + 1] = prefix1[i] + sorted[i];
      prefix2[i + 1] = prefix2[i] + sorted[i] * sorted[i];
    }
  }

  std::size_t count_below(double t) const {
    return static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
  }
};

// Monotone interpolant of the Beta(a, b) quantile on (0,1). Knots are
// cosine-clustered toward both tails; endpoints are pinned to 0 and 1.
// Both the single-draw generator and the batch path use this table, so the
// model is defined by the interpolated quantile and the two paths agree
// exactly. Tail cells are narrower than 3e-4, keeping the interpolant
// within a fraction of a percent of the exact quantile away from extreme
// shape parameters.
class BetaQuantileTable {
 public:
  BetaQuantileTable(double a, double b, int knots = 96) {
    if (!(a > 0.0 && b > 0.0)) {
      throw InvalidArgument("BetaQuantileTable needs a, b > 0");
    }
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(knots));
    ys.reserve(static_cast<std::size_t>(knots));
    xs.push_back(0.0);
    ys.push_back(0.0);
    const double pi = 3.14159265358979323846;
    for (int k = 1; k + 1 < knots; ++k) {
      const double u =
          0.5 * (1.0 - std::cos(pi * static_cast<double>(k) /
                                static_cast<double>(knots - 1)));
      xs.push_back(u);
      ys.push_back(beta_quantile(a, b, u));
    }
    xs.push_back(1.0);
    ys.push_back(1.0);
    interp_ = MonotoneCubic(std::move(xs), std::move(ys));
  }

  double operator()(double u) const { return interp_(u); }

 private:
  MonotoneCubic interp_;
};

}  // namespace models_detail

// ---------------------------------------------------------------------------
// Bernoulli count with Tulap noise: s = sum_i 1{u_i <= p} + Tulap(0, e^-eps, 0).
// ---------------------------------------------------------------------------
inline ModelSpec bernoulli_tulap(int n, double epsilon) {
  if (n < 1) throw InvalidArgument("bernoulli_tulap needs n >= 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("bernoulli_tulap needs epsilon > 0");
  const double b = std::exp(-epsilon);

  ModelSpec m;
  m.name = "bernoulli";
  m.privacy_label = "eps-DP";
  m.box = models_detail::scalar_box("p", 0.0, 1.0);
  m.layout.data_dims = n;
  m.layout.data_kind = SlotKind::kUniform;
  m.layout.dp_kinds = {SlotKind::kUniform, SlotKind::kUniform, SlotKind::kUniform};
  m.summary_dim = 1;

  m.generator = [n, b](const std::vector<double>& theta, const Seed& seed) {
    const double p = theta[0];
    double count = 0.0;
    for (int i = 0; i < n; ++i) {
      if (seed.data[static_cast<std::size_t>(i)] <= p) count += 1.0;
    }
    const double noise = sample_tulap(seed.dp[0], seed.dp[1], seed.dp[2], b);
    return Summary({count + noise});
  };

  m.make_batch = [n, b](const SeedBank& bank) -> BatchGenerator {
    struct State {
      std::vector<std::vector<double>> sorted;
      std::vector<double> noise;
    };
    auto st = std::make_shared<State>();
    st->sorted.reserve(bank.seeds.size());
    st->noise.reserve(bank.seeds.size());
    for (const Seed& s : bank.seeds) {
      std::vector<double> v = s.data;
      std::sort(v.begin(), v.end());
      st->sorted.push_back(std::move(v));
      st->noise.push_back(sample_tulap(s.dp[0], s.dp[1], s.dp[2], b));
    }
    return [st](const std::vector<double>& theta, std::vector<Summary>* out) {
      const double p = theta[0];
      out->resize(st->sorted.size());
      for (std::size_t i = 0; i < st->sorted.size(); ++i) {
        const std::vector<double>& v = st->sorted[i];
        const double count = static_cast<double>(
            std::upper_bound(v.begin(), v.end(), p) - v.begin());
        (*out)[i] = Summary({count + st->noise[i]});
      }
    };
  };

  m.moment_estimate = [n](const Summary& s_obs) {
    const double p = s_obs[0] / static_cast<double>(n);
    return std::vector<double>{clamp(p, 0.0, 1.0)};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// ---------------------------------------------------------------------------
// Clamped Poisson mean with Gaussian noise:
//   s = (1/n) sum_i min(X_i, c) + (c / (n eps)) N,   X_i = F_theta^{-1}(u_i).
// c = 0 releases pure noise of scale zero; the model is kept but flagged
// non-identifiable. The clamp means draws above c never need to be resolved,
// so generation walks the Poisson cdf only up to c and huge theta stays cheap.
// ---------------------------------------------------------------------------
inline ModelSpec poisson_clamped(int n, int c, double epsilon,
                                 double theta_max = models_detail::kInf) {
  if (n < 1) throw InvalidArgument("poisson_clamped needs n >= 1");
  if (c < 0) throw InvalidArgument("poisson_clamped needs c >= 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("poisson_clamped needs epsilon > 0");
  if (!(theta_max > 0.0)) throw InvalidArgument("poisson_clamped needs theta_max > 0");
  const double scale = static_cast<double>(c) / (static_cast<double>(n) * epsilon);

  ModelSpec m;
  m.name = "poisson";
  m.privacy_label = "eps-GDP";
  m.box = models_detail::scalar_box("theta", 1e-6, theta_max);
  m.layout.data_dims = n;
  m.layout.data_kind = SlotKind::kUniform;
  m.layout.dp_kinds = {SlotKind::kNormal};
  m.summary_dim = 1;
  m.non_identifiable = (c == 0);

  // Clamped sum via the survival identity: sum_i min(X_i, c) equals
  // sum_{k=0}^{c-1} #{i : u_i > F(k)}.
  m.generator = [n, c, scale](const std::vector<double>& theta, const Seed& seed) {
    std::vector<double> cdf;
    if (c > 0) poisson_cdf_table(theta[0], c - 1, &cdf);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = seed.data[static_cast<std::size_t>(i)];
      for (int k = 0; k < c; ++k) {
        if (u > cdf[static_cast<std::size_t>(k)]) total += 1.0;
      }
    }
    const double mean = total / static_cast<double>(n);
    return Summary({mean + scale * seed.dp[0]});
  };

  m.make_batch = [n, c, scale](const SeedBank& bank) -> BatchGenerator {
    struct State {
      std::vector<std::vector<double>> sorted;
      std::vector<double> noise;
    };
    auto st = std::make_shared<State>();
    for (const Seed& s : bank.seeds) {
      std::vector<double> v = s.data;
      std::sort(v.begin(), v.end());
      st->sorted.push_back(std::move(v));
      st->noise.push_back(scale * s.dp[0]);
    }
    return [st, n, c](const std::vector<double>& theta, std::vector<Summary>* out) {
      std::vector<double> cdf;
      if (c > 0) poisson_cdf_table(theta[0], c - 1, &cdf);
      out->resize(st->sorted.size());
      for (std::size_t i = 0; i < st->sorted.size(); ++i) {
        const std::vector<double>& v = st->sorted[i];
        // Two-pointer pass: cdf is nondecreasing, so #{u <= F(k)} advances.
        double total = 0.0;
        std::size_t ptr = 0;
        for (int k = 0; k < c; ++k) {
          const double f = cdf[static_cast<std::size_t>(k)];
          while (ptr < v.size() && v[ptr] <= f) ++ptr;
          total += static_cast<double>(v.size() - ptr);
        }
        const double mean = total / static_cast<double>(n);
        (*out)[i] = Summary({mean + st->noise[i]});
      }
    };
  };

  m.moment_estimate = [theta_max](const Summary& s_obs) {
    double lo = 1e-6;
    double hi = std::isfinite(theta_max) ? theta_max : 1e12;
    return std::vector<double>{clamp(std::max(s_obs[0], lo), lo, hi)};
  };
  m.default_statistic = scalar_statistic(Orientation::kTwoSided);
  return m;
}

// ---------------------------------------------------------------------------
// Clamped normal location-scale, two additive releases:
//   s1 = mean of [x]_L^U + ((U-L)/(n eps)) W1
//   s2 = sample variance (n-1 denominator) of [x]_L^U + ((U-L)^2/(n eps)) W2
// with W Gaussian (each release eps-GDP) or Laplace of rate 1/2 (scale 2,
// so each release is eps/2-DP and the pair composes to eps-DP).
// ---------------------------------------------------------------------------
inline ModelSpec normal_locscale(int n, double clamp_lo, double clamp_hi,
                                 double epsilon, NoiseKind noise) {
  if (n < 2) throw InvalidArgument("normal_locscale needs n >= 2");
  if (!(clamp_lo < clamp_hi)) throw InvalidArgument("normal_locscale needs L < U");
  if (!(epsilon > 0.0)) throw InvalidArgument("normal_locscale needs epsilon > 0");
  const double width = clamp_hi - clamp_lo;
  const double scale1 = width / (static_cast<double>(n) * epsilon);
  const double scale2 = width * width / (static_cast<double>(n) * epsilon);
  const double lap_scale = 2.0;  // Laplace rate 1/2 per release

  ModelSpec m;
  m.name = "normal";
  m.privacy_label = noise == NoiseKind::kGaussian ? "sqrt2eps-GDP" : "eps-DP";
  m.box.lower = {-10.0, 1e-8};
  m.box.upper = {10.0, 10.0};
  m.box.names = {"mu", "sigma"};
  m.box.integer = {false, false};
  m.box.interest_index = 0;
  m.layout.data_dims = n;
  m.layout.data_kind = SlotKind::kNormal;
  m.layout.dp_kinds = {noise == NoiseKind::kGaussian ? SlotKind::kNormal : SlotKind::kUniform,
                       noise == NoiseKind::kGaussian ? SlotKind::kNormal : SlotKind::kUniform};
  m.summary_dim = 2;

  auto dp_draw = [noise, lap_scale](double seed) {
    return noise == NoiseKind::kGaussian ? seed : laplace_quantile(seed, lap_scale);
  };

  m.generator = [n, clamp_lo, clamp_hi, scale1, scale2, dp_draw](
                    const std::vector<double>& theta, const Seed& seed) {
    const double mu = theta[0], sigma = theta[1];
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = clamp(mu + sigma * seed.data[static_cast<std::size_t>(i)],
                             clamp_lo, clamp_hi);
      s1 += x;
      s2 += x * x;
    }
    const double mean = s1 / static_cast<double>(n);
    const double var =
        std::max(0.0, (s2 - static_cast<double>(n) * mean * mean)) /
        static_cast<double>(n - 1);
    return Summary({mean + scale1 * dp_draw(seed.dp[0]),
                    var + scale2 * dp_draw(seed.dp[1])});
  };

  m.make_batch = [n, clamp_lo, clamp_hi, scale1, scale2, dp_draw](
                     const SeedBank& bank) -> BatchGenerator {
    struct State {
      std::vector<models_detail::SortedPrefix> z;
      std::vector<double> noise1, noise2;
    };
    auto st = std::make_shared<State>();
    for (const Seed& s : bank.seeds) {
      st->z.emplace_back(s.data);
      st->noise1.push_back(scale1 * dp_draw(s.dp[0]));
      st->noise2.push_back(scale2 * dp_draw(s.dp[1]));
    }
    return [st, n, clamp_lo, clamp_hi](const std::vector<double>& theta,
                                       std::vector<Summary>* out) {
      const double mu = theta[0], sigma = theta[1];
      const double zlo = (clamp_lo - mu) / sigma;
      const double zhi = (clamp_hi - mu) / sigma;
      out->resize(st->z.size());
      for (std::size_t i = 0; i < st->z.size(); ++i) {
        const models_detail::SortedPrefix& sp = st->z[i];
        const std::size_t ilo = sp.count_below(zlo);
        const std::size_t ihi = sp.count_below(zhi);
        const double cnt_lo = static_cast<double>(ilo);
        const double cnt_hi = static_cast<double>(sp.sorted.size() - ihi);
        const double cnt_mid = static_cast<double>(ihi - ilo);
        const double sum_z = sp.prefix1[ihi] - sp.prefix1[ilo];
        const double sum_zz = sp.prefix2[ihi] - sp.prefix2[ilo];
        const double s1 = clamp_lo * cnt_lo + clamp_hi * cnt_hi +
                          sigma * sum_z + mu * cnt_mid;
        const double s2 = clamp_lo * clamp_lo * cnt_lo +
                          clamp_hi * clamp_hi * cnt_hi +
                          sigma * sigma * sum_zz + 2.0 * sigma * mu * sum_z +
                          mu * mu * cnt_mid;
        const double mean = s1 / static_cast<double>(n);
        const double var =
            std::max(0.0, (s2 - static_cast<double>(n) * mean * mean)) /
            static_cast<double>(n - 1);
        (*out)[i] = Summary({mean + st->noise1[i], var + st->noise2[i]});
      }
    };
  };

  m.moment_estimate = [](const Summary& s_obs) {
    const double mu = clamp(s_obs[0], -10.0, 10.0);
    const double sigma = clamp(std::sqrt(std::max(s_obs[1], 0.0)), 1e-8, 10.0);
    return std::vector<double>{mu, sigma};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// ---------------------------------------------------------------------------
// Simple linear regression through five clamped sufficient-statistic means,
// each privatized with Gaussian noise at budget mu/sqrt(5):
//   ([x]_{-D}^{D}, [x^2]_0^{D^2}, [y]_{-D}^{D}, [xy]_{-D^2}^{D^2}, [y^2]_0^{D^2})
// with noise scales (2D, D^2, 2D, 2D^2, D^2) / ((mu/sqrt(5)) n).
// theta = (beta1, beta0, E[X], Var(X), Var(eps)); interest is beta1.
// ---------------------------------------------------------------------------
inline ModelSpec linreg_ssp(int n, double delta, double mu_gdp) {
  if (n < 2) throw InvalidArgument("linreg_ssp needs n >= 2");
  if (!(delta > 0.0)) throw InvalidArgument("linreg_ssp needs delta > 0");
  if (!(mu_gdp > 0.0)) throw InvalidArgument("linreg_ssp needs mu > 0");
  const double budget = mu_gdp / std::sqrt(5.0);
  const double d2 = delta * delta;
  const std::vector<double> scales = {
      2.0 * delta / (budget * static_cast<double>(n)),
      d2 / (budget * static_cast<double>(n)),
      2.0 * delta / (budget * static_cast<double>(n)),
      2.0 * d2 / (budget * static_cast<double>(n)),
      d2 / (budget * static_cast<double>(n))};

  ModelSpec m;
  m.name = "linreg";
  m.privacy_label = "mu-GDP";
  m.box.lower = {-5.0, -5.0, -5.0, 1e-4, 1e-4};
  m.box.upper = {5.0, 5.0, 5.0, 10.0, 10.0};
  m.box.names = {"beta1", "beta0", "ex", "varx", "vare"};
  m.box.integer = std::vector<bool>(5, false);
  m.box.interest_index = 0;
  m.layout.data_dims = 2 * n;  // x-seeds then noise-seeds
  m.layout.data_kind = SlotKind::kNormal;
  m.layout.dp_kinds = std::vector<SlotKind>(5, SlotKind::kNormal);
  m.summary_dim = 5;

  auto summarize = [n, delta, d2](const std::vector<double>& theta,
                                  const double* zx, const double* ze,
                                  const double* noise, std::vector<double> scl) {
    const double b1 = theta[0], b0 = theta[1], ex = theta[2];
    const double sx = std::sqrt(theta[3]), se = std::sqrt(theta[4]);
    double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = ex + sx * zx[i];
      const double y = b0 + b1 * x + se * ze[i];
      t1 += clamp(x, -delta, delta);
      t2 += std::min(x * x, d2);
      t3 += clamp(y, -delta, delta);
      t4 += clamp(x * y, -d2, d2);
      t5 += std::min(y * y, d2);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    return Summary({t1 * inv_n + scl[0] * noise[0], t2 * inv_n + scl[1] * noise[1],
                    t3 * inv_n + scl[2] * noise[2], t4 * inv_n + scl[3] * noise[3],
                    t5 * inv_n + scl[4] * noise[4]});
  };

  m.generator = [n, scales, summarize](const std::vector<double>& theta,
                                       const Seed& seed) {
    return summarize(theta, seed.data.data(), seed.data.data() + n,
                     seed.dp.data(), scales);
  };

  m.make_batch = [n, scales, summarize](const SeedBank& bank) -> BatchGenerator {
    const SeedBank* b = &bank;
    return [b, n, scales, summarize](const std::vector<double>& theta,
                                     std::vector<Summary>* out) {
      out->resize(b->seeds.size());
      for (std::size_t i = 0; i < b->seeds.size(); ++i) {
        const Seed& s = b->seeds[i];
        (*out)[i] = summarize(theta, s.data.data(), s.data.data() + n,
                              s.dp.data(), scales);
      }
    };
  };

  m.moment_estimate = [](const Summary& s) {
    const double varx = clamp(s[1] - s[0] * s[0], 1e-4, 10.0);
    const double b1 = clamp((s[3] - s[0] * s[2]) / varx, -5.0, 5.0);
    const double b0 = clamp(s[2] - b1 * s[0], -5.0, 5.0);
    const double ex = clamp(s[0], -5.0, 5.0);
    const double vare = clamp(s[4] - s[2] * s[2] - b1 * b1 * varx, 1e-4, 10.0);
    return std::vector<double>{b1, b0, ex, varx, vare};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// ---------------------------------------------------------------------------
// Logistic regression with rescaled-beta covariates:
//   z_i = BetaInv(a, b)(u_i), x_i = 2 z_i - 1, y_i ~ Bernoulli(expit(b0+b1 x)).
// Release: objective-perturbation fit of (b0, b1) under a `share` fraction of
// the budget, plus the K-norm mechanism on (sum z, sum z^2) under the rest,
// using the hull-norm ball of that statistic's sensitivity space.
// theta = (beta0, beta1, a, b); interest is beta1.
// ---------------------------------------------------------------------------
inline ModelSpec logistic_objpert(int n, double epsilon, double share = 0.9) {
  if (n < 1) throw InvalidArgument("logistic_objpert needs n >= 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("logistic_objpert needs epsilon > 0");
  if (!(share > 0.0 && share < 1.0)) {
    throw InvalidArgument("logistic_objpert needs share in (0,1)");
  }
  ObjPertConfig cfg;
  cfg.epsilon = share * epsilon;
  cfg.q = 0.85;
  cfg.lambda = 0.25;
  cfg.delta_inf = 2.0;
  cfg.m = 2;
  const double linf_rate = cfg.epsilon * cfg.q / cfg.delta_inf;
  const double eps_knorm = (1.0 - share) * epsilon;

  ModelSpec m;
  m.name = "logistic";
  m.privacy_label = "eps-DP";
  m.box.lower = {-10.0, -10.0, 0.1, 0.1};
  m.box.upper = {10.0, 10.0, 10.0, 10.0};
  m.box.names = {"beta0", "beta1", "a", "b"};
  m.box.integer = std::vector<bool>(4, false);
  m.box.interest_index = 1;
  m.layout.data_dims = 2 * n;  // covariate seeds then label seeds
  m.layout.data_kind = SlotKind::kUniform;
  m.layout.dp_kinds = std::vector<SlotKind>(4, SlotKind::kUniform);
  m.summary_dim = 4;

  // One summary from prepared DP draws; shared by generator and batch.
  auto summarize = [n, cfg](const std::vector<double>& theta, const double* uz,
                            const double* uy, const std::vector<double>& v,
                            const double* knoise,
                            const models_detail::BetaQuantileTable& table,
                            std::vector<double>* xbuf, std::vector<double>* ybuf) {
    const double b0 = theta[0], b1 = theta[1];
    xbuf->resize(static_cast<std::size_t>(n));
    ybuf->resize(static_cast<std::size_t>(n));
    double t1 = 0.0, t2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = table(uz[i]);
      const double x = 2.0 * z - 1.0;
      (*xbuf)[static_cast<std::size_t>(i)] = x;
      (*ybuf)[static_cast<std::size_t>(i)] = uy[i] <= expit(b0 + b1 * x) ? 1.0 : 0.0;
      t1 += z;
      t2 += z * z;
    }
    const std::vector<double>& xv = *xbuf;
    const std::vector<double>& yv = *ybuf;
    LossFn loss = [&xv, &yv, n](const std::vector<double>& th,
                                std::vector<double>* grad,
                                std::vector<double>* hess) {
      double total = 0.0;
      if (grad != nullptr) grad->assign(2, 0.0);
      if (hess != nullptr) hess->assign(4, 0.0);
      for (int i = 0; i < n; ++i) {
        const double x = xv[static_cast<std::size_t>(i)];
        const double y = yv[static_cast<std::size_t>(i)];
        const double w = th[0] + th[1] * x;
        // log(1 + e^w) - y w, evaluated stably on both signs of w.
        total += (w > 0.0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w))) - y * w;
        if (grad != nullptr || hess != nullptr) {
          const double p = expit(w);
          if (grad != nullptr) {
            (*grad)[0] += p - y;
            (*grad)[1] += (p - y) * x;
          }
          if (hess != nullptr) {
            const double h = p * (1.0 - p);
            (*hess)[0] += h;
            (*hess)[1] += h * x;
            (*hess)[2] += h * x;
            (*hess)[3] += h * x * x;
          }
        }
      }
      return total;
    };
    std::vector<double> beta = objective_perturbation(loss, 2, n, cfg, v);
    return Summary({beta[0], beta[1], t1 + knoise[0], t2 + knoise[1]});
  };

  const NormBall ball = hull_ball();
  auto dp_prepare = [linf_rate, eps_knorm, ball](const Seed& seed,
                                                 std::vector<double>* v,
                                                 std::vector<double>* knoise) {
    *v = sample_linf_density(linf_rate, 2, {seed.dp[0], seed.dp[1], seed.dp[2]});
    *knoise = knorm_mechanism({0.0, 0.0}, ball, eps_knorm, 1.0, seed.dp[3],
                              seed.rejection);
  };

  m.generator = [n, summarize, dp_prepare](const std::vector<double>& theta,
                                           const Seed& seed) {
    models_detail::BetaQuantileTable table(theta[2], theta[3]);
    std::vector<double> v, knoise, xbuf, ybuf;
    dp_prepare(seed, &v, &knoise);
    return summarize(theta, seed.data.data(), seed.data.data() + n, v,
                     knoise.data(), table, &xbuf, &ybuf);
  };

  m.make_batch = [n, summarize, dp_prepare](const SeedBank& bank) -> BatchGenerator {
    struct State {
      const SeedBank* bank = nullptr;
      std::vector<std::vector<double>> v, knoise;
      std::vector<double> xbuf, ybuf;
    };
    auto st = std::make_shared<State>();
    st->bank = &bank;
    st->v.resize(bank.seeds.size());
    st->knoise.resize(bank.seeds.size());
    for (std::size_t i = 0; i < bank.seeds.size(); ++i) {
      dp_prepare(bank.seeds[i], &st->v[i], &st->knoise[i]);
    }
    return [st, n, summarize](const std::vector<double>& theta,
                              std::vector<Summary>* out) {
      models_detail::BetaQuantileTable table(theta[2], theta[3]);
      out->resize(st->bank->seeds.size());
      for (std::size_t i = 0; i < st->bank->seeds.size(); ++i) {
        const Seed& s = st->bank->seeds[i];
        (*out)[i] = summarize(theta, s.data.data(), s.data.data() + n, st->v[i],
                              st->knoise[i].data(), table, &st->xbuf, &st->ybuf);
      }
    };
  };

  m.moment_estimate = [n](const Summary& s) {
    const double b0 = clamp(s[0], -10.0, 10.0);
    const double b1 = clamp(s[1], -10.0, 10.0);
    const double m1 = clamp(s[2] / static_cast<double>(n), 0.02, 0.98);
    const double m2 = s[3] / static_cast<double>(n);
    const double var = clamp(m2 - m1 * m1, 1e-4, 0.24);
    const double t = m1 * (1.0 - m1) / var - 1.0;
    const double a = clamp(m1 * t, 0.1, 10.0);
    const double b = clamp((1.0 - m1) * t, 0.1, 10.0);
    return std::vector<double>{b0, b1, a, b};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// ---------------------------------------------------------------------------
// Clamped exponential mean with Laplace noise:
//   s = (1/n) sum_i min(x_i, c) + (c/(n eps)) W,  x_i = -mu log(1 - u_i),
// W Laplace(0, 1).
// ---------------------------------------------------------------------------
inline ModelSpec exponential_clamped(int n, double c, double epsilon) {
  if (n < 1) throw InvalidArgument("exponential_clamped needs n >= 1");
  if (!(c > 0.0)) throw InvalidArgument("exponential_clamped needs c > 0");
  if (!(epsilon > 0.0)) throw InvalidArgument("exponential_clamped needs epsilon > 0");
  const double scale = c / (static_cast<double>(n) * epsilon);

  ModelSpec m;
  m.name = "exponential";
  m.privacy_label = "eps-DP";
  m.box = models_detail::scalar_box("mu", 1e-6, 100.0);
  m.layout.data_dims = n;
  m.layout.data_kind = SlotKind::kUniform;
  m.layout.dp_kinds = {SlotKind::kUniform};
  m.summary_dim = 1;

  m.generator = [n, c, scale](const std::vector<double>& theta, const Seed& seed) {
    const double mu = theta[0];
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = -std::log1p(-seed.data[static_cast<std::size_t>(i)]);
      total += std::min(mu * e, c);
    }
    const double mean = total / static_cast<double>(n);
    return Summary({mean + scale * laplace_quantile(seed.dp[0])});
  };

  m.make_batch = [n, c, scale](const SeedBank& bank) -> BatchGenerator {
    struct State {
      std::vector<models_detail::SortedPrefix> unit;  // exponential(1) draws
      std::vector<double> noise;
    };
    auto st = std::make_shared<State>();
    for (const Seed& s : bank.seeds) {
      std::vector<double> e(s.data.size());
      for (std::size_t i = 0; i < s.data.size(); ++i) {
        e[i] = -std::log1p(-s.data[i]);
      }
      st->unit.emplace_back(std::move(e));
      st->noise.push_back(scale * laplace_quantile(s.dp[0]));
    }
    return [st, n, c](const std::vector<double>& theta, std::vector<Summary>* out) {
      const double mu = theta[0];
      const double cut = c / mu;
      out->resize(st->unit.size());
      for (std::size_t i = 0; i < st->unit.size(); ++i) {
        const models_detail::SortedPrefix& sp = st->unit[i];
        const std::size_t idx = sp.count_below(cut);
        const double total = mu * sp.prefix1[idx] +
                             c * static_cast<double>(sp.sorted.size() - idx);
        (*out)[i] = Summary({total / static_cast<double>(n) + st->noise[i]});
      }
    };
  };

  m.moment_estimate = [](const Summary& s) {
    return std::vector<double>{clamp(std::max(s[0], 1e-6), 1e-6, 100.0)};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// ---------------------------------------------------------------------------
// Binomial count with unknown population size, two Gaussian releases:
//   s = (X + Z1/eps, n - X + Z2/eps),  X = BinomInv(n, p)(u).
// theta = (p, n) with integer n enumerated over its box.
// ---------------------------------------------------------------------------
inline ModelSpec bernoulli_unknown_n(double epsilon, long n_lo = 1,
                                     long n_hi = 1000) {
  if (!(epsilon > 0.0)) throw InvalidArgument("bernoulli_unknown_n needs epsilon > 0");
  if (n_lo < 1 || n_hi < n_lo) {
    throw InvalidArgument("bernoulli_unknown_n needs 1 <= n_lo <= n_hi");
  }

  ModelSpec m;
  m.name = "bernoulli-unknown-n";
  m.privacy_label = "eps-GDP";
  m.box.lower = {0.0, static_cast<double>(n_lo)};
  m.box.upper = {1.0, static_cast<double>(n_hi)};
  m.box.names = {"p", "n"};
  m.box.integer = {false, true};
  m.box.interest_index = 0;
  m.layout.data_dims = 1;
  m.layout.data_kind = SlotKind::kUniform;
  m.layout.dp_kinds = {SlotKind::kNormal, SlotKind::kNormal};
  m.summary_dim = 2;

  m.generator = [epsilon](const std::vector<double>& theta, const Seed& seed) {
    const double p = theta[0];
    const int n = static_cast<int>(std::llround(theta[1]));
    double x;
    if (p <= 0.0) {
      x = 0.0;
    } else if (p >= 1.0) {
      x = static_cast<double>(n);
    } else {
      x = binomial_quantile(seed.data[0], n, p);
    }
    return Summary({x + seed.dp[0] / epsilon,
                    static_cast<double>(n) - x + seed.dp[1] / epsilon});
  };

  m.moment_estimate = [n_lo, n_hi](const Summary& s) {
    const double total = std::max(s[0] + s[1], 1.0);
    const double n = clamp(std::round(total), static_cast<double>(n_lo),
                           static_cast<double>(n_hi));
    const double p = clamp(s[0] / total, 0.0, 1.0);
    return std::vector<double>{p, n};
  };
  m.default_statistic = mahalanobis_statistic();
  return m;
}

// Approximate-pivot statistic for the unknown-n model, folded two-sided:
//   T = (s1 - n_hat p) / sqrt(n_hat p (1-p) + (p^2 + (1-p)^2)/eps^2),
//   n_hat = max(s1 + s2, 1).
inline TestStatistic unknown_n_pivot_statistic(double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("unknown_n_pivot_statistic needs epsilon > 0");
  return pivot_statistic(
      [epsilon](const std::vector<double>& theta, const Summary& s) {
        const double p = theta[0];
        const double n_hat = std::max(s[0] + s[1], 1.0);
        const double var = n_hat * p * (1.0 - p) +
                           (p * p + (1.0 - p) * (1.0 - p)) / (epsilon * epsilon);
        return (s[0] - n_hat * p) / std::sqrt(var);
      },
      Orientation::kTwoSided, "unknown-n-pivot");
}

// Preliminary integer range for the unknown population size: s1 + s2 is
// n plus Gaussian noise of variance 2/eps^2, so a `coverage` two-sided
// normal interval around it contains n with the stated probability. Callers
// shrink the parameter box to this range and spend the leftover error budget
// by testing at level alpha - (1 - coverage).
inline std::pair<long, long> unknown_n_range(const Summary& s_obs, double epsilon,
                                             double coverage = 0.9999) {
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw InvalidArgument("unknown_n_range needs coverage in (0,1)");
  }
  const double z = normal_quantile(1.0 - 0.5 * (1.0 - coverage));
  const double total = s_obs[0] + s_obs[1];
  const double half = z * std::sqrt(2.0) / epsilon;
  const long lo = std::max(1L, static_cast<long>(std::ceil(total - half)));
  const long hi = std::max(lo, static_cast<long>(std::floor(total + half)));
  return {lo, hi};
}

// Approximate-pivot statistic for the private Mann-Whitney release, folded
// two-sided. With m_hat = min(max(m_tilde, 1), n/2),
//   T = (U_tilde - (n - m_tilde) m_tilde / 2 - 1/eps_m^2)
//       / sqrt(m_hat (n - m_hat)(n+1)/12 + 2 n^2 / eps_u^2
//              + (n - 2 m_hat)^2 / (2 eps_m^2) + 1/(2 eps_m^4)).
inline TestStatistic mann_whitney_pivot_statistic(int n, double eps_m,
                                                  double eps_u) {
  if (n < 2 || !(eps_m > 0.0 && eps_u > 0.0)) {
    throw InvalidArgument("mann_whitney_pivot_statistic needs n >= 2, eps > 0");
  }
  const double nd = static_cast<double>(n);
  return pivot_statistic(
      [nd, eps_m, eps_u](const std::vector<double>&, const Summary& s) {
        const double mt = s[0], ut = s[1];
        const double mh = std::min(std::max(mt, 1.0), nd / 2.0);
        const double center = (nd - mt) * mt / 2.0 + 1.0 / (eps_m * eps_m);
        const double var = mh * (nd - mh) * (nd + 1.0) / 12.0 +
                           2.0 * nd * nd / (eps_u * eps_u) +
                           (nd - 2.0 * mh) * (nd - 2.0 * mh) / (2.0 * eps_m * eps_m) +
                           1.0 / (2.0 * eps_m * eps_m * eps_m * eps_m);
        return (ut - center) / std::sqrt(var);
      },
      Orientation::kTwoSided, "mann-whitney-pivot");
}

// ---------------------------------------------------------------------------
// Private Mann-Whitney test of equal distributions between a group of size
// m and the remaining n - m observations:
//   U1 = sum of group-1 ranks - m(m+1)/2,  U = min(U1, (n-m)m - U1),
//   s = (m + W1/eps_m, U + n W2/eps_u)
// with W Laplace(0,1) (pure DP) or standard Gaussian (GDP).
// `beta_alternative` switches group 2 to Beta(2,5) draws; the null model
// keeps every observation uniform.
// ---------------------------------------------------------------------------
inline ModelSpec mann_whitney(int n, double eps_m, double eps_u, NoiseKind noise,
                              bool beta_alternative = false) {
  if (n < 2) throw InvalidArgument("mann_whitney needs n >= 2");
  if (!(eps_m > 0.0 && eps_u > 0.0)) {
    throw InvalidArgument("mann_whitney needs eps_m, eps_u > 0");
  }
  const double scale_m = 1.0 / eps_m;
  const double scale_u = static_cast<double>(n) / eps_u;

  ModelSpec m;
  m.name = beta_alternative ? "mann-whitney-beta" : "mann-whitney";
  m.privacy_label = noise == NoiseKind::kGaussian ? "eps-GDP" : "eps-DP";
  m.box = models_detail::scalar_box("m", 1.0, std::floor(static_cast<double>(n) / 2.0));
  m.box.integer = {true};
  m.layout.data_dims = n;
  m.layout.data_kind = SlotKind::kUniform;
  const SlotKind dp_kind =
      noise == NoiseKind::kGaussian ? SlotKind::kNormal : SlotKind::kUniform;
  m.layout.dp_kinds = {dp_kind, dp_kind};
  m.summary_dim = 2;

  auto dp_draw = [noise](double seed) {
    return noise == NoiseKind::kGaussian ? seed : laplace_quantile(seed);
  };

  // Rank prefix: P[k] = sum of the overall ranks (1-based) of entries
  // 0..k-1. Group 1 is always the first m entries, so U1(m) = P[m] -
  // m(m+1)/2 for every m in one pass.
  auto rank_prefix = [n, beta_alternative](const std::vector<double>& data,
                                           int m_group) {
    std::vector<double> x(data);
    if (beta_alternative) {
      for (int i = m_group; i < n; ++i) {
        x[static_cast<std::size_t>(i)] =
            beta_quantile(2.0, 5.0, x[static_cast<std::size_t>(i)]);
      }
    }
    std::vector<int> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&x](int a, int b) { return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)]; });
    std::vector<double> rank(x.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      rank[static_cast<std::size_t>(order[r])] = static_cast<double>(r + 1);
    }
    std::vector<double> prefix(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + rank[i];
    return prefix;
  };

  auto release = [n, scale_m, scale_u](int m_group, const std::vector<double>& prefix,
                                       double noise1, double noise2) {
    const double md = static_cast<double>(m_group);
    const double u1 = prefix[static_cast<std::size_t>(m_group)] - md * (md + 1.0) / 2.0;
    const double u = std::min(u1, (static_cast<double>(n) - md) * md - u1);
    return Summary({md + scale_m * noise1, u + scale_u * noise2});
  };

  m.generator = [rank_prefix, release, dp_draw](const std::vector<double>& theta,
                                                const Seed& seed) {
    const int m_group = static_cast<int>(std::llround(theta[0]));
    const std::vector<double> prefix = rank_prefix(seed.data, m_group);
    return release(m_group, prefix, dp_draw(seed.dp[0]), dp_draw(seed.dp[1]));
  };

  if (!beta_alternative) {
    // Under the null the rank prefix does not depend on theta, so each bank
    // seed reduces to an O(1) lookup per candidate group size.
    m.make_batch = [rank_prefix, release, dp_draw](const SeedBank& bank) -> BatchGenerator {
      struct State {
        std::vector<std::vector<double>> prefix;
        std::vector<double> noise1, noise2;
      };
      auto st = std::make_shared<State>();
      for (const Seed& s : bank.seeds) {
        st->prefix.push_back(rank_prefix(s.data, 0));
        st->noise1.push_back(dp_draw(s.dp[0]));
        st->noise2.push_back(dp_draw(s.dp[1]));
      }
      return [st, release](const std::vector<double>& theta, std::vector<Summary>* out) {
        const int m_group = static_cast<int>(std::llround(theta[0]));
        out->resize(st->prefix.size());
        for (std::size_t i = 0; i < st->prefix.size(); ++i) {
          (*out)[i] = release(m_group, st->prefix[i], st->noise1[i], st->noise2[i]);
        }
      };
    };
  }

  m.moment_estimate = [n](const Summary& s) {
    const double cap = std::floor(static_cast<double>(n) / 2.0);
    return std::vector<double>{clamp(std::round(s[0]), 1.0, cap)};
  };
  m.default_statistic = mann_whitney_pivot_statistic(n, eps_m, eps_u);
  return m;
}

// ---------------------------------------------------------------------------
// Registry.
// ---------------------------------------------------------------------------
inline std::vector<std::string> model_names() {
  return {"bernoulli", "poisson",     "normal",
          "linreg",    "logistic",    "exponential",
          "bernoulli-unknown-n",      "mann-whitney"};
}

}  // namespace reprodp

#endif  // REPRODP_MODELS_HPP_

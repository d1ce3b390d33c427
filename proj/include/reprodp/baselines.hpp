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

#ifndef REPRODP_BASELINES_HPP_
#define REPRODP_BASELINES_HPP_

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"
#include "reprodp/inference.hpp"
#include "reprodp/mathutil.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {

using CharFn = std::function<std::complex<double>(double)>;

// Characteristic function of min(X, c) for X exponential with mean mu:
//   phi(t) = (1 - e^{c(it - 1/mu)}) / (1 - it mu) + e^{itc - c/mu}.
inline CharFn cf_clamped_exponential(double mu, double c) {
  if (!(mu > 0.0 && c > 0.0)) {
    throw InvalidArgument("cf_clamped_exponential needs mu, c > 0");
  }
  return [mu, c](double t) {
    const std::complex<double> it(0.0, t);
    const std::complex<double> num =
        1.0 - std::exp(c * (it - 1.0 / mu));
    const std::complex<double> atom = std::exp(it * c - c / mu);
    return num / (1.0 - it * mu) + atom;
  };
}

// Characteristic function of the private clamped-exponential mean
//   s = (1/n) sum_i min(x_i, c) + (c/(n eps)) W,  W ~ Laplace(0,1):
//   phi_s(t) = phi_min(t/n)^n / (1 + (c t /(n eps))^2).
// The integer power is computed as exp(n log z), which is branch-safe for
// integer exponents.
inline CharFn cf_private_exponential_mean(double mu, double c, int n,
                                          double eps) {
  if (n < 1 || !(eps > 0.0)) {
    throw InvalidArgument("cf_private_exponential_mean needs n >= 1, eps > 0");
  }
  const CharFn base = cf_clamped_exponential(mu, c);
  const double a = c / (static_cast<double>(n) * eps);
  return [base, n, a](double t) {
    const std::complex<double> z = base(t / static_cast<double>(n));
    const std::complex<double> zn =
        z == std::complex<double>(0.0, 0.0)
            ? std::complex<double>(0.0, 0.0)
            : std::exp(static_cast<double>(n) * std::log(z));
    return zn / (1.0 + (a * t) * (a * t));
  };
}

namespace baselines_detail {

// Analytic envelope pieces used to certify truncation of the Gil-Pelaez
// integral for the private exponential mean: |phi_s(t)| is at most
//   min(1, ((1 + e^{-c/mu}) / sqrt(1 + (t mu / n)^2) + e^{-c/mu})^n)
//     / (1 + (c t/(n eps))^2),
// and the bound is nonincreasing in t, so the tail past T integrates to at
// most envelope_head(T)^n * (1/2) log(1 + 1/(aT)^2) with a = c/(n eps).
struct ExponentialEnvelope {
  double mu = 1.0, c = 1.0, a = 0.1;
  int n = 1;

  double head(double t) const {
    const double tau = t * mu / static_cast<double>(n);
    const double atom = std::exp(-c / mu);
    const double cont = (1.0 + atom) / std::sqrt(1.0 + tau * tau);
    return std::min(1.0, cont + atom);
  }

  double tail_bound(double t) const {
    const double q = head(t);
    const double qn = std::pow(q, static_cast<double>(n));
    const double z = a * t;
    if (!(z > 0.0)) return qn * 1e300;
    return qn * 0.5 * std::log1p(1.0 / (z * z));
  }
};

}  // namespace baselines_detail

// Gil-Pelaez inversion: F(x) = 1/2 - (1/pi) Int_0^inf Im(e^{-itx} phi(t))/t dt.
// The integrand is integrated panel by panel with 61-point Gauss-Kronrod
// rules, panel width set to roughly ten oscillation periods of the phase
// rate `osc_rate`, until `tail_bound(t)` certifies the remainder is below
// `tail_tol`. Throws NumericError if the certificate is never met.
inline double gil_pelaez_cdf(const CharFn& phi, double x, double osc_rate,
                             const std::function<double(double)>& tail_bound,
                             double tail_tol = 1e-10) {
  namespace bq = boost::math::quadrature;
  const double rate = std::max(osc_rate, 1.0);
  const double width = 20.0 * 3.14159265358979323846 / rate;
  auto integrand = [&phi, x](double t) {
    const std::complex<double> e(std::cos(t * x), -std::sin(t * x));
    return (e * phi(t)).imag() / t;
  };
  double total = 0.0;
  double t0 = 0.0;
  constexpr int kMaxPanels = 200000;
  for (int k = 0; k < kMaxPanels; ++k) {
    const double t1 = t0 + width;
    total += bq::gauss_kronrod<double, 61>::integrate(integrand, t0, t1, 0);
    t0 = t1;
    if (tail_bound(t0) < tail_tol) {
      const double f = 0.5 - total / 3.14159265358979323846;
      return std::min(1.0, std::max(0.0, f));
    }
  }
  throw NumericError("gil_pelaez_cdf: tail certificate not met after 2e5 panels");
}

// Distribution function of the private clamped-exponential mean at x,
// as a function of the true mean mu.
inline double exponential_mean_cdf(double mu, double c, int n, double eps,
                                   double x) {
  const CharFn phi = cf_private_exponential_mean(mu, c, n, eps);
  baselines_detail::ExponentialEnvelope env;
  env.mu = mu;
  env.c = c;
  env.n = n;
  env.a = c / (static_cast<double>(n) * eps);
  const double rate = std::max(std::fabs(x), std::fabs(c - x)) + 1.0;
  return gil_pelaez_cdf(
      phi, x, rate, [env](double t) { return env.tail_bound(t); });
}

// Exact confidence interval for the clamped-exponential mean by inverting
// the released summary's distribution function: mu is kept when
// F_mu(s_obs) lies in [alpha/2, 1 - alpha/2]. F_mu(s) is decreasing in mu,
// so each endpoint is a monotone bisection. Throws BracketError when the
// whole interval falls outside [mu_lo, mu_hi].
inline ConfidenceInterval exponential_inversion_ci(double s_obs, double c,
                                                   int n, double eps,
                                                   double alpha,
                                                   double mu_lo = 1e-6,
                                                   double mu_hi = 100.0,
                                                   double rel_tol = 1e-6) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("exponential_inversion_ci needs alpha in (0,1)");
  }
  if (!(mu_lo > 0.0 && mu_lo < mu_hi)) {
    throw InvalidArgument("exponential_inversion_ci needs 0 < mu_lo < mu_hi");
  }
  auto cdf = [c, n, eps, s_obs](double mu) {
    return exponential_mean_cdf(mu, c, n, eps, s_obs);
  };
  const double f_lo = cdf(mu_lo);   // largest F over the box
  const double f_hi = cdf(mu_hi);   // smallest F over the box
  if (f_lo < alpha / 2.0) {
    throw BracketError("exponential_inversion_ci: data below the search range");
  }
  if (f_hi > 1.0 - alpha / 2.0) {
    throw BracketError("exponential_inversion_ci: data above the search range");
  }
  // Decreasing root finder: returns mu in [lo, hi] with F(mu) = target.
  auto bisect = [&cdf, rel_tol](double lo, double hi, double target) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (hi - lo <= rel_tol * std::max(1.0, std::fabs(mid))) return mid;
      if (cdf(mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  ConfidenceInterval ci;
  ci.alpha = alpha;
  // Lower endpoint: smallest mu with F_mu(s) <= 1 - alpha/2.
  ci.lower = f_lo <= 1.0 - alpha / 2.0 ? mu_lo
                                       : bisect(mu_lo, mu_hi, 1.0 - alpha / 2.0);
  // Upper endpoint: largest mu with F_mu(s) >= alpha/2.
  ci.upper = f_hi >= alpha / 2.0 ? mu_hi : bisect(mu_lo, mu_hi, alpha / 2.0);
  if (ci.lower > ci.upper) {
    const double mid = 0.5 * (ci.lower + ci.upper);
    ci.lower = ci.upper = mid;
  }
  return ci;
}

// ---------------------------------------------------------------------------
// Parametric bootstrap.
// ---------------------------------------------------------------------------
struct BootstrapResult {
  ConfidenceInterval percentile;
  ConfidenceInterval simplified_t;
  std::vector<double> estimate;  // plug-in theta-hat at s_obs
};

// Plug-in parametric bootstrap for one coordinate of theta: resample
// s_b = G(theta_hat, u_b) on dedicated bootstrap streams, re-estimate, and
// report the percentile interval [q_{a/2}, q_{1-a/2}] plus the simplified-t
// variant [2 theta_hat - q_{1-a/2}, 2 theta_hat - q_{a/2}]. The two intervals
// always have identical width.
inline BootstrapResult parametric_bootstrap_ci(const ModelSpec& model,
                                               const Summary& s_obs, int coord,
                                               double alpha, int B,
                                               std::uint64_t master_seed) {
  if (B < 2) throw InvalidArgument("parametric_bootstrap_ci needs B >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("parametric_bootstrap_ci needs alpha in (0,1)");
  }
  if (coord < 0 || coord >= model.box.dim()) {
    throw InvalidArgument("parametric_bootstrap_ci: coord out of range");
  }
  BootstrapResult out;
  out.estimate = model.moment_estimate(s_obs);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const Seed seed =
        draw_seed(model.layout, master_seed,
                  stream_id::bootstrap(static_cast<std::uint64_t>(b)),
                  stream_id::rejection(0x40000000ULL + static_cast<std::uint64_t>(b)));
    const Summary s = model.generator(out.estimate, seed);
    draws.push_back(model.moment_estimate(s)[static_cast<std::size_t>(coord)]);
  }
  const double q_lo = quantile_type7(draws, alpha / 2.0);
  const double q_hi = quantile_type7(draws, 1.0 - alpha / 2.0);
  out.percentile.alpha = alpha;
  out.percentile.lower = q_lo;
  out.percentile.upper = q_hi;
  out.simplified_t.alpha = alpha;
  const double center = 2.0 * out.estimate[static_cast<std::size_t>(coord)];
  out.simplified_t.lower = center - q_hi;
  out.simplified_t.upper = center - q_lo;
  return out;
}

}  // namespace reprodp

#endif  // REPRODP_BASELINES_HPP_

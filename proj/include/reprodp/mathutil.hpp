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

#ifndef REPRODP_MATHUTIL_HPP_
#define REPRODP_MATHUTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "reprodp/error.hpp"

namespace reprodp {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("normal_quantile needs u in (0,1)");
  }
  return 1.41421356237309504880 * boost::math::erf_inv(2.0 * u - 1.0);
}

// Quantile of Laplace(0, scale). Median seed (u = 1/2) maps to exactly 0.
inline double laplace_quantile(double u, double scale = 1.0) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("laplace_quantile needs u in (0,1)");
  }
  const double v = u - 0.5;
  if (v == 0.0) return 0.0;
  const double m = -std::log1p(-2.0 * std::fabs(v));
  return (v > 0.0 ? m : -m) * scale;
}

inline double expit(double w) {
  if (w >= 0.0) {
    const double e = std::exp(-w);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(w);
  return e / (1.0 + e);
}

// Quantile of Gamma(shape, rate).
inline double gamma_quantile(double shape, double rate, double u) {
  if (!(shape > 0.0 && rate > 0.0)) {
    throw InvalidArgument("gamma_quantile needs shape, rate > 0");
  }
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("gamma_quantile needs u in (0,1)");
  }
  return boost::math::gamma_p_inv(shape, u) / rate;
}

// Quantile of Beta(a, b).
inline double beta_quantile(double a, double b, double u) {
  if (!(a > 0.0 && b > 0.0)) {
    throw InvalidArgument("beta_quantile needs a, b > 0");
  }
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return boost::math::ibeta_inv(a, b, u);
}

// Poisson quantile by cumulative pmf walk. Errors past mean + 20*sqrt(mean):
// seeds that far out indicate a misuse, not a distributional tail we model.
inline double poisson_quantile(double u, double theta) {
  if (!(theta > 0.0)) throw InvalidArgument("poisson_quantile needs theta > 0");
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("poisson_quantile needs u in (0,1)");
  }
  const double cap = theta + 20.0 * std::sqrt(theta) + 1.0;
  double pmf = std::exp(-theta);
  double cdf = pmf;
  double k = 0.0;
  while (cdf < u) {
    if (k > cap) {
      throw NumericError("poisson_quantile walked past mean + 20*sqrt(mean)");
    }
    k += 1.0;
    pmf *= theta / k;
    cdf += pmf;
  }
  return k;
}

// Cumulative Poisson table F(0..kmax); entries may underflow to 0 for huge
// theta, which correctly sends every draw past the table.
inline void poisson_cdf_table(double theta, int kmax, std::vector<double>* out) {
  out->resize(static_cast<std::size_t>(kmax) + 1);
  double pmf = std::exp(-theta);
  double cdf = pmf;
  (*out)[0] = cdf;
  for (int k = 1; k <= kmax; ++k) {
    pmf *= theta / k;
    cdf += pmf;
    (*out)[static_cast<std::size_t>(k)] = cdf;
  }
}

// Binomial(n, p) quantile by cumulative pmf walk.
inline double binomial_quantile(double u, int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument("binomial_quantile needs n >= 0, p in [0,1]");
  }
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("binomial_quantile needs u in (0,1)");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return n;
  const double ratio = p / (1.0 - p);
  double pmf = std::pow(1.0 - p, n);
  double cdf = pmf;
  int k = 0;
  while (cdf < u && k < n) {
    pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pmf;
  }
  return k;
}

// Type-7 sample quantile (linear interpolation of order statistics).
inline double quantile_type7(std::vector<double> x, double p) {
  if (x.empty()) throw InvalidArgument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile needs p in [0,1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

// Ordinary least squares y ~ a + b*x; returns {intercept, slope, r2}.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("fit_line needs matching vectors, length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw NumericError("fit_line: degenerate x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// Monotone cubic interpolant (Fritsch-Carlson / PCHIP derivative weights).
// Knots must be strictly increasing in x and monotone in y.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
      throw InvalidArgument("MonotoneCubic needs >= 2 matching knots");
    }
    m_.assign(n, 0.0);
    std::vector<double> d(n - 1), h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0.0)) throw InvalidArgument("MonotoneCubic knots not increasing");
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] == 0.0 || d[i] == 0.0 || (d[i - 1] > 0) != (d[i] > 0)) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
  }

  double operator()(double q) const {
    const std::size_t n = x_.size();
    if (q <= x_.front()) return y_.front();
    if (q >= x_.back()) return y_.back();
    std::size_t lo =
        static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), q) -
                                 x_.begin()) - 1;
    if (lo + 1 >= n) lo = n - 2;
    const double h = x_[lo + 1] - x_[lo];
    const double t = (q - x_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[lo] * (2 * t3 - 3 * t2 + 1) + h * m_[lo] * (t3 - 2 * t2 + t) +
           y_[lo + 1] * (-2 * t3 + 3 * t2) + h * m_[lo + 1] * (t3 - t2);
  }

 private:
  std::vector<double> x_, y_, m_;
};

}  // namespace reprodp

#endif  // REPRODP_MATHUTIL_HPP_

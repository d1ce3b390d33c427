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

#ifndef REPRODP_MECHANISMS_HPP_
#define REPRODP_MECHANISMS_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reprodp/error.hpp"
#include "reprodp/mathutil.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {

// [x]_a^b.
inline double clamp(double x, double a, double b) {
  if (!(a <= b)) throw InvalidArgument("clamp needs a <= b");
  return x < a ? a : (x > b ? b : x);
}

// Quantile of the geometric law counting failures before the first success,
// success probability 1-b: support {0,1,2,...}, P(G=k) = (1-b) b^k.
inline double geometric_quantile_failures(double u, double b) {
  if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("geometric quantile needs b in (0,1)");
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("geometric quantile needs u in (0,1)");
  return std::ceil(std::log1p(-u) / std::log(b)) - 1.0;
}

// One Tulap(0, b, 0) draw from three uniform seeds: G1 - G2 + (u3 - 1/2)
// with G1, G2 iid geometric (failures convention, success prob 1-b).
inline double sample_tulap(double u1, double u2, double u3,
                           double b = 0.36787944117144232160 /* e^-1 */) {
  const double g1 = geometric_quantile_failures(u1, b);
  const double g2 = geometric_quantile_failures(u2, b);
  return g1 - g2 + (u3 - 0.5);
}

enum class NoiseKind { kLaplace, kGaussian };

// Additive noise from one stored seed. Laplace seeds are uniforms pushed
// through the Laplace quantile; Gaussian seeds are stored as z-values and
// used directly. Median seeds (u = 1/2, z = 0) give exactly zero noise.
inline double additive_noise(NoiseKind kind, double seed, double scale) {
  if (!(scale >= 0.0)) throw InvalidArgument("additive_noise needs scale >= 0");
  switch (kind) {
    case NoiseKind::kLaplace:
      return scale * laplace_quantile(seed);
    case NoiseKind::kGaussian:
      return scale * seed;
  }
  throw InvalidArgument("unknown noise kind");
}

inline double additive_mechanism(double value, NoiseKind kind, double seed,
                                 double scale) {
  return value + additive_noise(kind, seed, scale);
}

// Draw V in R^m with density proportional to exp(-c * ||v||_inf) from m+1
// uniform seeds: r ~ Gamma(m+1, rate c) via quantile of seeds[0], then
// V = r * (U_1,...,U_m) with U_j = 2*seeds[1+j] - 1 uniform on (-1,1).
inline std::vector<double> sample_linf_density(double c, int m,
                                               const std::vector<double>& seeds) {
  if (!(c > 0.0) || m < 1) throw InvalidArgument("sample_linf_density needs c > 0, m >= 1");
  if (seeds.size() != static_cast<std::size_t>(m) + 1) {
    throw InvalidArgument("sample_linf_density needs m+1 seeds");
  }
  const double r = gamma_quantile(static_cast<double>(m) + 1.0, c, seeds[0]);
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    v[static_cast<std::size_t>(j)] = r * (2.0 * seeds[static_cast<std::size_t>(j) + 1] - 1.0);
  }
  return v;
}

// A norm unit ball given by a membership test, bounded by an l-inf box.
struct NormBall {
  std::string label;
  double linf_radius = 1.0;
  std::function<bool(const std::vector<double>&)> membership;
};

// Unit ball of the hull norm for the 2-d statistic (sum z, sum z^2),
// z in [0,1]: the convex hull of the pairwise-difference sensitivity space.
// Three branches over u1, symmetric under negation.
inline NormBall hull_ball() {
  NormBall ball;
  ball.label = "hull";
  ball.linf_radius = 1.0;
  ball.membership = [](const std::vector<double>& u) {
    if (u.size() != 2) throw InvalidArgument("hull_ball is 2-dimensional");
    const double u1 = u[0], u2 = u[1];
    if (u1 < -1.0 || u1 > 1.0) return false;
    if (u1 <= -0.5) {
      return (u1 + 1.0) * (u1 + 1.0) - 1.0 <= u2 && u2 <= -u1 * u1;
    }
    if (u1 < 0.5) {
      return u1 - 0.25 <= u2 && u2 <= u1 + 0.25;
    }
    return u1 * u1 <= u2 && u2 <= 1.0 - (u1 - 1.0) * (u1 - 1.0);
  };
  return ball;
}

// K-norm mechanism: adds N_K = r * U to `stat`, where r ~ Gamma(m+1,
// eps/delta_k) comes from `gamma_seed` and U is uniform on the ball via
// rejection from the l-inf box, proposals drawn from `proposals`. The
// composite density is proportional to exp(-(eps/delta_k) ||v||_K).
inline std::vector<double> knorm_mechanism(const std::vector<double>& stat,
                                           const NormBall& ball, double eps,
                                           double delta_k,
                                           double gamma_seed,
                                           const RngStream& proposals,
                                           std::uint64_t* proposals_used = nullptr) {
  if (!(eps > 0.0 && delta_k > 0.0)) {
    throw InvalidArgument("knorm_mechanism needs eps, delta_k > 0");
  }
  const int m = static_cast<int>(stat.size());
  if (m < 1) throw InvalidArgument("knorm_mechanism needs a nonempty statistic");
  const double r =
      gamma_quantile(static_cast<double>(m) + 1.0, eps / delta_k, gamma_seed);
  constexpr std::uint64_t kMaxProposals = 1000000;
  std::vector<double> u(static_cast<std::size_t>(m));
  for (std::uint64_t k = 0; k < kMaxProposals; ++k) {
    for (int j = 0; j < m; ++j) {
      u[static_cast<std::size_t>(j)] =
          ball.linf_radius *
          (2.0 * proposals.uniform(k * static_cast<std::uint64_t>(m) +
                                   static_cast<std::uint64_t>(j)) - 1.0);
    }
    if (ball.membership(u)) {
      if (proposals_used != nullptr) *proposals_used = k + 1;
      std::vector<double> out(stat);
      for (int j = 0; j < m; ++j) {
        out[static_cast<std::size_t>(j)] += r * u[static_cast<std::size_t>(j)];
      }
      return out;
    }
  }
  throw PathologicalBall("knorm_mechanism: acceptance below 1e-6 over 1e6 proposals for ball '" +
                         ball.label + "'");
}

// Objective perturbation.
struct ObjPertConfig {
  double epsilon = 1.0;   // privacy budget of this release
  double q = 0.85;        // budget fraction spent on the linear term
  double lambda = 0.25;   // smoothness bound of the per-datum loss
  double delta_inf = 2.0; // l-inf sensitivity of the loss gradient
  int m = 2;              // parameter dimension
};

inline double objpert_gamma(const ObjPertConfig& cfg) {
  if (!(cfg.epsilon > 0.0) || !(cfg.q > 0.0 && cfg.q < 1.0) || !(cfg.lambda > 0.0)) {
    throw InvalidArgument("objpert_gamma needs epsilon, lambda > 0 and q in (0,1)");
  }
  return cfg.lambda / std::expm1(cfg.epsilon * (1.0 - cfg.q));
}

// Loss callback: fills grad (dim) and hess (dim x dim, row-major) of the
// SUM of per-datum losses at theta, and returns the sum itself.
using LossFn = std::function<double(const std::vector<double>& theta,
                                    std::vector<double>* grad,
                                    std::vector<double>* hess)>;

namespace detail {

// Cholesky solve of (A + ridge I) x = b for small dense SPD A, row-major.
inline bool spd_solve(std::vector<double> a, int d, std::vector<double> b,
                      std::vector<double>* x) {
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < j; ++k) {
      a[static_cast<std::size_t>(j * d + j)] -=
          a[static_cast<std::size_t>(j * d + k)] * a[static_cast<std::size_t>(j * d + k)];
    }
    if (a[static_cast<std::size_t>(j * d + j)] <= 0.0) return false;
    a[static_cast<std::size_t>(j * d + j)] = std::sqrt(a[static_cast<std::size_t>(j * d + j)]);
    for (int i = j + 1; i < d; ++i) {
      for (int k = 0; k < j; ++k) {
        a[static_cast<std::size_t>(i * d + j)] -=
            a[static_cast<std::size_t>(i * d + k)] * a[static_cast<std::size_t>(j * d + k)];
      }
      a[static_cast<std::size_t>(i * d + j)] /= a[static_cast<std::size_t>(j * d + j)];
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < i; ++k) b[static_cast<std::size_t>(i)] -= a[static_cast<std::size_t>(i * d + k)] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] /= a[static_cast<std::size_t>(i * d + i)];
  }
  for (int i = d - 1; i >= 0; --i) {
    for (int k = i + 1; k < d; ++k) b[static_cast<std::size_t>(i)] -= a[static_cast<std::size_t>(k * d + i)] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] /= a[static_cast<std::size_t>(i * d + i)];
  }
  *x = std::move(b);
  return true;
}

}  // namespace detail

// argmin over theta of (1/n) sum loss + (gamma/2n) theta'theta + V'theta/n.
// V is supplied by the caller (it is part of the seed, never drawn here).
// Damped Newton with a gradient-descent fallback; stops when the gradient
// of the scaled objective (times n) has sup-norm below n * tol.
inline std::vector<double> objective_perturbation(const LossFn& loss, int dim,
                                                  int n, const ObjPertConfig& cfg,
                                                  const std::vector<double>& v,
                                                  double tol = 1e-8,
                                                  int max_iter = 500) {
  if (v.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("objective_perturbation: V has wrong dimension");
  }
  if (n < 1) throw InvalidArgument("objective_perturbation needs n >= 1");
  const double gamma = objpert_gamma(cfg);
  std::vector<double> theta(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> grad, hess, step;
  auto full_value = [&](const std::vector<double>& th) {
    const double s = loss(th, nullptr, nullptr);
    double quad = 0.0, lin = 0.0;
    for (int j = 0; j < dim; ++j) {
      quad += th[static_cast<std::size_t>(j)] * th[static_cast<std::size_t>(j)];
      lin += v[static_cast<std::size_t>(j)] * th[static_cast<std::size_t>(j)];
    }
    return s + 0.5 * gamma * quad + lin;  // objective times n
  };
  double fcur = full_value(theta);
  for (int it = 0; it < max_iter; ++it) {
    loss(theta, &grad, &hess);
    double gnorm = 0.0;
    for (int j = 0; j < dim; ++j) {
      grad[static_cast<std::size_t>(j)] += gamma * theta[static_cast<std::size_t>(j)] + v[static_cast<std::size_t>(j)];
      hess[static_cast<std::size_t>(j * dim + j)] += gamma;
      gnorm = std::max(gnorm, std::fabs(grad[static_cast<std::size_t>(j)]));
    }
    if (gnorm < tol * static_cast<double>(n)) return theta;
    bool have_dir = detail::spd_solve(hess, dim, grad, &step);
    if (!have_dir) {
      step = grad;  // gradient direction fallback
      double sn = 0.0;
      for (double s : step) sn = std::max(sn, std::fabs(s));
      if (sn > 0.0) {
        for (double& s : step) s /= sn;
      }
    }
    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> cand(theta);
      for (int j = 0; j < dim; ++j) cand[static_cast<std::size_t>(j)] -= t * step[static_cast<std::size_t>(j)];
      const double fc = full_value(cand);
      if (fc < fcur) {
        theta = std::move(cand);
        fcur = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // No descent at machine resolution: accept if first-order optimal.
      if (gnorm < 1e-6 * static_cast<double>(n)) return theta;
      throw NumericError("objective_perturbation failed to descend");
    }
  }
  throw NumericError("objective_perturbation did not converge");
}

}  // namespace reprodp

#endif  // REPRODP_MECHANISMS_HPP_

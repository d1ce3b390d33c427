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

#ifndef REPRODP_DEPTH_HPP_
#define REPRODP_DEPTH_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"
#include "reprodp/mathutil.hpp"

namespace reprodp {

// Mahalanobis depth against a fixed cloud: T(x; X) =
// [1 + (x-mu)' Sigma^{-1} (x-mu)]^{-1} with the (n-1)-denominator covariance.
// If the Cholesky condition estimate exceeds 1e12 (or factorization fails)
// a ridge 1e-10 * trace(Sigma)/d is added once; a second failure is a
// degenerate-covariance error.
class MahalanobisCloud {
 public:
  // Points row-major, n x d.
  MahalanobisCloud(const double* pts, std::size_t n, std::size_t d) : d_(d) {
    if (n < 2 || d < 1) throw InvalidArgument("MahalanobisCloud needs n >= 2, d >= 1");
    mean_.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) mean_[j] += pts[i * d + j];
    }
    for (double& m : mean_) m /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dj = pts[i * d + j] - mean_[j];
        for (std::size_t k = j; k < d; ++k) {
          cov[j * d + k] += dj * (pts[i * d + k] - mean_[k]);
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = j; k < d; ++k) {
        cov[j * d + k] /= static_cast<double>(n - 1);
        cov[k * d + j] = cov[j * d + k];
      }
    }
    if (!factor(cov)) {
      double trace = 0.0;
      for (std::size_t j = 0; j < d; ++j) trace += cov[j * d + j];
      const double ridge = 1e-10 * trace / static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) cov[j * d + j] += ridge;
      if (ridge <= 0.0 || !factor(cov)) {
        throw DegenerateCovariance("Mahalanobis covariance is singular beyond ridge repair");
      }
    }
  }

  std::size_t dim() const { return d_; }
  const std::vector<double>& mean() const { return mean_; }

  double depth(const double* x) const {
    // Solve L w = (x - mean); quadratic form is ||w||^2.
    double qf = 0.0;
    buf_.resize(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      double v = x[i] - mean_[i];
      for (std::size_t k = 0; k < i; ++k) v -= chol_[i * d_ + k] * buf_[k];
      buf_[i] = v / chol_[i * d_ + i];
      qf += buf_[i] * buf_[i];
    }
    return 1.0 / (1.0 + qf);
  }

 private:
  bool factor(std::vector<double> a) {
    chol_.assign(d_ * d_, 0.0);
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (std::size_t j = 0; j < d_; ++j) {
      double diag = a[j * d_ + j];
      for (std::size_t k = 0; k < j; ++k) diag -= chol_[j * d_ + k] * chol_[j * d_ + k];
      if (!(diag > 0.0)) return false;
      const double l = std::sqrt(diag);
      chol_[j * d_ + j] = l;
      dmin = std::min(dmin, l);
      dmax = std::max(dmax, l);
      for (std::size_t i = j + 1; i < d_; ++i) {
        double v = a[i * d_ + j];
        for (std::size_t k = 0; k < j; ++k) v -= chol_[i * d_ + k] * chol_[j * d_ + k];
        chol_[i * d_ + j] = v / l;
      }
    }
    const double cond_est = (dmax / dmin) * (dmax / dmin);
    return cond_est <= 1e12;
  }

  std::size_t d_;
  std::vector<double> mean_;
  std::vector<double> chol_;
  mutable std::vector<double> buf_;
};

inline double mahalanobis_depth(const std::vector<double>& x,
                                const std::vector<std::vector<double>>& cloud) {
  if (cloud.empty()) throw InvalidArgument("mahalanobis_depth: empty cloud");
  const std::size_t d = cloud.front().size();
  if (x.size() != d) throw InvalidArgument("mahalanobis_depth: dimension mismatch");
  std::vector<double> flat;
  flat.reserve(cloud.size() * d);
  for (const auto& p : cloud) {
    if (p.size() != d) throw InvalidArgument("mahalanobis_depth: ragged cloud");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  MahalanobisCloud mc(flat.data(), cloud.size(), d);
  return mc.depth(x.data());
}

namespace depth_detail {

// Exact planar halfspace depth: the minimum over halfplane directions v of
// the fraction of cloud points with <p - x, v> strictly positive, plus all
// points coincident with x (which lie in every halfplane through x). The
// value changes only where v is perpendicular to some point direction, so
// evaluating the point directions rotated +-90 degrees plus midpoints
// between consecutive candidates covers every piece.
inline double halfspace_2d(double x0, double x1,
                           const std::vector<std::array<double, 2>>& pts) {
  const std::size_t m = pts.size();
  std::size_t at_x = 0;
  std::vector<double> ang;
  ang.reserve(m);
  for (const auto& p : pts) {
    const double dx = p[0] - x0, dy = p[1] - x1;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) {
      ++at_x;
    } else {
      ang.push_back(std::atan2(dy, dx));
    }
  }
  if (ang.empty()) return 1.0;
  std::vector<double> cand;
  cand.reserve(4 * ang.size());
  constexpr double kPi = 3.14159265358979323846;
  for (double a : ang) {
    cand.push_back(a + kPi / 2);
    cand.push_back(a - kPi / 2);
  }
  std::sort(cand.begin(), cand.end());
  const std::size_t nc = cand.size();
  for (std::size_t i = 0; i < nc; ++i) {
    const double next = (i + 1 < nc) ? cand[i + 1] : cand[0] + 2 * kPi;
    cand.push_back(0.5 * (cand[i] + next));
  }
  std::size_t best = ang.size();
  for (double v : cand) {
    const double cx = std::cos(v), cy = std::sin(v);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < ang.size(); ++i) {
      // strict side test: a point on the dividing line does not count
      if (cx * std::cos(ang[i]) + cy * std::sin(ang[i]) > 1e-12) ++cnt;
    }
    best = std::min(best, cnt);
  }
  return static_cast<double>(at_x + best) / static_cast<double>(m);
}

// Closed point-in-triangle test via signed areas, tolerant of degenerate
// (collinear) triangles, which contain x only if x lies on the segment.
inline bool triangle_contains(const std::array<double, 2>& a,
                              const std::array<double, 2>& b,
                              const std::array<double, 2>& c, double x0,
                              double x1) {
  auto cross = [](double ax, double ay, double bx, double by) {
    return ax * by - ay * bx;
  };
  const double d1 = cross(b[0] - a[0], b[1] - a[1], x0 - a[0], x1 - a[1]);
  const double d2 = cross(c[0] - b[0], c[1] - b[1], x0 - b[0], x1 - b[1]);
  const double d3 = cross(a[0] - c[0], a[1] - c[1], x0 - c[0], x1 - c[1]);
  const bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
  const bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
  if (has_neg && has_pos) return false;
  if (!has_neg && !has_pos) {
    // fully degenerate triple: containment = x within its bounding box
    const double lo0 = std::min({a[0], b[0], c[0]}), hi0 = std::max({a[0], b[0], c[0]});
    const double lo1 = std::min({a[1], b[1], c[1]}), hi1 = std::max({a[1], b[1], c[1]});
    return x0 >= lo0 && x0 <= hi0 && x1 >= lo1 && x1 <= hi1;
  }
  return true;
}

inline std::vector<std::array<double, 2>> to_planar(
    const std::vector<std::vector<double>>& cloud) {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud) {
    if (p.size() == 1) {
      pts.push_back({p[0], 0.0});
    } else if (p.size() == 2) {
      pts.push_back({p[0], p[1]});
    } else {
      throw InvalidArgument("halfspace/simplicial depth support d <= 2 only");
    }
  }
  return pts;
}

}  // namespace depth_detail

inline double halfspace_depth(const std::vector<double>& x,
                              const std::vector<std::vector<double>>& cloud) {
  if (cloud.empty()) throw InvalidArgument("halfspace_depth: empty cloud");
  auto pts = depth_detail::to_planar(cloud);
  const double x0 = x[0];
  const double x1 = x.size() > 1 ? x[1] : 0.0;
  if (x.size() > 2) throw InvalidArgument("halfspace_depth supports d <= 2 only");
  return depth_detail::halfspace_2d(x0, x1, pts);
}

inline double simplicial_depth(const std::vector<double>& x,
                               const std::vector<std::vector<double>>& cloud) {
  if (cloud.size() < 3) throw InvalidArgument("simplicial_depth needs >= 3 points");
  auto pts = depth_detail::to_planar(cloud);
  const double x0 = x[0];
  const double x1 = x.size() > 1 ? x[1] : 0.0;
  if (x.size() > 2) throw InvalidArgument("simplicial_depth supports d <= 2 only");
  const std::size_t m = pts.size();
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) {
        ++total;
        if (depth_detail::triangle_contains(pts[i], pts[j], pts[k], x0, x1)) ++hits;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline double spatial_depth(const std::vector<double>& x,
                            const std::vector<std::vector<double>>& cloud) {
  if (cloud.empty()) throw InvalidArgument("spatial_depth: empty cloud");
  const std::size_t d = x.size();
  std::vector<double> acc(d, 0.0);
  for (const auto& p : cloud) {
    if (p.size() != d) throw InvalidArgument("spatial_depth: dimension mismatch");
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = x[j] - p[j];
      r2 += v * v;
    }
    if (r2 == 0.0) continue;  // coincident point contributes the zero vector
    const double r = std::sqrt(r2);
    for (std::size_t j = 0; j < d; ++j) acc[j] += (x[j] - p[j]) / r;
  }
  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double v = acc[j] / static_cast<double>(cloud.size());
    norm2 += v * v;
  }
  return 1.0 - std::sqrt(norm2);
}

enum class DepthKind { kMahalanobis, kHalfspace, kSimplicial, kSpatial };

// Depth of every cloud member within the cloud (s_obs, s_1..s_R).
// Low depth = unusual, so the orientation is low_unusual.
inline TestStatistic depth_statistic(DepthKind kind) {
  TestStatistic stat;
  stat.orientation = Orientation::kLowUnusual;
  switch (kind) {
    case DepthKind::kMahalanobis: stat.label = "mahalanobis"; break;
    case DepthKind::kHalfspace: stat.label = "halfspace"; break;
    case DepthKind::kSimplicial: stat.label = "simplicial"; break;
    case DepthKind::kSpatial: stat.label = "spatial"; break;
  }
  stat.eval = [kind](const std::vector<double>&, const Summary& s_obs,
                     const std::vector<Summary>& repro, std::vector<double>* out) {
    const std::size_t m = repro.size() + 1;
    const std::size_t d = s_obs.dim();
    out->resize(m);
    if (kind == DepthKind::kMahalanobis) {
      std::vector<double> flat;
      flat.reserve(m * d);
      flat.insert(flat.end(), s_obs.values.begin(), s_obs.values.end());
      for (const Summary& s : repro) {
        flat.insert(flat.end(), s.values.begin(), s.values.end());
      }
      MahalanobisCloud mc(flat.data(), m, d);
      for (std::size_t i = 0; i < m; ++i) {
        (*out)[i] = mc.depth(flat.data() + i * d);
      }
      return;
    }
    std::vector<std::vector<double>> cloud;
    cloud.reserve(m);
    cloud.push_back(s_obs.values);
    for (const Summary& s : repro) cloud.push_back(s.values);
    for (std::size_t i = 0; i < m; ++i) {
      switch (kind) {
        case DepthKind::kHalfspace: (*out)[i] = halfspace_depth(cloud[i], cloud); break;
        case DepthKind::kSimplicial: (*out)[i] = simplicial_depth(cloud[i], cloud); break;
        case DepthKind::kSpatial: (*out)[i] = spatial_depth(cloud[i], cloud); break;
        case DepthKind::kMahalanobis: break;
      }
    }
  };
  return stat;
}

inline TestStatistic mahalanobis_statistic() {
  return depth_statistic(DepthKind::kMahalanobis);
}

// Plain [0,1] map for a scalar summary.
inline double scalar_statistic_map(double s) { return normal_cdf(s); }

// Scalar summary statistic: Phi applied to the cloud-standardized value,
// so resolution is retained far from 0 while the induced order statistics
// match those of the raw summary (the map is strictly increasing given the
// cloud). Orientation as requested; two_sided pairs with the split band.
inline TestStatistic scalar_statistic(Orientation side = Orientation::kTwoSided) {
  TestStatistic stat;
  stat.label = "scalar";
  stat.orientation = side;
  stat.eval = [](const std::vector<double>&, const Summary& s_obs,
                 const std::vector<Summary>& repro, std::vector<double>* out) {
    if (s_obs.dim() != 1) throw InvalidArgument("scalar_statistic needs summary dimension 1");
    const std::size_t m = repro.size() + 1;
    out->resize(m);
    double mean = s_obs[0];
    for (const Summary& s : repro) mean += s[0];
    mean /= static_cast<double>(m);
    double var = (s_obs[0] - mean) * (s_obs[0] - mean);
    for (const Summary& s : repro) var += (s[0] - mean) * (s[0] - mean);
    var /= static_cast<double>(m - 1);
    const double sd = std::sqrt(var);
    const double inv = sd > 0.0 ? 1.0 / sd : 0.0;
    (*out)[0] = normal_cdf((s_obs[0] - mean) * inv);
    for (std::size_t i = 0; i < repro.size(); ++i) {
      (*out)[i + 1] = normal_cdf((repro[i][0] - mean) * inv);
    }
  };
  return stat;
}

// Pivot statistic from t = f(theta, s). two_sided emits the fold
// 1 - |2 Phi(t) - 1| (already low_unusual); one-sided emits Phi(t).
inline TestStatistic pivot_statistic(
    std::function<double(const std::vector<double>&, const Summary&)> pivot,
    Orientation side, std::string label = "pivot") {
  TestStatistic stat;
  stat.label = std::move(label);
  const bool fold = side == Orientation::kTwoSided;
  stat.orientation = fold ? Orientation::kLowUnusual : side;
  stat.eval = [pivot = std::move(pivot), fold](
                  const std::vector<double>& theta, const Summary& s_obs,
                  const std::vector<Summary>& repro, std::vector<double>* out) {
    const std::size_t m = repro.size() + 1;
    out->resize(m);
    auto map = [fold](double t) {
      const double u = normal_cdf(t);
      return fold ? 1.0 - std::fabs(2.0 * u - 1.0) : u;
    };
    (*out)[0] = map(pivot(theta, s_obs));
    for (std::size_t i = 0; i < repro.size(); ++i) {
      (*out)[i + 1] = map(pivot(theta, repro[i]));
    }
  };
  return stat;
}

}  // namespace reprodp

#endif  // REPRODP_DEPTH_HPP_

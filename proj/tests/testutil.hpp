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

#ifndef REPRODP_TESTS_TESTUTIL_HPP_
#define REPRODP_TESTS_TESTUTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "reprodp/engine.hpp"
#include "reprodp/error.hpp"

namespace testutil {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

inline double binom_se(double phat, double n) {
  return std::sqrt(std::max(0.0, phat * (1.0 - phat)) / n);
}

// Two-sample Kolmogorov-Smirnov statistic. Ties are handled by comparing
// the empirical CDFs only after consuming every copy of each value, which
// keeps the statistic valid (conservative) for discrete samples.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double va = i < a.size() ? a[i] : std::numeric_limits<double>::infinity();
    const double vb = j < b.size() ? b[j] : std::numeric_limits<double>::infinity();
    const double v = std::min(va, vb);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_one_sample(std::vector<double> x,
                            const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Statistic whose emitted cloud is a fixed script (observed value first),
// for exercising rank counting and band logic directly. The script length
// must equal R + 1.
inline reprodp::TestStatistic scripted_statistic(
    std::vector<double> cloud,
    reprodp::Orientation orient = reprodp::Orientation::kLowUnusual) {
  reprodp::TestStatistic t;
  t.label = "scripted";
  t.orientation = orient;
  t.eval = [cloud = std::move(cloud)](const std::vector<double>&,
                                      const reprodp::Summary&,
                                      const std::vector<reprodp::Summary>& repro,
                                      std::vector<double>* out) {
    if (cloud.size() != repro.size() + 1) {
      throw reprodp::InvalidArgument("scripted statistic: cloud length mismatch");
    }
    *out = cloud;
  };
  return t;
}

// Statistic computed from theta alone, for tests that need a controllable
// objective surface; every cloud entry gets the same value.
inline reprodp::TestStatistic theta_statistic(
    std::function<double(const std::vector<double>&)> f,
    reprodp::Orientation orient = reprodp::Orientation::kLowUnusual) {
  reprodp::TestStatistic t;
  t.label = "theta-scripted";
  t.orientation = orient;
  t.eval = [f = std::move(f)](const std::vector<double>& theta,
                              const reprodp::Summary&,
                              const std::vector<reprodp::Summary>& repro,
                              std::vector<double>* out) {
    out->assign(repro.size() + 1, f(theta));
  };
  return t;
}

// One-parameter model whose summary equals the parameter. The layout keeps
// a single uniform data slot so the seed plumbing is exercised end to end.
inline reprodp::ModelSpec identity_model(double lo = 0.0, double hi = 1.0) {
  reprodp::ModelSpec m;
  m.name = "identity";
  m.privacy_label = "none";
  m.box.lower = {lo};
  m.box.upper = {hi};
  m.box.names = {"theta"};
  m.box.integer = {false};
  m.layout.data_dims = 1;
  m.layout.data_kind = reprodp::SlotKind::kUniform;
  m.summary_dim = 1;
  m.generator = [](const std::vector<double>& theta, const reprodp::Seed&) {
    return reprodp::Summary(std::vector<double>{theta[0]});
  };
  return m;
}

}  // namespace testutil

#endif  // REPRODP_TESTS_TESTUTIL_HPP_

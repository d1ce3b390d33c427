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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "reprodp/depth.hpp"
#include "testutil.hpp"

using Catch::Approx;
using reprodp::Summary;

namespace {

std::vector<Summary> random_cloud(int n, int d, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Summary> cloud;
  cloud.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (double& x : v) x = z(gen);
    cloud.emplace_back(std::move(v));
  }
  return cloud;
}

}  // namespace

TEST_CASE("Mahalanobis depth: center value, hand value, affine invariance") {
  const std::vector<std::vector<double>> cloud = {
      {0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}};
  REQUIRE(reprodp::mahalanobis_depth({1.0, 1.0}, cloud) == Approx(1.0).margin(1e-12));
  // Covariance diag(4/3); quadratic form at the corner is 2 * 3/4 = 1.5.
  REQUIRE(reprodp::mahalanobis_depth({0.0, 0.0}, cloud) == Approx(0.4).margin(1e-12));

  // Affine map x -> A x + b leaves the depth unchanged.
  auto aff = [](const std::vector<double>& p) {
    return std::vector<double>{2.0 * p[0] + 1.0 * p[1] + 5.0, 3.0 * p[1] - 1.0};
  };
  std::vector<std::vector<double>> mapped;
  for (const auto& p : cloud) mapped.push_back(aff(p));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x = {u(gen), u(gen)};
    REQUIRE(reprodp::mahalanobis_depth(aff(x), mapped) ==
            Approx(reprodp::mahalanobis_depth(x, cloud)).margin(1e-10));
  }
}

TEST_CASE("a coincident cloud has no usable covariance") {
  const std::vector<std::vector<double>> flat = {{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
  REQUIRE_THROWS_AS(reprodp::mahalanobis_depth({1.0, 1.0}, flat),
                    reprodp::DegenerateCovariance);
}

TEST_CASE("halfspace depth: collinear hand value and hull exclusion") {
  // The middle of three collinear points: itself plus an empty open side.
  const std::vector<std::vector<double>> line = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
  REQUIRE(reprodp::halfspace_depth({1.0, 0.0}, line) == Approx(1.0 / 3.0).margin(1e-12));
  // Scalar clouds embed on the axis with the same answer.
  const std::vector<std::vector<double>> scalar = {{0.0}, {1.0}, {2.0}};
  REQUIRE(reprodp::halfspace_depth({1.0}, scalar) == Approx(1.0 / 3.0).margin(1e-12));
  // Points outside the convex hull have depth zero.
  const std::vector<std::vector<double>> tri = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  REQUIRE(reprodp::halfspace_depth({5.0, 5.0}, tri) == 0.0);
}

TEST_CASE("simplicial depth: hull exclusion and center containment") {
  const std::vector<std::vector<double>> square = {
      {0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}};
  // Every corner triple contains the center (on a diagonal, closed test).
  REQUIRE(reprodp::simplicial_depth({1.0, 1.0}, square) == 1.0);
  REQUIRE(reprodp::simplicial_depth({9.0, 9.0}, square) == 0.0);
  REQUIRE_THROWS_AS(reprodp::simplicial_depth({0.0, 0.0}, {{0.0, 0.0}, {1.0, 1.0}}),
                    reprodp::InvalidArgument);
}

TEST_CASE("spatial depth peaks at the balance point and vanishes far away") {
  const std::vector<std::vector<double>> cross = {
      {1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  REQUIRE(reprodp::spatial_depth({0.0, 0.0}, cross) == Approx(1.0).margin(1e-12));
  REQUIRE(reprodp::spatial_depth({100.0, 0.0}, cross) < 0.01);
}

TEST_CASE("counting depths land on lattice values") {
  const auto cloud = random_cloud(21, 2, 31);
  std::vector<std::vector<double>> pts;
  for (const Summary& s : cloud) pts.push_back(s.values);
  const double m = 21.0;
  const double triples = m * (m - 1.0) * (m - 2.0) / 6.0;
  for (int i = 0; i < 5; ++i) {
    const double hs = reprodp::halfspace_depth(pts[static_cast<std::size_t>(i)], pts) * m;
    const double sd =
        reprodp::simplicial_depth(pts[static_cast<std::size_t>(i)], pts) * triples;
    REQUIRE(hs == Approx(std::round(hs)).margin(1e-9));
    REQUIRE(sd == Approx(std::round(sd)).margin(1e-6));
  }
}

TEST_CASE("smooth depths move smoothly") {
  const auto cloud = random_cloud(40, 2, 77);
  std::vector<std::vector<double>> pts;
  for (const Summary& s : cloud) pts.push_back(s.values);
  const std::vector<double> x = {0.3, -0.2};
  const std::vector<double> xx = {0.3 + 1e-4, -0.2 + 1e-4};
  REQUIRE(std::fabs(reprodp::mahalanobis_depth(x, pts) -
                    reprodp::mahalanobis_depth(xx, pts)) < 0.01);
  REQUIRE(std::fabs(reprodp::spatial_depth(x, pts) -
                    reprodp::spatial_depth(xx, pts)) < 0.01);
}

TEST_CASE("every depth statistic is permutation invariant with values in [0,1]") {
  const std::vector<reprodp::TestStatistic> stats = {
      reprodp::mahalanobis_statistic(),
      reprodp::depth_statistic(reprodp::DepthKind::kHalfspace),
      reprodp::depth_statistic(reprodp::DepthKind::kSimplicial),
      reprodp::depth_statistic(reprodp::DepthKind::kSpatial)};
  const Summary s_obs(std::vector<double>{0.4, -0.1});
  std::vector<Summary> repro = random_cloud(20, 2, 99);
  std::vector<Summary> shuffled = repro;
  std::mt19937_64 gen(4);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);

  for (const reprodp::TestStatistic& stat : stats) {
    REQUIRE(stat.orientation == reprodp::Orientation::kLowUnusual);
    std::vector<double> out1, out2;
    stat.eval({}, s_obs, repro, &out1);
    stat.eval({}, s_obs, shuffled, &out2);
    REQUIRE(out1.size() == repro.size() + 1);
    for (double v : out1) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    // The observed entry ignores the order of the rest of the cloud.
    REQUIRE(out1[0] == Approx(out2[0]).margin(1e-10));
    std::vector<double> rest1(out1.begin() + 1, out1.end());
    std::vector<double> rest2(out2.begin() + 1, out2.end());
    std::sort(rest1.begin(), rest1.end());
    std::sort(rest2.begin(), rest2.end());
    for (std::size_t i = 0; i < rest1.size(); ++i) {
      REQUIRE(rest1[i] == Approx(rest2[i]).margin(1e-10));
    }
  }
}

TEST_CASE("the scalar map is the standard normal CDF") {
  REQUIRE(reprodp::scalar_statistic_map(0.0) == 0.5);
  REQUIRE(reprodp::scalar_statistic_map(1.6449) == Approx(0.95).margin(1e-4));
  double prev = 0.0;
  for (double x = -4.0; x <= 4.0; x += 0.5) {
    const double v = reprodp::scalar_statistic_map(x);
    REQUIRE(v > prev);
    prev = v;
  }
}

TEST_CASE("scalar statistic standardizes against the cloud, preserving order") {
  const reprodp::TestStatistic stat =
      reprodp::scalar_statistic(reprodp::Orientation::kTwoSided);
  REQUIRE(stat.orientation == reprodp::Orientation::kTwoSided);
  const Summary s_obs(std::vector<double>{2.0});
  std::vector<Summary> repro;
  for (double v : {0.0, 1.0, 3.0, 4.0}) repro.emplace_back(std::vector<double>{v});
  std::vector<double> out;
  stat.eval({}, s_obs, repro, &out);
  // s_obs sits exactly at the cloud mean.
  REQUIRE(out[0] == Approx(0.5).margin(1e-12));
  // The map is strictly increasing in the raw summary.
  REQUIRE(out[1] < out[2]);
  REQUIRE(out[2] < out[0]);
  REQUIRE(out[0] < out[3]);
  REQUIRE(out[3] < out[4]);

  // A constant cloud has no scale; everything maps to 1/2.
  std::vector<Summary> flat(5, Summary(std::vector<double>{7.0}));
  stat.eval({}, Summary(std::vector<double>{7.0}), flat, &out);
  for (double v : out) REQUIRE(v == 0.5);

  const reprodp::TestStatistic low = reprodp::scalar_statistic(
      reprodp::Orientation::kLowUnusual);
  REQUIRE(low.orientation == reprodp::Orientation::kLowUnusual);
}

TEST_CASE("pivot statistic folds two-sided t-values symmetrically") {
  auto pivot = [](const std::vector<double>& theta, const Summary& s) {
    return theta[0] - s[0];
  };
  const reprodp::TestStatistic two =
      reprodp::pivot_statistic(pivot, reprodp::Orientation::kTwoSided);
  // The fold emits low-unusual values directly.
  REQUIRE(two.orientation == reprodp::Orientation::kLowUnusual);

  std::vector<Summary> repro;
  for (double v : {-1.96, 0.0, 1.96}) repro.emplace_back(std::vector<double>{v});
  std::vector<double> out;
  two.eval({0.0}, Summary(std::vector<double>{0.0}), repro, &out);
  REQUIRE(out[0] == 1.0);                          // t = 0 is maximally typical
  REQUIRE(out[1] == Approx(0.05).margin(1e-3));    // |t| = 1.96
  REQUIRE(out[3] == Approx(0.05).margin(1e-3));
  REQUIRE(out[1] == Approx(out[3]).margin(1e-14));  // symmetric fold

  // theta reaches the pivot: shifting theta shifts t.
  std::vector<double> shifted;
  two.eval({1.96}, Summary(std::vector<double>{0.0}), repro, &shifted);
  REQUIRE(shifted[0] == Approx(0.05).margin(1e-3));

  const reprodp::TestStatistic high =
      reprodp::pivot_statistic(pivot, reprodp::Orientation::kHighUnusual);
  REQUIRE(high.orientation == reprodp::Orientation::kHighUnusual);
  std::vector<double> raw;
  high.eval({0.0}, Summary(std::vector<double>{0.0}), repro, &raw);
  REQUIRE(raw[0] == 0.5);  // Phi(0), unfolded
}

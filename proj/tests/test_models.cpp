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
//
// Each model's release distribution is compared against an independent
// simulation built from std::random engines. The library path and the
// oracle share only deterministic transforms (quantile tables, the
// objective-perturbation solver); all randomness comes from different
// generators, so agreement pins down the seed plumbing and the release
// formulas at once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "reprodp/models.hpp"
#include "testutil.hpp"

using Catch::Approx;
using reprodp::ModelSpec;
using reprodp::Seed;
using reprodp::SeedBank;
using reprodp::Summary;

namespace {

constexpr double kKsBound = 0.023;  // two-sample, 2e4 vs 2e4, far past 4 sigma
constexpr int kDraws = 20000;

// Column j of `kDraws` engine summaries at a fixed parameter.
std::vector<std::vector<double>> engine_columns(const ModelSpec& m,
                                                const std::vector<double>& theta,
                                                std::uint64_t master) {
  const SeedBank bank = reprodp::draw_seed_bank(m.layout, kDraws, master);
  std::vector<Summary> out;
  if (m.make_batch) {
    reprodp::BatchGenerator batch = m.make_batch(bank);
    batch(theta, &out);
  } else {
    out.reserve(bank.seeds.size());
    for (const Seed& s : bank.seeds) out.push_back(m.generator(theta, s));
  }
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(m.summary_dim));
  for (auto& c : cols) c.reserve(out.size());
  for (const Summary& s : out) {
    for (int j = 0; j < m.summary_dim; ++j) {
      cols[static_cast<std::size_t>(j)].push_back(s[static_cast<std::size_t>(j)]);
    }
  }
  return cols;
}

double laplace_draw(std::mt19937_64& g, double scale) {
  std::exponential_distribution<double> e(1.0);
  return scale * (e(g) - e(g));
}

// Minimum of the two one-sided Mann-Whitney statistics for group = first m.
double mw_u(const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&x](int a, int b) { return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)]; });
  double sum = 0.0;
  for (int r = 0; r < n; ++r) {
    if (order[static_cast<std::size_t>(r)] < m) sum += static_cast<double>(r + 1);
  }
  const double md = m;
  const double u1 = sum - md * (md + 1.0) / 2.0;
  return std::min(u1, (static_cast<double>(n) - md) * md - u1);
}

Seed manual_seed(std::vector<double> data, std::vector<double> dp) {
  Seed s;
  s.data = std::move(data);
  s.dp = std::move(dp);
  return s;
}

}  // namespace

TEST_CASE("the registry lists the eight models") {
  const std::vector<std::string> names = reprodp::model_names();
  REQUIRE(names == std::vector<std::string>{
                       "bernoulli", "poisson", "normal", "linreg", "logistic",
                       "exponential", "bernoulli-unknown-n", "mann-whitney"});
}

TEST_CASE("model constructors reject invalid arguments") {
  REQUIRE_THROWS_AS(reprodp::bernoulli_tulap(0, 1.0), reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::bernoulli_tulap(10, 0.0), reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::poisson_clamped(10, -1, 1.0), reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::normal_locscale(10, 2.0, 1.0, 1.0,
                                             reprodp::NoiseKind::kGaussian),
                    reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::normal_locscale(1, 0.0, 3.0, 1.0,
                                             reprodp::NoiseKind::kGaussian),
                    reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::linreg_ssp(10, 0.0, 1.0), reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::logistic_objpert(10, 1.0, 1.0), reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::exponential_clamped(10, 0.0, 1.0),
                    reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::bernoulli_unknown_n(1.0, 0, 10),
                    reprodp::InvalidArgument);
  REQUIRE_THROWS_AS(reprodp::mann_whitney(1, 0.5, 0.5, reprodp::NoiseKind::kLaplace),
                    reprodp::InvalidArgument);
}

TEST_CASE("layouts and boxes are dimensioned per model") {
  const ModelSpec bern = reprodp::bernoulli_tulap(30, 1.0);
  REQUIRE(bern.layout.data_dims == 30);
  REQUIRE(bern.layout.dp_kinds.size() == 3);
  REQUIRE(bern.summary_dim == 1);
  REQUIRE(bern.box.dim() == 1);

  const ModelSpec pois = reprodp::poisson_clamped(40, 6, 1.0);
  REQUIRE(pois.layout.data_dims == 40);
  REQUIRE(pois.layout.dp_kinds.size() == 1);
  REQUIRE_FALSE(pois.non_identifiable);

  const ModelSpec norm = reprodp::normal_locscale(30, 0.0, 3.0, 1.0,
                                                  reprodp::NoiseKind::kGaussian);
  REQUIRE(norm.layout.data_dims == 30);
  REQUIRE(norm.summary_dim == 2);
  REQUIRE(norm.box.names == std::vector<std::string>{"mu", "sigma"});

  const ModelSpec lin = reprodp::linreg_ssp(50, 2.0, 1.0);
  REQUIRE(lin.layout.data_dims == 100);
  REQUIRE(lin.layout.dp_kinds.size() == 5);
  REQUIRE(lin.summary_dim == 5);
  REQUIRE(lin.box.interest_index == 0);

  const ModelSpec logi = reprodp::logistic_objpert(40, 1.0);
  REQUIRE(logi.layout.data_dims == 80);
  REQUIRE(logi.layout.dp_kinds.size() == 4);
  REQUIRE(logi.summary_dim == 4);
  REQUIRE(logi.box.interest_index == 1);

  const ModelSpec unk = reprodp::bernoulli_unknown_n(1.0);
  REQUIRE(unk.layout.data_dims == 1);
  REQUIRE(unk.summary_dim == 2);
  REQUIRE(unk.box.integer == std::vector<bool>{false, true});

  const ModelSpec mw = reprodp::mann_whitney(100, 0.3, 0.7,
                                             reprodp::NoiseKind::kLaplace);
  REQUIRE(mw.layout.data_dims == 100);
  REQUIRE(mw.box.integer == std::vector<bool>{true});
  REQUIRE(mw.box.upper[0] == 50.0);
}

TEST_CASE("bernoulli count release matches a direct simulation") {
  const int n = 30;
  const double p = 0.35;
  const ModelSpec m = reprodp::bernoulli_tulap(n, 1.0);
  const std::vector<double> lib = engine_columns(m, {p}, 101)[0];

  const double b = std::exp(-1.0);
  std::mt19937_64 g(9001);
  std::binomial_distribution<int> binom(n, p);
  std::geometric_distribution<int> geo(1.0 - b);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> ref;
  ref.reserve(kDraws);
  for (int i = 0; i < kDraws; ++i) {
    const int g1 = geo(g);
    const int g2 = geo(g);
    ref.push_back(static_cast<double>(binom(g)) + static_cast<double>(g1 - g2) +
                  (unif(g) - 0.5));
  }
  REQUIRE(testutil::ks_two_sample(lib, ref) < kKsBound);
}

TEST_CASE("poisson clamped mean matches a direct simulation") {
  const int n = 40, c = 6;
  const double theta = 7.5, eps = 1.0;
  const ModelSpec m = reprodp::poisson_clamped(n, c, eps);
  const std::vector<double> lib = engine_columns(m, {theta}, 102)[0];

  std::mt19937_64 g(9002);
  std::poisson_distribution<int> pois(theta);
  std::normal_distribution<double> z(0.0, 1.0);
  const double scale = static_cast<double>(c) / (n * eps);
  std::vector<double> ref;
  ref.reserve(kDraws);
  for (int i = 0; i < kDraws; ++i) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += std::min(pois(g), c);
    ref.push_back(total / n + scale * z(g));
  }
  REQUIRE(testutil::ks_two_sample(lib, ref) < kKsBound);
}

TEST_CASE("a zero clamp makes the poisson release non-identifiable") {
  const ModelSpec m = reprodp::poisson_clamped(10, 0, 1.0);
  REQUIRE(m.non_identifiable);
  const SeedBank bank = reprodp::draw_seed_bank(m.layout, 5, 1);
  for (const Seed& s : bank.seeds) {
    REQUIRE(m.generator({3.0}, s)[0] == 0.0);
    REQUIRE(m.generator({0.5}, s)[0] == 0.0);
  }
}

TEST_CASE("clamping biases the poisson release downward") {
  const int n = 100;
  const double theta = 10.0;
  const ModelSpec m = reprodp::poisson_clamped(n, 8, 1.0);
  const SeedBank bank = reprodp::draw_seed_bank(m.layout, 2000, 7);
  std::vector<double> s;
  s.reserve(bank.seeds.size());
  for (const Seed& seed : bank.seeds) s.push_back(m.generator({theta}, seed)[0]);
  REQUIRE(testutil::mean(s) < 9.5);
}

TEST_CASE("normal location-scale release matches a direct simulation") {
  const int n = 30;
  const double L = 0.0, U = 3.0, eps = 1.0;
  const double mu = 1.0, sigma = 1.0;
  const double scale1 = (U - L) / (n * eps);
  const double scale2 = (U - L) * (U - L) / (n * eps);

  for (auto kind : {reprodp::NoiseKind::kGaussian, reprodp::NoiseKind::kLaplace}) {
    const ModelSpec m = reprodp::normal_locscale(n, L, U, eps, kind);
    const auto cols = engine_columns(m, {mu, sigma},
                                     kind == reprodp::NoiseKind::kGaussian ? 103 : 104);

    std::mt19937_64 g(kind == reprodp::NoiseKind::kGaussian ? 9003 : 9004);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> ref1, ref2;
    ref1.reserve(kDraws);
    ref2.reserve(kDraws);
    for (int i = 0; i < kDraws; ++i) {
      double s1 = 0.0, s2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double x = reprodp::clamp(mu + sigma * z(g), L, U);
        s1 += x;
        s2 += x * x;
      }
      const double mean = s1 / n;
      const double var = std::max(0.0, s2 - n * mean * mean) / (n - 1);
      const double w1 = kind == reprodp::NoiseKind::kGaussian ? z(g) : laplace_draw(g, 2.0);
      const double w2 = kind == reprodp::NoiseKind::kGaussian ? z(g) : laplace_draw(g, 2.0);
      ref1.push_back(mean + scale1 * w1);
      ref2.push_back(var + scale2 * w2);
    }
    INFO("noise kind " << (kind == reprodp::NoiseKind::kGaussian ? "gaussian" : "laplace"));
    REQUIRE(testutil::ks_two_sample(cols[0], ref1) < kKsBound);
    REQUIRE(testutil::ks_two_sample(cols[1], ref2) < kKsBound);
  }
}

TEST_CASE("linear regression release matches a direct simulation") {
  const int n = 50;
  const double delta = 2.0, mu_gdp = 1.0;
  const std::vector<double> theta = {0.4, -0.5, 0.5, 1.0, 0.25};
  const ModelSpec m = reprodp::linreg_ssp(n, delta, mu_gdp);
  const auto cols = engine_columns(m, theta, 105);

  const double budget = mu_gdp / std::sqrt(5.0);
  const double d2 = delta * delta;
  const std::vector<double> scales = {2.0 * delta / (budget * n), d2 / (budget * n),
                                      2.0 * delta / (budget * n),
                                      2.0 * d2 / (budget * n), d2 / (budget * n)};
  std::mt19937_64 g(9005);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> ref(5);
  for (int i = 0; i < kDraws; ++i) {
    double t[5] = {0, 0, 0, 0, 0};
    for (int j = 0; j < n; ++j) {
      const double x = theta[2] + std::sqrt(theta[3]) * z(g);
      const double y = theta[1] + theta[0] * x + std::sqrt(theta[4]) * z(g);
      t[0] += reprodp::clamp(x, -delta, delta);
      t[1] += std::min(x * x, d2);
      t[2] += reprodp::clamp(y, -delta, delta);
      t[3] += reprodp::clamp(x * y, -d2, d2);
      t[4] += std::min(y * y, d2);
    }
    for (int k = 0; k < 5; ++k) ref[static_cast<std::size_t>(k)].push_back(t[k] / n + scales[static_cast<std::size_t>(k)] * z(g));
  }
  for (std::size_t k = 0; k < 5; ++k) {
    INFO("coordinate " << k);
    REQUIRE(testutil::ks_two_sample(cols[k], ref[k]) < kKsBound);
  }
}

TEST_CASE("linear regression noise enters at the documented scales") {
  const int n = 50;
  const double delta = 2.0, mu_gdp = 1.0;
  const ModelSpec m = reprodp::linreg_ssp(n, delta, mu_gdp);
  const std::vector<double> theta = {0.4, -0.5, 0.5, 1.0, 0.25};
  std::mt19937_64 g(9105);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(2 * n));
  for (double& v : data) v = z(g);
  const Summary base = m.generator(theta, manual_seed(data, {0, 0, 0, 0, 0}));

  const double budget = mu_gdp / std::sqrt(5.0);
  const double d2 = delta * delta;
  const std::vector<double> scales = {2.0 * delta / (budget * n), d2 / (budget * n),
                                      2.0 * delta / (budget * n),
                                      2.0 * d2 / (budget * n), d2 / (budget * n)};
  for (std::size_t j = 0; j < 5; ++j) {
    std::vector<double> dp(5, 0.0);
    dp[j] = 1.0;
    const Summary bumped = m.generator(theta, manual_seed(data, dp));
    for (std::size_t k = 0; k < 5; ++k) {
      const double want = k == j ? scales[k] : 0.0;
      REQUIRE(bumped[k] - base[k] == Approx(want).margin(1e-12 * (1.0 + scales[k])));
    }
  }
}

TEST_CASE("linear regression moments invert exactly on population values") {
  const ModelSpec m = reprodp::linreg_ssp(50, 2.0, 1.0);
  const double b1 = 0.4, b0 = -0.5, ex = 0.5, varx = 1.0, vare = 0.25;
  const double ey = b0 + b1 * ex;
  const Summary s(std::vector<double>{
      ex, varx + ex * ex, ey, b1 * (varx + ex * ex) + b0 * ex,
      b1 * b1 * varx + vare + ey * ey});
  const std::vector<double> est = m.moment_estimate(s);
  REQUIRE(est[0] == Approx(b1).margin(1e-12));
  REQUIRE(est[1] == Approx(b0).margin(1e-12));
  REQUIRE(est[2] == Approx(ex).margin(1e-12));
  REQUIRE(est[3] == Approx(varx).margin(1e-12));
  REQUIRE(est[4] == Approx(vare).margin(1e-12));
}

TEST_CASE("the beta quantile table tracks the exact quantile") {
  for (auto ab : {std::pair<double, double>{2.0, 5.0}, {2.0, 2.0}, {0.5, 0.5},
                  {0.1, 10.0}}) {
    reprodp::models_detail::BetaQuantileTable table(ab.first, ab.second);
    double sup = 0.0;
    for (int i = 1; i < 2000; ++i) {
      const double u = 1e-3 + (1.0 - 2e-3) * i / 2000.0;
      sup = std::max(sup,
                     std::fabs(table(u) - reprodp::beta_quantile(ab.first, ab.second, u)));
    }
    INFO("a = " << ab.first << " b = " << ab.second);
    REQUIRE(sup < 1e-3);
  }
  REQUIRE(reprodp::beta_quantile(0.5, 0.5, 0.5) == Approx(0.5).margin(1e-12));
  REQUIRE_THROWS_AS(reprodp::models_detail::BetaQuantileTable(0.0, 1.0),
                    reprodp::InvalidArgument);
}

TEST_CASE("logistic release matches a direct simulation") {
  const int n = 40;
  const double epsilon = 1.0, share = 0.9;
  const std::vector<double> theta = {0.5, 2.0, 0.5, 0.5};  // beta0, beta1, a, b
  const ModelSpec m = reprodp::logistic_objpert(n, epsilon, share);
  const auto cols = engine_columns(m, theta, 106);

  reprodp::ObjPertConfig cfg;
  cfg.epsilon = share * epsilon;
  const double linf_rate = cfg.epsilon * cfg.q / cfg.delta_inf;
  const double eps_knorm = (1.0 - share) * epsilon;
  const reprodp::NormBall ball = reprodp::hull_ball();
  const reprodp::models_detail::BetaQuantileTable table(theta[2], theta[3]);

  std::mt19937_64 g(9006);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::gamma_distribution<double> rv(3.0, 1.0 / linf_rate);
  std::gamma_distribution<double> rk(3.0, 1.0 / eps_knorm);
  std::vector<std::vector<double>> ref(4);
  std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
  for (int rep = 0; rep < kDraws; ++rep) {
    double t1 = 0.0, t2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double zv = table(unif(g));
      x[static_cast<std::size_t>(i)] = 2.0 * zv - 1.0;
      const double pr = reprodp::expit(theta[0] + theta[1] * x[static_cast<std::size_t>(i)]);
      y[static_cast<std::size_t>(i)] = unif(g) <= pr ? 1.0 : 0.0;
      t1 += zv;
      t2 += zv * zv;
    }
    const double r = rv(g);
    const std::vector<double> v = {r * (2.0 * unif(g) - 1.0),
                                   r * (2.0 * unif(g) - 1.0)};
    double k1 = 0.0, k2 = 0.0;
    for (;;) {
      const double a = 2.0 * unif(g) - 1.0;
      const double b = 2.0 * unif(g) - 1.0;
      if (ball.membership({a, b})) {
        const double rad = rk(g);
        k1 = rad * a;
        k2 = rad * b;
        break;
      }
    }
    reprodp::LossFn loss = [&x, &y, n](const std::vector<double>& th,
                                       std::vector<double>* grad,
                                       std::vector<double>* hess) {
      double total = 0.0;
      if (grad != nullptr) grad->assign(2, 0.0);
      if (hess != nullptr) hess->assign(4, 0.0);
      for (int i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        const double yi = y[static_cast<std::size_t>(i)];
        const double w = th[0] + th[1] * xi;
        total += (w > 0.0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w))) -
                 yi * w;
        if (grad != nullptr || hess != nullptr) {
          const double p = reprodp::expit(w);
          if (grad != nullptr) {
            (*grad)[0] += p - yi;
            (*grad)[1] += (p - yi) * xi;
          }
          if (hess != nullptr) {
            const double h = p * (1.0 - p);
            (*hess)[0] += h;
            (*hess)[1] += h * xi;
            (*hess)[2] += h * xi;
            (*hess)[3] += h * xi * xi;
          }
        }
      }
      return total;
    };
    const std::vector<double> beta = reprodp::objective_perturbation(loss, 2, n, cfg, v);
    ref[0].push_back(beta[0]);
    ref[1].push_back(beta[1]);
    ref[2].push_back(t1 + k1);
    ref[3].push_back(t2 + k2);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    INFO("coordinate " << k);
    REQUIRE(testutil::ks_two_sample(cols[k], ref[k]) < kKsBound);
  }
}

TEST_CASE("logistic moments invert beta shape parameters") {
  const int n = 40;
  const ModelSpec m = reprodp::logistic_objpert(n, 1.0);
  // Beta(2,2): mean 1/2, second moment 3/10.
  const Summary s(std::vector<double>{0.3, -0.8, 0.5 * n, 0.3 * n});
  const std::vector<double> est = m.moment_estimate(s);
  REQUIRE(est[0] == Approx(0.3).margin(1e-12));
  REQUIRE(est[1] == Approx(-0.8).margin(1e-12));
  REQUIRE(est[2] == Approx(2.0).margin(1e-9));
  REQUIRE(est[3] == Approx(2.0).margin(1e-9));
}

TEST_CASE("exponential clamped release matches a direct simulation") {
  const int n = 30;
  const double c = 20.0, eps = 1.0, mu = 10.0;
  const ModelSpec m = reprodp::exponential_clamped(n, c, eps);
  const std::vector<double> lib = engine_columns(m, {mu}, 107)[0];

  std::mt19937_64 g(9007);
  std::exponential_distribution<double> e(1.0);
  const double scale = c / (n * eps);
  std::vector<double> ref;
  ref.reserve(kDraws);
  for (int i = 0; i < kDraws; ++i) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += std::min(mu * e(g), c);
    ref.push_back(total / n + laplace_draw(g, scale));
  }
  REQUIRE(testutil::ks_two_sample(lib, ref) < kKsBound);
}

TEST_CASE("exponential release is exact on a pinned seed") {
  const int n = 5;
  const ModelSpec m = reprodp::exponential_clamped(n, 10.0, 1.0);
  const std::vector<double> u = {0.1, 0.2, 0.3, 0.4, 0.5};
  const Seed seed = manual_seed(u, {0.5});  // Laplace median: zero noise

  double want = 0.0;
  for (double ui : u) want += std::min(2.0 * -std::log1p(-ui), 10.0);
  want /= n;
  REQUIRE(m.generator({2.0}, seed)[0] == Approx(want).margin(1e-12));

  // Large mu clamps every draw at c, so the release is exactly c.
  REQUIRE(m.generator({95.0}, seed)[0] == Approx(10.0).margin(1e-12));
}

TEST_CASE("unknown-size release matches a direct simulation") {
  const double eps = 1.0;
  const ModelSpec m = reprodp::bernoulli_unknown_n(eps);
  const std::vector<double> theta = {0.35, 150.0};
  const auto cols = engine_columns(m, theta, 108);

  std::mt19937_64 g(9008);
  std::binomial_distribution<int> binom(150, 0.35);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> ref(2);
  for (int i = 0; i < kDraws; ++i) {
    const double x = binom(g);
    ref[0].push_back(x + z(g) / eps);
    ref[1].push_back(150.0 - x + z(g) / eps);
  }
  REQUIRE(testutil::ks_two_sample(cols[0], ref[0]) < kKsBound);
  REQUIRE(testutil::ks_two_sample(cols[1], ref[1]) < kKsBound);
}

TEST_CASE("unknown-size release is exact at degenerate proportions") {
  const ModelSpec m = reprodp::bernoulli_unknown_n(1.0);
  const Seed seed = manual_seed({0.7}, {0.0, 0.0});
  const Summary at0 = m.generator({0.0, 100.0}, seed);
  REQUIRE(at0[0] == 0.0);
  REQUIRE(at0[1] == 100.0);
  const Summary at1 = m.generator({1.0, 100.0}, seed);
  REQUIRE(at1[0] == 100.0);
  REQUIRE(at1[1] == 0.0);
}

TEST_CASE("the unknown-size pivot folds to one at its center") {
  const reprodp::TestStatistic stat = reprodp::unknown_n_pivot_statistic(1.0);
  const Summary s_obs(std::vector<double>{50.0, 50.0});
  const std::vector<Summary> repro = {Summary(std::vector<double>{40.0, 60.0}),
                                      Summary(std::vector<double>{55.0, 45.0})};
  std::vector<double> out;
  stat.eval({0.5, 100.0}, s_obs, repro, &out);
  REQUIRE(out.size() == 3);
  REQUIRE(out[0] == 1.0);  // pivot is exactly zero at s1 = n_hat p
  for (double v : out) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("the preliminary size range inverts the total release") {
  const std::pair<long, long> r =
      reprodp::unknown_n_range(Summary(std::vector<double>{20.0, 80.0}), 1.0, 0.9999);
  REQUIRE(r.first == 95);
  REQUIRE(r.second == 105);
  REQUIRE_THROWS_AS(
      reprodp::unknown_n_range(Summary(std::vector<double>{20.0, 80.0}), 1.0, 1.0),
      reprodp::InvalidArgument);
}

TEST_CASE("rank statistic release is exact on a pinned permutation") {
  const ModelSpec m = reprodp::mann_whitney(10, 0.5, 0.5, reprodp::NoiseKind::kLaplace);
  const std::vector<double> data = {0.91, 0.05, 0.5, 0.3, 0.62,
                                    0.11, 0.77, 0.2, 0.45, 0.33};
  const Seed seed = manual_seed(data, {0.5, 0.5});  // zero Laplace noise
  const Summary s = m.generator({3.0}, seed);
  REQUIRE(s[0] == Approx(3.0).margin(1e-12));
  REQUIRE(s[1] == Approx(9.0).margin(1e-12));
}

TEST_CASE("rank statistic release matches a direct simulation under the null") {
  const int n = 100, mg = 30;
  const double eps_m = 0.3, eps_u = 0.7;
  const ModelSpec m = reprodp::mann_whitney(n, eps_m, eps_u,
                                            reprodp::NoiseKind::kLaplace);
  const auto cols = engine_columns(m, {static_cast<double>(mg)}, 109);

  std::mt19937_64 g(9009);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> ref(2);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < kDraws; ++i) {
    for (double& v : x) v = unif(g);
    ref[0].push_back(mg + laplace_draw(g, 1.0) / eps_m);
    ref[1].push_back(mw_u(x, mg) + static_cast<double>(n) * laplace_draw(g, 1.0) / eps_u);
  }
  REQUIRE(testutil::ks_two_sample(cols[0], ref[0]) < kKsBound);
  REQUIRE(testutil::ks_two_sample(cols[1], ref[1]) < kKsBound);
}

TEST_CASE("rank statistic release matches a direct simulation under the shift") {
  const int n = 50, mg = 15;
  const double eps_m = 0.5, eps_u = 0.5;
  const ModelSpec m =
      reprodp::mann_whitney(n, eps_m, eps_u, reprodp::NoiseKind::kGaussian, true);
  REQUIRE(m.name == "mann-whitney-beta");
  REQUIRE_FALSE(static_cast<bool>(m.make_batch));
  const auto cols = engine_columns(m, {static_cast<double>(mg)}, 110);

  std::mt19937_64 g(9010);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> ref(2);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < kDraws; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = unif(g);
      x[static_cast<std::size_t>(j)] = j < mg ? u : reprodp::beta_quantile(2.0, 5.0, u);
    }
    ref[0].push_back(mg + z(g) / eps_m);
    ref[1].push_back(mw_u(x, mg) + static_cast<double>(n) * z(g) / eps_u);
  }
  REQUIRE(testutil::ks_two_sample(cols[0], ref[0]) < kKsBound);
  REQUIRE(testutil::ks_two_sample(cols[1], ref[1]) < kKsBound);
}

TEST_CASE("moment estimates land inside each model box") {
  struct Case {
    ModelSpec model;
    std::vector<double> theta;
  };
  std::vector<Case> cases;
  cases.push_back({reprodp::bernoulli_tulap(30, 1.0), {0.35}});
  cases.push_back({reprodp::poisson_clamped(40, 6, 1.0), {7.5}});
  cases.push_back({reprodp::normal_locscale(30, 0.0, 3.0, 1.0,
                                            reprodp::NoiseKind::kGaussian),
                   {1.0, 1.0}});
  cases.push_back({reprodp::linreg_ssp(50, 2.0, 1.0), {0.4, -0.5, 0.5, 1.0, 0.25}});
  cases.push_back({reprodp::logistic_objpert(40, 1.0), {0.5, 2.0, 0.5, 0.5}});
  cases.push_back({reprodp::exponential_clamped(30, 20.0, 1.0), {10.0}});
  cases.push_back({reprodp::bernoulli_unknown_n(1.0), {0.35, 150.0}});
  cases.push_back({reprodp::mann_whitney(100, 0.3, 0.7, reprodp::NoiseKind::kLaplace),
                   {30.0}});
  for (const Case& c : cases) {
    const SeedBank bank = reprodp::draw_seed_bank(c.model.layout, 3, 55);
    for (const Seed& seed : bank.seeds) {
      const Summary s = reprodp::generate(c.model, c.theta, seed);
      const std::vector<double> est = c.model.moment_estimate(s);
      INFO(c.model.name);
      REQUIRE(est.size() == c.theta.size());
      REQUIRE(c.model.box.contains(est));
    }
  }
}

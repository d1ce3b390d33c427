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

#ifndef REPRODP_ENGINE_HPP_
#define REPRODP_ENGINE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "reprodp/error.hpp"
#include "reprodp/mathutil.hpp"
#include "reprodp/rng.hpp"

namespace reprodp {

// A released summary statistic s in R^d.
struct Summary {
  std::vector<double> values;

  Summary() = default;
  explicit Summary(std::vector<double> v) : values(std::move(v)) {}
  std::size_t dim() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// One stored randomness draw u: the data part feeds the data-generating
// map, the dp part feeds the privacy mechanism. `rejection` is a replayable
// sub-stream for mechanisms that need a variable number of draws.
struct Seed {
  std::vector<double> data;
  std::vector<double> dp;
  RngStream rejection{0, 0};
};

enum class SlotKind { kUniform, kNormal };

// Declares how many seed slots a model consumes and how each is distributed.
// Uniform slots are u in (0,1); normal slots are stored as z-values.
struct SeedLayout {
  int data_dims = 0;
  SlotKind data_kind = SlotKind::kUniform;
  std::vector<SlotKind> dp_kinds;

  int dp_dims() const { return static_cast<int>(dp_kinds.size()); }
};

// The fixed bank u_1..u_R reused for every theta during search.
struct SeedBank {
  std::vector<Seed> seeds;
  std::uint64_t master_seed = 0;

  int R() const { return static_cast<int>(seeds.size()); }
};

// Parameter search box. `integer` coordinates take integral values and are
// enumerated exhaustively by the optimizer.
struct ParamBox {
  std::vector<double> lower, upper;
  std::vector<std::string> names;
  std::vector<bool> integer;
  int interest_index = 0;

  int dim() const { return static_cast<int>(lower.size()); }

  void validate() const {
    if (lower.size() != upper.size() || (names.size() != lower.size() && !names.empty()) ||
        (integer.size() != lower.size() && !integer.empty())) {
      throw InvalidArgument("ParamBox field lengths disagree");
    }
    if (lower.empty()) throw InvalidArgument("ParamBox is empty");
    for (std::size_t j = 0; j < lower.size(); ++j) {
      if (!(lower[j] <= upper[j])) throw InvalidArgument("ParamBox lower > upper");
    }
    if (interest_index < 0 || interest_index >= dim()) {
      throw InvalidArgument("ParamBox interest_index out of range");
    }
  }

  bool is_integer(int j) const {
    return !integer.empty() && integer[static_cast<std::size_t>(j)];
  }

  bool contains(const std::vector<double>& theta) const {
    if (theta.size() != lower.size()) return false;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (!(theta[j] >= lower[j] && theta[j] <= upper[j])) return false;
      if (is_integer(static_cast<int>(j)) && theta[j] != std::floor(theta[j])) return false;
    }
    return true;
  }
};

// How emitted statistic values are oriented. Band selection and the
// fold applied before rank-based algorithms depend on this tag.
enum class Orientation { kLowUnusual, kHighUnusual, kTwoSided };

// A permutation-invariant statistic evaluated over the whole conditioning
// cloud (s_obs, s_1..s_R): out[0] is T(s_obs; cloud), out[1+i] is
// T(s_i; cloud). theta is available for pivot-style statistics.
struct TestStatistic {
  std::string label;
  Orientation orientation = Orientation::kLowUnusual;
  std::function<void(const std::vector<double>& theta, const Summary& s_obs,
                     const std::vector<Summary>& repro,
                     std::vector<double>* out)>
      eval;
};

// Batch generator produced per bank: fills one summary per bank seed.
using BatchGenerator =
    std::function<void(const std::vector<double>& theta, std::vector<Summary>* out)>;

// A registered model: generating equation plus its search box, seed layout
// and default statistic. `make_batch` is an optional per-bank fast path that
// must agree with `generator` (tests enforce this).
struct ModelSpec {
  std::string name;
  std::string privacy_label;
  ParamBox box;
  SeedLayout layout;
  int summary_dim = 1;
  bool non_identifiable = false;
  std::function<Summary(const std::vector<double>& theta, const Seed& seed)> generator;
  std::function<BatchGenerator(const SeedBank& bank)> make_batch;
  std::function<std::vector<double>(const Summary& s_obs)> moment_estimate;
  TestStatistic default_statistic;
};

// Draws the seed at bank stream `stream` under `master_seed`. Pure function
// of (master_seed, stream, layout): banks are prefix-stable in R and every
// draw is independent of evaluation order.
inline Seed draw_seed(const SeedLayout& layout, std::uint64_t master_seed,
                      std::uint64_t stream, std::uint64_t rejection_stream) {
  Seed s;
  const RngStream rs(master_seed, stream);
  s.data.resize(static_cast<std::size_t>(layout.data_dims));
  for (int j = 0; j < layout.data_dims; ++j) {
    const double u = rs.uniform(static_cast<std::uint64_t>(j));
    s.data[static_cast<std::size_t>(j)] =
        layout.data_kind == SlotKind::kUniform ? u : normal_quantile(u);
  }
  s.dp.resize(layout.dp_kinds.size());
  for (std::size_t k = 0; k < layout.dp_kinds.size(); ++k) {
    const double u =
        rs.uniform(static_cast<std::uint64_t>(layout.data_dims) + k);
    s.dp[k] = layout.dp_kinds[k] == SlotKind::kUniform ? u : normal_quantile(u);
  }
  s.rejection = RngStream(master_seed, rejection_stream);
  return s;
}

inline SeedBank draw_seed_bank(const SeedLayout& layout, int R,
                               std::uint64_t master_seed) {
  if (R < 1) throw InvalidArgument("draw_seed_bank needs R >= 1");
  SeedBank bank;
  bank.master_seed = master_seed;
  bank.seeds.reserve(static_cast<std::size_t>(R));
  for (int i = 0; i < R; ++i) {
    bank.seeds.push_back(draw_seed(layout, master_seed,
                                   stream_id::bank(static_cast<std::uint64_t>(i)),
                                   stream_id::rejection(static_cast<std::uint64_t>(i))));
  }
  return bank;
}

// Observed-data seed for experiments (a stream disjoint from every bank seed).
inline Seed draw_observed_seed(const SeedLayout& layout, std::uint64_t master_seed) {
  return draw_seed(layout, master_seed, stream_id::observed(),
                   stream_id::rejection(0xFFFFFFFFULL));
}

// Validated generating-equation evaluation: s = G(theta, u).
inline Summary generate(const ModelSpec& model, const std::vector<double>& theta,
                        const Seed& seed) {
  if (!model.box.contains(theta)) {
    throw InvalidArgument("generate: theta outside the model box for '" + model.name + "'");
  }
  if (seed.data.size() != static_cast<std::size_t>(model.layout.data_dims) ||
      seed.dp.size() != model.layout.dp_kinds.size()) {
    throw InvalidArgument("generate: seed layout mismatch for '" + model.name + "'");
  }
  Summary s = model.generator(theta, seed);
  if (s.dim() != static_cast<std::size_t>(model.summary_dim)) {
    throw NonFiniteSummary("generate: wrong summary dimension from '" + model.name + "'");
  }
  for (double v : s.values) {
    if (!std::isfinite(v)) {
      throw NonFiniteSummary("generate: non-finite summary from '" + model.name + "'");
    }
  }
  return s;
}

// Rank of the observed statistic within the repro sample at theta.
struct RankResult {
  double t_obs = 0.0;
  std::vector<double> t_repro;
  int count_leq = 0;  // #{ i : T_i <= T_obs }, ties inclusive
  std::vector<double> theta;
};

// Lightweight per-theta result for hot loops.
struct RankPoint {
  int count_leq = 0;
  double t_obs = 0.0;
};

// Binds (model, bank, s_obs, statistic) and evaluates ranks at thetas.
// `fold_to_low` maps emitted values so that low = unusual:
// high_unusual t -> 1-t, two_sided t -> 1-|2t-1|.
class RankEvaluator {
 public:
  RankEvaluator(const ModelSpec& model, const SeedBank& bank, Summary s_obs,
                TestStatistic stat, bool fold_to_low)
      : model_(&model),
        bank_(&bank),
        s_obs_(std::move(s_obs)),
        stat_(std::move(stat)),
        fold_(fold_to_low) {
    if (bank.R() < 1) throw InvalidArgument("RankEvaluator needs a nonempty bank");
    if (s_obs_.dim() != static_cast<std::size_t>(model.summary_dim)) {
      throw InvalidArgument("RankEvaluator: observed summary has wrong dimension");
    }
    if (model.make_batch) {
      batch_ = model.make_batch(bank);
    } else {
      const ModelSpec* m = model_;
      const SeedBank* b = bank_;
      batch_ = [m, b](const std::vector<double>& theta, std::vector<Summary>* out) {
        out->resize(b->seeds.size());
        for (std::size_t i = 0; i < b->seeds.size(); ++i) {
          (*out)[i] = m->generator(theta, b->seeds[i]);
        }
      };
    }
  }

  int R() const { return bank_->R(); }
  const ModelSpec& model() const { return *model_; }
  const SeedBank& bank() const { return *bank_; }
  const Summary& observed() const { return s_obs_; }
  const TestStatistic& statistic() const { return stat_; }

  RankPoint rank(const std::vector<double>& theta) {
    evaluate_cloud(theta);
    RankPoint p;
    p.t_obs = tvals_[0];
    for (std::size_t i = 1; i < tvals_.size(); ++i) {
      if (tvals_[i] <= p.t_obs) ++p.count_leq;
    }
    return p;
  }

  RankResult full_rank(const std::vector<double>& theta) {
    evaluate_cloud(theta);
    RankResult r;
    r.theta = theta;
    r.t_obs = tvals_[0];
    r.t_repro.assign(tvals_.begin() + 1, tvals_.end());
    for (double t : r.t_repro) {
      if (t <= r.t_obs) ++r.count_leq;
    }
    return r;
  }

 private:
  void evaluate_cloud(const std::vector<double>& theta) {
    batch_(theta, &repro_);
    for (const Summary& s : repro_) {
      for (double v : s.values) {
        if (!std::isfinite(v)) {
          throw NonFiniteSummary("rank: non-finite repro summary from '" + model_->name + "'");
        }
      }
    }
    stat_.eval(theta, s_obs_, repro_, &tvals_);
    if (tvals_.size() != repro_.size() + 1) {
      throw NumericError("rank: statistic returned wrong cloud size");
    }
    for (double& t : tvals_) {
      if (!std::isfinite(t) || t < -1e-9 || t > 1.0 + 1e-9) {
        throw NumericError("rank: statistic value outside [0,1]");
      }
      if (fold_) {
        switch (stat_.orientation) {
          case Orientation::kLowUnusual:
            break;
          case Orientation::kHighUnusual:
            t = 1.0 - t;
            break;
          case Orientation::kTwoSided:
            t = 1.0 - std::fabs(2.0 * t - 1.0);
            break;
        }
      }
    }
  }

  const ModelSpec* model_;
  const SeedBank* bank_;
  Summary s_obs_;
  TestStatistic stat_;
  bool fold_;
  BatchGenerator batch_;
  std::vector<Summary> repro_;
  std::vector<double> tvals_;
};

// One-shot rank (statistic values as emitted, no orientation fold).
inline RankResult rank_at(const ModelSpec& model, const std::vector<double>& theta,
                          const SeedBank& bank, const Summary& s_obs,
                          const TestStatistic& stat) {
  RankEvaluator ev(model, bank, s_obs, stat, /*fold_to_low=*/false);
  return ev.full_rank(theta);
}

}  // namespace reprodp

#endif  // REPRODP_ENGINE_HPP_

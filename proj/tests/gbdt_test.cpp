// Copyright 2026 The LGSQE Authors
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


#include <gtest/gtest.h>

#include <cmath>

#include "lgsqe/error.hpp"
#include "lgsqe/gbdt.hpp"
#include "lgsqe/parallel.hpp"
#include "support.hpp"

namespace lgsqe {
namespace {

BoostParams stump(double lambda = 1.0) {
  BoostParams p;
  p.num_trees = 1;
  p.max_depth = 1;
  p.lambda = lambda;
  p.min_samples_leaf = 1;
  return p;
}

TEST(Boosting, FourPointLeafWeightsBalanced) {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const std::vector<Label> y = {0, 0, 1, 1};
  const BoostedEnsemble e = fit_ensemble(x, y, stump());
  // Prior 1/2: margin 0, p = 0.5, g = p - y = +-0.5, h = 0.25.
  EXPECT_EQ(e.base_score, 0.0);
  ASSERT_EQ(e.trees.size(), 1u);
  const RegressionTree& t = e.trees[0];
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 1.5);
  const double w = 1.0 / (0.5 + 1.0);
  EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].weight, -w, 1e-12);
  EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].weight, w, 1e-12);
}

TEST(Boosting, FourPointLeafWeightsSkewed) {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const std::vector<Label> y = {0, 1, 1, 1};
  const double lambda = 0.5;
  const BoostedEnsemble e = fit_ensemble(x, y, stump(lambda));
  EXPECT_NEAR(e.base_score, std::log(3.0), 1e-15);
  // p = 0.75 everywhere; g = [0.75, -0.25, -0.25, -0.25], h = 0.1875.
  // Gains (doubled): t=0.5 -> 0.5625/0.6875 + 0.5625/1.0625 - 0/1.25 is the best.
  const RegressionTree& t = e.trees[0];
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].threshold, 0.5);
  EXPECT_NEAR(t.nodes[1].weight, -0.75 / (0.1875 + lambda), 1e-12);
  EXPECT_NEAR(t.nodes[2].weight, 0.75 / (3 * 0.1875 + lambda), 1e-12);
}

TEST(Boosting, StumpMatchesExhaustiveSplitSearch) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 30, d = 3;
    Eigen::MatrixXd x(n, d);
    std::vector<Label> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(rng.index(12));
    for (auto& l : y) l = static_cast<Label>(rng.index(2));
    y[0] = 0;
    y[1] = 1;
    BoostParams p = stump();
    p.min_samples_leaf = 3;
    const BoostedEnsemble e = fit_ensemble(x, y, p);
    const double prior = std::count(y.begin(), y.end(), 1) / static_cast<double>(n);
    const double pr = prior, h = pr * (1 - pr);
    auto gain_of = [&](Eigen::Index f, double t, std::size_t min_leaf) {
      double gl = 0, hl = 0, gr = 0, hr = 0;
      std::size_t nl = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double g = pr - y[static_cast<std::size_t>(i)];
        if (x(i, f) < t) {
          gl += g;
          hl += h;
          ++nl;
        } else {
          gr += g;
          hr += h;
        }
      }
      if (nl < min_leaf || static_cast<std::size_t>(n) - nl < min_leaf) return -1.0;
      return split_gain(gl, hl, gr, hr, 1.0);
    };
    double best_gain = 0.0;
    for (Eigen::Index f = 0; f < d; ++f) {
      for (int v = 0; v < 12; ++v) best_gain = std::max(best_gain, gain_of(f, v + 0.5, 3));
    }
    const TreeNode& root = e.trees[0].nodes[0];
    if (best_gain <= 1e-12) {
      EXPECT_TRUE(root.is_leaf()) << "trial " << trial;
      continue;
    }
    // Equal label counts on both sides tie exactly; any optimal split is fine.
    ASSERT_FALSE(root.is_leaf()) << "trial " << trial;
    EXPECT_NEAR(gain_of(root.feature, root.threshold, 3), best_gain, 1e-9) << "trial " << trial;
  }
}

TEST(Boosting, SplitGainFormula) {
  EXPECT_DOUBLE_EQ(split_gain(1.0, 0.5, -1.0, 0.5, 1.0), 0.5 * (1 / 1.5 + 1 / 1.5 - 0.0));
  EXPECT_DOUBLE_EQ(leaf_weight(2.0, 3.0, 1.0), -0.5);
}

std::pair<Eigen::MatrixXd, std::vector<Label>> synthetic(std::size_t n, std::uint64_t seed,
                                                         bool informative) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 5);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<Label>(i % 2);
    for (Eigen::Index f = 0; f < 5; ++f) {
      const double shift = informative && f < 2 ? 0.8 * y[i] : 0.0;
      x(static_cast<Eigen::Index>(i), f) = rng.normal() + shift;
    }
  }
  return {x, y};
}

TEST(Boosting, TrainingLossNeverIncreases) {
  const auto [x, y] = synthetic(2000, 1, true);
  BoostParams p;  // defaults: 200 trees, depth 4
  const BoostedEnsemble e = fit_ensemble(x, y, p);
  ASSERT_EQ(e.trees.size(), 200u);
  const auto losses = staged_log_loss(e, x, y);
  for (std::size_t r = 1; r < losses.size(); ++r) {
    EXPECT_LE(losses[r], losses[r - 1] + 1e-12) << "round " << r;
  }
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Boosting, SeparableOneDimensional) {
  Eigen::MatrixXd x(100, 1);
  std::vector<Label> y(100);
  for (int i = 0; i < 100; ++i) {
    x(i, 0) = i < 50 ? -1.0 - i : 1.0 + i;
    y[static_cast<std::size_t>(i)] = i < 50 ? 0 : 1;
  }
  BoostParams p;
  p.num_trees = 50;
  const auto scores = predict_score(fit_ensemble(x, y, p), x);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(scores[i] >= 0.5, y[i] == 1);
}

TEST(Boosting, NoiseLabelsScoreNearHalf) {
  const auto [x, y] = synthetic(2000, 2, false);
  const auto [probe, unused] = synthetic(2000, 3, false);
  const auto scores = predict_score(fit_ensemble(x, y, BoostParams{}), probe);
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(Boosting, EmptyEnsembleScoresHalf) {
  BoostedEnsemble e;
  e.num_features = 2;
  const auto scores = predict_score(e, Eigen::MatrixXd::Random(5, 2));
  for (double s : scores) EXPECT_EQ(s, 0.5);
}

TEST(Boosting, ScoresStayInsideOpenInterval) {
  const auto [x, y] = synthetic(500, 4, true);
  BoostParams p;
  p.learning_rate = 1.0;
  p.num_trees = 60;
  for (double s : predict_score(fit_ensemble(x, y, p), x)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Boosting, MonotoneTransformKeepsDecisions) {
  const auto [x, y] = synthetic(400, 5, true);
  const Eigen::MatrixXd z = x.array().exp().matrix() * 3.0;
  BoostParams p;
  p.num_trees = 20;
  const BoostedEnsemble a = fit_ensemble(x, y, p);
  const BoostedEnsemble b = fit_ensemble(z, y, p);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      EXPECT_EQ(a.trees[t].nodes[k].feature, b.trees[t].nodes[k].feature);
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_EQ(a.trees[t].leaf_index(x.data() + i, static_cast<std::size_t>(x.rows())),
                b.trees[t].leaf_index(z.data() + i, static_cast<std::size_t>(z.rows())));
    }
  }
}

bool same_trees(const BoostedEnsemble& a, const BoostedEnsemble& b) {
  if (a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const auto& na = a.trees[t].nodes;
    const auto& nb = b.trees[t].nodes;
    if (na.size() != nb.size()) return false;
    for (std::size_t k = 0; k < na.size(); ++k) {
      if (na[k].feature != nb[k].feature || na[k].threshold != nb[k].threshold ||
          na[k].weight != nb[k].weight || na[k].left != nb[k].left)
        return false;
    }
  }
  return true;
}

TEST(Boosting, DeterministicAcrossRunsAndThreads) {
  const auto [x, y] = synthetic(600, 6, true);
  BoostParams p;
  p.num_trees = 30;
  p.subsample = 0.7;
  p.seed = 11;
  set_num_threads(1);
  const BoostedEnsemble a = fit_ensemble(x, y, p);
  set_num_threads(3);
  const BoostedEnsemble b = fit_ensemble(x, y, p);
  set_num_threads(0);
  EXPECT_TRUE(same_trees(a, b));
  p.seed = 12;
  EXPECT_FALSE(same_trees(a, fit_ensemble(x, y, p)));
}

TEST(Boosting, EarlyStoppingTruncates) {
  const auto [x, y] = synthetic(600, 7, false);
  BoostParams p;
  p.num_trees = 200;
  p.early_stopping_rounds = 5;
  p.validation_fraction = 0.3;
  const BoostedEnsemble e = fit_ensemble(x, y, p);
  EXPECT_LT(e.trees.size(), 200u);
}

TEST(Boosting, RejectsDegenerateInput) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  EXPECT_THROW(fit_ensemble(x, std::vector<Label>{1, 1, 1}, BoostParams{}), Error);
  BoostParams p;
  p.subsample = 0.0;
  EXPECT_THROW(fit_ensemble(x, std::vector<Label>{0, 1, 1}, p), Error);
  BoostedEnsemble e;
  e.num_features = 2;
  EXPECT_THROW(predict_score(e, x), Error);
}

}  // namespace
}  // namespace lgsqe

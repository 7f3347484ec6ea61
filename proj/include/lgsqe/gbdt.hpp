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

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lgsqe/image_set.hpp"

namespace lgsqe {

struct BoostParams {
  std::size_t num_trees = 200;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  /// L2 regularization on leaf weights.
  double lambda = 1.0;
  std::size_t min_samples_leaf = 5;
  /// Row fraction drawn without replacement for each tree.
  double subsample = 1.0;
  std::uint64_t seed = 0;
  /// 0 disables early stopping. Otherwise `validation_fraction` of the rows
  /// is held out and boosting stops once its log loss has not improved for
  /// this many rounds; the ensemble is truncated to the best round.
  std::size_t early_stopping_rounds = 0;
  double validation_fraction = 0.1;

  bool operator==(const BoostParams&) const = default;
};

/// Internal nodes route x[feature] < threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double weight = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  /// Node 0 is the root.
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(const double* row, std::size_t stride) const;
  double predict(const double* row, std::size_t stride) const {
    return nodes[leaf_index(row, stride)].weight;
  }
};

struct BoostedEnsemble {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  /// Prior log-odds of the training labels.
  double base_score = 0.0;
  std::size_t num_features = 0;
  BoostParams params;

  /// base_score + learning_rate * sum of the first `rounds` tree outputs.
  double margin(const double* row, std::size_t stride,
                std::size_t rounds = SIZE_MAX) const;
};

/// Second-order boosting on the logistic loss with exact greedy splits.
/// `features` is samples x features; labels must contain both classes.
BoostedEnsemble fit_ensemble(const Eigen::MatrixXd& features,
                             std::span<const Label> labels, const BoostParams& params);

/// Soft scores sigmoid(margin) in (0, 1), one per row. Rows are scored in
/// parallel.
std::vector<double> predict_score(const BoostedEnsemble& ensemble,
                                  const Eigen::MatrixXd& features);

/// Mean logistic loss after 0, 1, ..., trees.size() rounds.
std::vector<double> staged_log_loss(const BoostedEnsemble& ensemble,
                                    const Eigen::MatrixXd& features,
                                    std::span<const Label> labels);

/// Structure gain 0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)).
double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda);
inline double leaf_weight(double grad, double hess, double lambda) {
  return -grad / (hess + lambda);
}

}  // namespace lgsqe

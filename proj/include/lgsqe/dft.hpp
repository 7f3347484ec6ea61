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

// Discriminant Feature Test: scores each feature dimension by the lowest
// weighted binary-partition entropy of the labels over uniformly spaced
// candidate thresholds. Lower loss means a more discriminant dimension.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lgsqe/image_set.hpp"
#include "lgsqe/saab.hpp"

namespace lgsqe {

struct DftResult {
  /// Weighted entropy in nats at the best threshold.
  double loss = 0.0;
  double threshold = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Candidates are the num_bins - 1 interior points
/// min + (max - min) * j / num_bins. Samples with value < t fall left. Ties in
/// loss resolve to the smallest threshold. A constant feature reports the
/// label entropy and threshold = min.
DftResult dft_loss(std::span<const double> values, std::span<const Label> labels,
                   std::size_t num_bins);

/// Entropy of the label prior, the upper bound of every DFT loss.
double label_entropy(std::span<const Label> labels);

struct DftRanking {
  std::vector<DftResult> columns;
  /// Column indices by ascending loss, ties by column index.
  std::vector<std::size_t> order;
  std::size_t num_bins = 32;
};

/// Columns are scored in parallel and merged by index.
DftRanking rank_features(const FeatureMatrix& features, std::span<const Label> labels,
                         std::size_t num_bins);
DftRanking rank_features(const Eigen::MatrixXd& features, std::span<const Label> labels,
                         std::size_t num_bins);

enum class SelectionMode { kTopK, kElbow };

struct SelectionSpec {
  SelectionMode mode = SelectionMode::kTopK;
  std::size_t k = 0;

  static SelectionSpec top_k(std::size_t k) { return {SelectionMode::kTopK, k}; }
  static SelectionSpec elbow() { return {SelectionMode::kElbow, 0}; }
};

struct FeatureSelection {
  /// Selected column indices, ascending by loss.
  std::vector<std::size_t> columns;
  SelectionMode mode = SelectionMode::kTopK;
  /// Requested k for top-k, detected curve index for elbow.
  std::size_t parameter = 0;
};

/// Index of the sorted-loss point farthest from the chord joining the first
/// and last points. Needs at least 3 points.
std::size_t elbow_index(std::span<const double> sorted_losses);

FeatureSelection select_features(const DftRanking& ranking, const SelectionSpec& spec);

/// column_index,loss,threshold rows in ascending-loss order.
void write_ranking_csv(const DftRanking& ranking, std::ostream& out);

}  // namespace lgsqe

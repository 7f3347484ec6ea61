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

#include "lgsqe/dft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "lgsqe/error.hpp"
#include "lgsqe/parallel.hpp"

namespace lgsqe {

namespace {

// Binary entropy in nats of a side holding `ones` positives out of `n`.
double side_entropy(std::size_t ones, std::size_t n) {
  if (n == 0) return 0.0;
  double h = 0.0;
  const double p1 = static_cast<double>(ones) / static_cast<double>(n);
  const double p0 = 1.0 - p1;
  if (p0 > 0.0) h -= p0 * std::log(p0);
  if (p1 > 0.0) h -= p1 * std::log(p1);
  return h;
}

double weighted_entropy(std::size_t left_ones, std::size_t left_n,
                        std::size_t total_ones, std::size_t n) {
  const std::size_t right_n = n - left_n;
  const std::size_t right_ones = total_ones - left_ones;
  const double w_left = static_cast<double>(left_n) / static_cast<double>(n);
  const double w_right = static_cast<double>(right_n) / static_cast<double>(n);
  return w_left * side_entropy(left_ones, left_n) +
         w_right * side_entropy(right_ones, right_n);
}

}  // namespace

double label_entropy(std::span<const Label> labels) {
  const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1}));
  return side_entropy(ones, labels.size());
}

DftResult dft_loss(std::span<const double> values, std::span<const Label> labels,
                   std::size_t num_bins) {
  if (values.size() != labels.size()) {
    fail(ErrorKind::kShape, "feature and label lengths differ");
  }
  if (num_bins < 2) fail(ErrorKind::kArgument, "num_bins must be at least 2");
  const std::size_t n = values.size();
  std::size_t ones = 0;
  for (Label l : labels) {
    if (l > 1) fail(ErrorKind::kArgument, "labels must be 0 or 1");
    ones += l;
  }
  if (ones == 0 || ones == n) {
    fail(ErrorKind::kArgument, "DFT loss needs both classes present");
  }
  DftResult out;
  out.min = values[0];
  out.max = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::kArgument, "non-finite feature value");
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  if (out.min == out.max) {
    out.loss = side_entropy(ones, n);
    out.threshold = out.min;
    return out;
  }

  const std::size_t candidates = num_bins - 1;
  std::vector<double> thresholds(candidates);
  const double span = out.max - out.min;
  for (std::size_t j = 0; j < candidates; ++j) {
    thresholds[j] = out.min + span * static_cast<double>(j + 1) / static_cast<double>(num_bins);
  }
  // bucket b holds values with thresholds[b-1] <= v < thresholds[b]; a value
  // lies left of thresholds[j] exactly when its bucket is <= j.
  std::vector<std::size_t> bucket_n(candidates + 1, 0), bucket_ones(candidates + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), values[i]) -
        thresholds.begin());
    ++bucket_n[b];
    bucket_ones[b] += labels[i];
  }
  std::size_t left_n = 0, left_ones = 0;
  out.loss = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates; ++j) {
    left_n += bucket_n[j];
    left_ones += bucket_ones[j];
    const double h = weighted_entropy(left_ones, left_n, ones, n);
    if (h < out.loss) {
      out.loss = h;
      out.threshold = thresholds[j];
    }
  }
  return out;
}

namespace {

DftRanking rank_columns(const Eigen::MatrixXd& values, std::span<const Label> labels,
                        std::size_t num_bins) {
  if (static_cast<std::size_t>(values.rows()) != labels.size()) {
    fail(ErrorKind::kShape, "feature rows and label count differ");
  }
  DftRanking ranking;
  ranking.num_bins = num_bins;
  const auto cols = static_cast<std::size_t>(values.cols());
  ranking.columns.resize(cols);
  parallel_for(cols, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto col = values.col(static_cast<Eigen::Index>(c));
      ranking.columns[c] =
          dft_loss(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                   labels, num_bins);
    }
  });
  ranking.order.resize(cols);
  std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ranking.columns[a].loss < ranking.columns[b].loss;
                   });
  return ranking;
}

}  // namespace

DftRanking rank_features(const FeatureMatrix& features, std::span<const Label> labels,
                         std::size_t num_bins) {
  return rank_columns(features.values, labels, num_bins);
}

DftRanking rank_features(const Eigen::MatrixXd& features, std::span<const Label> labels,
                         std::size_t num_bins) {
  return rank_columns(features, labels, num_bins);
}

std::size_t elbow_index(std::span<const double> sorted_losses) {
  const std::size_t d = sorted_losses.size();
  if (d < 3) fail(ErrorKind::kArgument, "elbow selection needs at least 3 dimensions");
  const double x1 = static_cast<double>(d - 1);
  const double y0 = sorted_losses.front();
  const double dy = sorted_losses.back() - y0;
  const double norm = std::hypot(x1, dy);
  std::size_t best = 0;
  double best_distance = -1.0;
  for (std::size_t i = 0; i < d; ++i) {
    // Distance from (i, L_i) to the line through (0, y0) and (x1, y0 + dy).
    const double distance =
        std::abs(dy * static_cast<double>(i) - x1 * (sorted_losses[i] - y0)) / norm;
    if (distance > best_distance) {
      best_distance = distance;
      best = i;
    }
  }
  return best;
}

FeatureSelection select_features(const DftRanking& ranking, const SelectionSpec& spec) {
  const std::size_t d = ranking.order.size();
  FeatureSelection out;
  out.mode = spec.mode;
  std::size_t count = 0;
  if (spec.mode == SelectionMode::kTopK) {
    if (spec.k < 1 || spec.k > d) {
      fail(ErrorKind::kArgument, "top-k of " + std::to_string(spec.k) +
                                     " outside [1, " + std::to_string(d) + "]");
    }
    count = spec.k;
    out.parameter = spec.k;
  } else {
    std::vector<double> sorted(d);
    for (std::size_t i = 0; i < d; ++i) sorted[i] = ranking.columns[ranking.order[i]].loss;
    out.parameter = elbow_index(sorted);
    count = out.parameter + 1;
  }
  out.columns.assign(ranking.order.begin(),
                     ranking.order.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

void write_ranking_csv(const DftRanking& ranking, std::ostream& out) {
  out << "column_index,loss,threshold\n";
  char buf[96];
  for (std::size_t c : ranking.order) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", c, ranking.columns[c].loss,
                  ranking.columns[c].threshold);
    out << buf;
  }
}

}  // namespace lgsqe

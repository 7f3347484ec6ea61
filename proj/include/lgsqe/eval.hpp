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

// Turns per-sample soft scores into confusion counts, threshold metrics,
// precision-recall area, histograms and quality-filtered subsets. The
// positive class is "generated" (label 1); a score d >= t predicts generated.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgsqe/image_set.hpp"

namespace lgsqe {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const double> scores, std::span<const Label> labels,
                          double threshold);

/// Absent when the denominator is zero.
std::optional<double> accuracy(const ConfusionCounts& c);
std::optional<double> precision(const ConfusionCounts& c);
std::optional<double> recall(const ConfusionCounts& c);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// Thresholds are every distinct score plus 0 and 1, visited from high to
/// low; points with undefined precision are dropped.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const Label> labels);

/// Trapezoidal area under pr_curve, anchored at recall 0 with the precision
/// of the first defined point.
double pr_auc(std::span<const double> scores, std::span<const Label> labels);

/// Probability that a random generated sample outscores a random real one,
/// ties counted half. Diagnostic companion to pr_auc.
double roc_auc(std::span<const double> scores, std::span<const Label> labels);

struct ScoreHistogram {
  std::size_t bins = 0;
  std::vector<std::uint64_t> real;
  std::vector<std::uint64_t> generated;

  /// bins + 1 uniform edges over [0, 1].
  std::vector<double> edges() const;
};

/// Uniform bins over [0, 1]; the last bin is closed on the right.
ScoreHistogram score_histogram(std::span<const double> scores,
                               std::span<const Label> provenance, std::size_t bins);

/// Ids of the floor(keep_fraction * n) lowest-scored samples, in ascending
/// score order with ties broken by id.
std::vector<std::uint64_t> filter_samples(std::span<const std::uint64_t> ids,
                                          std::span<const double> scores,
                                          double keep_fraction);

struct EvaluationReport {
  double threshold = 0.5;
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  double pr_auc = 0.0;
  double roc_auc = 0.0;
  double mean_score_real = 0.0;
  double mean_score_generated = 0.0;
  ScoreHistogram histogram;
};

EvaluationReport aggregate_report(std::span<const double> scores,
                                  std::span<const Label> labels, double threshold,
                                  std::size_t bins);

/// Simple bar chart of the two score histograms.
void write_histogram_svg(const ScoreHistogram& histogram, std::ostream& out);

}  // namespace lgsqe

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

#include "lgsqe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lgsqe/error.hpp"

namespace lgsqe {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(ErrorKind::kShape, "score and label lengths differ (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const Label> labels) {
  std::size_t pos = 0;
  for (Label l : labels) {
    if (l > 1) fail(ErrorKind::kArgument, "labels must be 0 or 1");
    pos += l;
  }
  return {labels.size() - pos, pos};
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const double> scores, std::span<const Label> labels,
                          double threshold) {
  check_lengths(scores.size(), labels.size());
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::kArgument, "threshold must lie in [0, 1]");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_generated = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted_generated ? ++c.tp : ++c.fn;
    } else {
      predicted_generated ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

std::optional<double> accuracy(const ConfusionCounts& c) {
  return ratio(c.tp + c.tn, c.total());
}

std::optional<double> precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }

std::optional<double> recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const Label> labels) {
  check_lengths(scores.size(), labels.size());
  const auto [negatives, positives] = class_counts(labels);
  if (positives == 0 || negatives == 0) {
    fail(ErrorKind::kArgument, "PR curve needs both classes present");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  std::vector<double> thresholds = {1.0};
  for (std::size_t i : idx) {
    if (scores[i] < thresholds.back()) thresholds.push_back(scores[i]);
  }
  if (thresholds.back() > 0.0) thresholds.push_back(0.0);

  std::vector<PrPoint> curve;
  std::size_t next = 0, tp = 0, fp = 0;
  for (double t : thresholds) {
    while (next < idx.size() && scores[idx[next]] >= t) {
      labels[idx[next]] == 1 ? ++tp : ++fp;
      ++next;
    }
    if (tp + fp == 0) continue;
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(tp + fp),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return curve;
}

double pr_auc(std::span<const double> scores, std::span<const Label> labels) {
  const auto curve = pr_curve(scores, labels);
  double area = 0.0;
  double prev_recall = 0.0;
  double prev_precision = curve.front().precision;
  for (const auto& p : curve) {
    area += (p.recall - prev_recall) * (p.precision + prev_precision) / 2.0;
    prev_recall = p.recall;
    prev_precision = p.precision;
  }
  return area;
}

double roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  check_lengths(scores.size(), labels.size());
  const auto [negatives, positives] = class_counts(labels);
  if (positives == 0 || negatives == 0) {
    fail(ErrorKind::kArgument, "ROC AUC needs both classes present");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives (Mann-Whitney U).
  double rank_sum = 0.0;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t stop = start;
    while (stop < idx.size() && scores[idx[stop]] == scores[idx[start]]) ++stop;
    const double midrank = (static_cast<double>(start + stop) + 1.0) / 2.0;
    for (std::size_t j = start; j < stop; ++j) {
      if (labels[idx[j]] == 1) rank_sum += midrank;
    }
    start = stop;
  }
  const auto p = static_cast<double>(positives);
  const auto q = static_cast<double>(negatives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::vector<double> ScoreHistogram::edges() const {
  std::vector<double> out(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    out[i] = static_cast<double>(i) / static_cast<double>(bins);
  }
  return out;
}

ScoreHistogram score_histogram(std::span<const double> scores,
                               std::span<const Label> provenance, std::size_t bins) {
  check_lengths(scores.size(), provenance.size());
  if (bins < 2) fail(ErrorKind::kArgument, "histogram needs at least 2 bins");
  ScoreHistogram h;
  h.bins = bins;
  h.real.assign(bins, 0);
  h.generated.assign(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double scaled = std::clamp(scores[i], 0.0, 1.0) * static_cast<double>(bins);
    const auto bin = std::min(static_cast<std::size_t>(scaled), bins - 1);
    (provenance[i] == 1 ? h.generated : h.real)[bin] += 1;
  }
  return h;
}

std::vector<std::uint64_t> filter_samples(std::span<const std::uint64_t> ids,
                                          std::span<const double> scores,
                                          double keep_fraction) {
  check_lengths(ids.size(), scores.size());
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    fail(ErrorKind::kArgument, "keep fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> idx(ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && ids[a] < ids[b]);
  });
  // Keep floor(f * n), tolerant of rounding in the product.
  const auto keep = static_cast<std::size_t>(
      std::floor(keep_fraction * static_cast<double>(ids.size()) + 1e-9));
  std::vector<std::uint64_t> kept;
  kept.reserve(keep);
  for (std::size_t j = 0; j < keep; ++j) kept.push_back(ids[idx[j]]);
  return kept;
}

EvaluationReport aggregate_report(std::span<const double> scores,
                                  std::span<const Label> labels, double threshold,
                                  std::size_t bins) {
  EvaluationReport r;
  r.threshold = threshold;
  r.counts = confusion(scores, labels, threshold);
  r.accuracy = accuracy(r.counts);
  r.precision = precision(r.counts);
  r.recall = recall(r.counts);
  r.pr_auc = pr_auc(scores, labels);
  r.roc_auc = roc_auc(scores, labels);
  r.histogram = score_histogram(scores, labels, bins);
  double sum[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum[labels[i]] += scores[i];
    ++n[labels[i]];
  }
  r.mean_score_real = sum[0] / static_cast<double>(n[0]);
  r.mean_score_generated = sum[1] / static_cast<double>(n[1]);
  return r;
}

void write_histogram_svg(const ScoreHistogram& histogram, std::ostream& out) {
  constexpr double kWidth = 640, kHeight = 320, kMargin = 30;
  std::uint64_t peak = 1;
  for (std::size_t b = 0; b < histogram.bins; ++b) {
    peak = std::max({peak, histogram.real[b], histogram.generated[b]});
  }
  const double bar = (kWidth - 2 * kMargin) / static_cast<double>(histogram.bins);
  const double scale = (kHeight - 2 * kMargin) / static_cast<double>(peak);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  auto bars = [&](const std::vector<std::uint64_t>& counts, const char* color, double offset) {
    for (std::size_t b = 0; b < histogram.bins; ++b) {
      const double h = static_cast<double>(counts[b]) * scale;
      out << "<rect x=\"" << kMargin + bar * static_cast<double>(b) + offset << "\" y=\""
          << kHeight - kMargin - h << "\" width=\"" << bar / 2 << "\" height=\"" << h
          << "\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
    }
  };
  bars(histogram.real, "steelblue", 0.0);
  bars(histogram.generated, "darkorange", bar / 2);
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - 8 << "\" font-size=\"12\">0</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - 8
      << "\" font-size=\"12\">1</text>\n";
  out << "<text x=\"" << kMargin << "\" y=\"18\" font-size=\"12\">real (blue) vs generated "
         "(orange) soft scores</text>\n";
  out << "</svg>\n";
}

}  // namespace lgsqe

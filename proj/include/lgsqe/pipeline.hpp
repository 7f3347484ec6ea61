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

// End-to-end quality evaluator: Saab representation -> DFT feature
// selection -> boosted real-vs-generated classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lgsqe/dft.hpp"
#include "lgsqe/eval.hpp"
#include "lgsqe/gbdt.hpp"
#include "lgsqe/image_set.hpp"
#include "lgsqe/saab.hpp"

namespace lgsqe {

inline constexpr std::string_view kFormatVersion = "1.0.0";

enum class Preset { kAuto, kMnist, kCifar };

/// Every knob of a run. Unset geometry and top-k values come from the
/// preset: mnist is F=5, S=2, k=400; cifar is F=3, S=1, k=800; auto picks
/// mnist for single-channel images and cifar otherwise.
struct RunConfig {
  Preset preset = Preset::kAuto;
  std::optional<std::size_t> patch_size;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> top_k;
  SelectionMode selection = SelectionMode::kTopK;
  ChannelRule spatial_rule = ChannelRule::energy(0.99);
  ChannelRule channelwise_rule = ChannelRule::energy(0.99);
  std::size_t num_bins = 32;
  BoostParams boost;
  double threshold = 0.5;
  std::size_t histogram_bins = 50;
  std::uint64_t seed = 0;
  double real_fraction = 1.0;
  double test_fraction = 0.2;

  /// Copy with preset-dependent fields filled for the given channel count.
  RunConfig resolved(std::size_t channels) const;
  /// Throws an argument error for out-of-range values.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Applies one `key=value` setting. Unknown keys and unparsable values are
/// argument errors.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
/// Flat key=value text; '#' starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});
/// Canonical key=value form, one setting per line in a fixed order.
std::string format_config(const RunConfig& config);
/// Keys accepted by apply_setting.
const std::vector<std::string>& config_keys();

struct PipelineModel {
  std::string format_version{kFormatVersion};
  RunConfig config;
  SaabModel saab;
  DftRanking ranking;
  FeatureSelection selection;
  BoostedEnsemble ensemble;

  /// Throws when the components disagree with each other.
  void check_consistency() const;
};

struct StageTimings {
  double saab_ms = 0.0;
  double representation_ms = 0.0;
  double dft_ms = 0.0;
  double boosting_ms = 0.0;
};

struct FitSummary {
  std::size_t representation_width = 0;
  std::size_t spatial_width = 0;
  std::size_t spectral_width = 0;
  std::size_t selected = 0;
  std::size_t train_real = 0;
  std::size_t train_generated = 0;
  double train_accuracy = 0.0;
  StageTimings timings;
};

struct FitResult {
  PipelineModel model;
  FitSummary summary;
};

/// Trains on the given sets; `config.real_fraction` and `test_fraction` are
/// recorded but not applied here.
FitResult fit_pipeline(const ImageSet& real_train, const ImageSet& generated_train,
                       const RunConfig& config);

/// Soft scores d in (0, 1); larger means more detectably generated.
std::vector<double> score_images(const PipelineModel& model, const ImageSet& images);

/// Selected columns of a representation, in selection order.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& features,
                               const std::vector<std::size_t>& columns);

struct HoldoutRun {
  LabeledSplit split;
  FitResult fit;
  std::vector<double> test_scores;
  EvaluationReport report;
};

/// Splits with the config's seed and fractions, fits on the training part and
/// evaluates on the held-out part.
HoldoutRun fit_and_evaluate(const ImageSet& real, const ImageSet& generated,
                            const RunConfig& config);

struct SweepPoint {
  double real_fraction;
  std::size_t train_real;
  std::size_t train_generated;
  double test_accuracy;
};

/// One refit per real-sample fraction; test sets are shared by all points.
std::vector<SweepPoint> sweep_real_fraction(const ImageSet& real, const ImageSet& generated,
                                            const RunConfig& config,
                                            const std::vector<double>& fractions);

}  // namespace lgsqe

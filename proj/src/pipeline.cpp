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

#include "lgsqe/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

#include "lgsqe/error.hpp"
#include "lgsqe/rng.hpp"

namespace lgsqe {

RunConfig RunConfig::resolved(std::size_t channels) const {
  RunConfig out = *this;
  Preset preset = out.preset;
  if (preset == Preset::kAuto) preset = channels == 1 ? Preset::kMnist : Preset::kCifar;
  const bool mnist = preset == Preset::kMnist;
  if (!out.patch_size) out.patch_size = mnist ? 5 : 3;
  if (!out.stride) out.stride = mnist ? 2 : 1;
  if (!out.top_k) out.top_k = mnist ? 400 : 800;
  return out;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::kArgument, what);
  };
  require(!patch_size || *patch_size >= 1, "patch_size must be positive");
  require(!stride || *stride >= 1, "stride must be positive");
  require(!top_k || *top_k >= 1, "top_k must be positive");
  require(num_bins >= 2, "num_bins must be at least 2");
  require(spatial_rule.is_explicit ? spatial_rule.count >= 1
                                   : spatial_rule.energy_fraction > 0.0 &&
                                         spatial_rule.energy_fraction <= 1.0,
          "spatial channel rule out of range");
  require(channelwise_rule.is_explicit ? channelwise_rule.count >= 1
                                       : channelwise_rule.energy_fraction > 0.0 &&
                                             channelwise_rule.energy_fraction <= 1.0,
          "channel-wise rule out of range");
  require(boost.learning_rate > 0.0, "learning_rate must be positive");
  require(boost.lambda >= 0.0, "lambda must be nonnegative");
  require(boost.min_samples_leaf >= 1, "min_samples_leaf must be positive");
  require(boost.subsample > 0.0 && boost.subsample <= 1.0, "subsample must lie in (0, 1]");
  require(boost.validation_fraction > 0.0 && boost.validation_fraction < 1.0,
          "validation_fraction must lie in (0, 1)");
  require(threshold >= 0.0 && threshold <= 1.0, "threshold must lie in [0, 1]");
  require(histogram_bins >= 2, "histogram_bins must be at least 2");
  require(real_fraction > 0.0 && real_fraction <= 1.0, "real_fraction must lie in (0, 1]");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorKind::kArgument,
         "invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::kMnist:
      return "mnist";
    case Preset::kCifar:
      return "cifar";
    case Preset::kAuto:
      break;
  }
  return "auto";
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "preset",        "patch_size",          "stride",
      "selection",     "top_k",               "energy_fraction",
      "spatial_channels", "cw_energy_fraction", "cw_channels",
      "num_bins",      "trees",               "max_depth",
      "learning_rate", "lambda",              "min_samples_leaf",
      "subsample",     "early_stopping_rounds", "validation_fraction",
      "threshold",     "histogram_bins",      "seed",
      "real_fraction", "test_fraction"};
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };
  auto optional_size = [&]() -> std::optional<std::size_t> {
    if (value == "auto") return std::nullopt;
    return size();
  };
  // An explicit count of 0 (or "auto") falls back to the energy rule.
  auto channel_count = [&](ChannelRule& rule, double fraction) {
    const std::size_t k = value == "auto" ? 0 : size();
    rule = k == 0 ? ChannelRule::energy(fraction) : ChannelRule::fixed(k);
  };
  if (key == "preset") {
    if (value == "auto") c.preset = Preset::kAuto;
    else if (value == "mnist") c.preset = Preset::kMnist;
    else if (value == "cifar") c.preset = Preset::kCifar;
    else fail(ErrorKind::kArgument, "preset must be auto, mnist or cifar");
  } else if (key == "patch_size") {
    c.patch_size = optional_size();
  } else if (key == "stride") {
    c.stride = optional_size();
  } else if (key == "selection") {
    if (value == "topk") c.selection = SelectionMode::kTopK;
    else if (value == "elbow") c.selection = SelectionMode::kElbow;
    else fail(ErrorKind::kArgument, "selection must be topk or elbow");
  } else if (key == "top_k") {
    c.top_k = optional_size();
  } else if (key == "energy_fraction") {
    c.spatial_rule = ChannelRule::energy(real());
  } else if (key == "spatial_channels") {
    channel_count(c.spatial_rule, c.spatial_rule.is_explicit ? 0.99 : c.spatial_rule.energy_fraction);
  } else if (key == "cw_energy_fraction") {
    c.channelwise_rule = ChannelRule::energy(real());
  } else if (key == "cw_channels") {
    channel_count(c.channelwise_rule,
                  c.channelwise_rule.is_explicit ? 0.99 : c.channelwise_rule.energy_fraction);
  } else if (key == "num_bins") {
    c.num_bins = size();
  } else if (key == "trees") {
    c.boost.num_trees = size();
  } else if (key == "max_depth") {
    c.boost.max_depth = size();
  } else if (key == "learning_rate") {
    c.boost.learning_rate = real();
  } else if (key == "lambda") {
    c.boost.lambda = real();
  } else if (key == "min_samples_leaf") {
    c.boost.min_samples_leaf = size();
  } else if (key == "subsample") {
    c.boost.subsample = real();
  } else if (key == "early_stopping_rounds") {
    c.boost.early_stopping_rounds = size();
  } else if (key == "validation_fraction") {
    c.boost.validation_fraction = real();
  } else if (key == "threshold") {
    c.threshold = real();
  } else if (key == "histogram_bins") {
    c.histogram_bins = size();
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "real_fraction") {
    c.real_fraction = real();
  } else if (key == "test_fraction") {
    c.test_fraction = real();
  } else {
    fail(ErrorKind::kArgument, "unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::kArgument, "config line " + std::to_string(line_no) + " lacks '='");
    }
    apply_setting(base, trim(std::string_view(trimmed).substr(0, eq)),
                  std::string_view(trimmed).substr(eq + 1));
  }
  return base;
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  auto opt = [](const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string("auto");
  };
  auto count = [](const ChannelRule& r) {
    return r.is_explicit ? std::to_string(r.count) : std::string("auto");
  };
  os << "preset=" << preset_name(c.preset) << "\n"
     << "patch_size=" << opt(c.patch_size) << "\n"
     << "stride=" << opt(c.stride) << "\n"
     << "selection=" << (c.selection == SelectionMode::kTopK ? "topk" : "elbow") << "\n"
     << "top_k=" << opt(c.top_k) << "\n";
  if (!c.spatial_rule.is_explicit) {
    os << "energy_fraction=" << format_double(c.spatial_rule.energy_fraction) << "\n";
  }
  os << "spatial_channels=" << count(c.spatial_rule) << "\n";
  if (!c.channelwise_rule.is_explicit) {
    os << "cw_energy_fraction=" << format_double(c.channelwise_rule.energy_fraction) << "\n";
  }
  os << "cw_channels=" << count(c.channelwise_rule) << "\n"
     << "num_bins=" << c.num_bins << "\n"
     << "trees=" << c.boost.num_trees << "\n"
     << "max_depth=" << c.boost.max_depth << "\n"
     << "learning_rate=" << format_double(c.boost.learning_rate) << "\n"
     << "lambda=" << format_double(c.boost.lambda) << "\n"
     << "min_samples_leaf=" << c.boost.min_samples_leaf << "\n"
     << "subsample=" << format_double(c.boost.subsample) << "\n"
     << "early_stopping_rounds=" << c.boost.early_stopping_rounds << "\n"
     << "validation_fraction=" << format_double(c.boost.validation_fraction) << "\n"
     << "threshold=" << format_double(c.threshold) << "\n"
     << "histogram_bins=" << c.histogram_bins << "\n"
     << "seed=" << c.seed << "\n"
     << "real_fraction=" << format_double(c.real_fraction) << "\n"
     << "test_fraction=" << format_double(c.test_fraction) << "\n";
  return os.str();
}

void PipelineModel::check_consistency() const {
  const std::size_t width = saab.width();
  if (ranking.columns.size() != width) {
    fail(ErrorKind::kFormat, "DFT ranking covers " + std::to_string(ranking.columns.size()) +
                                 " columns but the representation has " +
                                 std::to_string(width));
  }
  for (std::size_t c : selection.columns) {
    if (c >= width) fail(ErrorKind::kFormat, "selected column outside the representation");
  }
  if (ensemble.num_features != selection.columns.size()) {
    fail(ErrorKind::kFormat, "ensemble width does not match the feature selection");
  }
  for (const auto& tree : ensemble.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= ensemble.num_features ||
          node.left < 0 || node.right < 0 ||
          static_cast<std::size_t>(node.left) >= tree.nodes.size() ||
          static_cast<std::size_t>(node.right) >= tree.nodes.size()) {
        fail(ErrorKind::kFormat, "malformed tree node");
      }
    }
  }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& features,
                               const std::vector<std::size_t>& columns) {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= static_cast<std::size_t>(features.cols())) {
      fail(ErrorKind::kShape, "selected column outside the feature matrix");
    }
    out.col(static_cast<Eigen::Index>(j)) = features.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

FitResult fit_pipeline(const ImageSet& real_train, const ImageSet& generated_train,
                       const RunConfig& config) {
  if (real_train.empty() || generated_train.empty()) {
    fail(ErrorKind::kArgument, "training needs real and generated images");
  }
  if (real_train.size() != generated_train.size() ||
      real_train.channels() != generated_train.channels()) {
    fail(ErrorKind::kShape, "real and generated images differ in geometry");
  }
  FitResult result;
  PipelineModel& model = result.model;
  model.config = config.resolved(real_train.channels());
  model.config.validate();
  const RunConfig& cfg = model.config;

  auto start = Clock::now();
  SaabConfig saab_config;
  saab_config.patch_size = *cfg.patch_size;
  saab_config.stride = *cfg.stride;
  saab_config.spatial_rule = cfg.spatial_rule;
  saab_config.channelwise_rule = cfg.channelwise_rule;
  const ImageSet* sets[] = {&real_train, &generated_train};
  model.saab = fit_representation(sets, saab_config);
  result.summary.timings.saab_ms = elapsed_ms(start);

  start = Clock::now();
  const FeatureMatrix real_features = build_representation(model.saab, real_train);
  const FeatureMatrix gen_features = build_representation(model.saab, generated_train);
  Eigen::MatrixXd features(real_features.values.rows() + gen_features.values.rows(),
                           real_features.values.cols());
  features << real_features.values, gen_features.values;
  std::vector<Label> labels(real_train.count(), 0);
  labels.resize(real_train.count() + generated_train.count(), 1);
  result.summary.timings.representation_ms = elapsed_ms(start);

  start = Clock::now();
  model.ranking = rank_features(features, labels, cfg.num_bins);
  const SelectionSpec spec = cfg.selection == SelectionMode::kTopK
                                 ? SelectionSpec::top_k(*cfg.top_k)
                                 : SelectionSpec::elbow();
  model.selection = select_features(model.ranking, spec);
  result.summary.timings.dft_ms = elapsed_ms(start);

  start = Clock::now();
  BoostParams params = cfg.boost;
  params.seed = derive_seed(cfg.seed, "gbdt");
  const Eigen::MatrixXd selected = gather_columns(features, model.selection.columns);
  model.ensemble = fit_ensemble(selected, labels, params);
  result.summary.timings.boosting_ms = elapsed_ms(start);

  const auto scores = predict_score(model.ensemble, selected);
  result.summary.train_accuracy = accuracy(confusion(scores, labels, cfg.threshold)).value_or(0.0);
  result.summary.representation_width = model.saab.width();
  result.summary.spatial_width = model.saab.spatial_width();
  result.summary.spectral_width = model.saab.spectral_width();
  result.summary.selected = model.selection.columns.size();
  result.summary.train_real = real_train.count();
  result.summary.train_generated = generated_train.count();
  return result;
}

std::vector<double> score_images(const PipelineModel& model, const ImageSet& images) {
  const PatchGeometry& g = model.saab.geometry;
  if (!images.empty() && (images.size() != g.image_size || images.channels() != g.channels)) {
    fail(ErrorKind::kGeometry, "images are " + std::to_string(images.size()) + "x" +
                                   std::to_string(images.size()) + "x" +
                                   std::to_string(images.channels()) + " but the model expects " +
                                   std::to_string(g.image_size) + "x" +
                                   std::to_string(g.image_size) + "x" +
                                   std::to_string(g.channels));
  }
  if (images.empty()) return {};
  const FeatureMatrix features = build_representation(model.saab, images);
  return predict_score(model.ensemble, gather_columns(features.values, model.selection.columns));
}

HoldoutRun fit_and_evaluate(const ImageSet& real, const ImageSet& generated,
                            const RunConfig& config) {
  config.validate();
  HoldoutRun run;
  run.split = make_labeled_split(real, generated, config.test_fraction, config.real_fraction,
                                 derive_seed(config.seed, "split"));
  run.fit = fit_pipeline(run.split.real_train, run.split.generated_train, config);
  const auto real_scores = score_images(run.fit.model, run.split.real_test);
  const auto gen_scores = score_images(run.fit.model, run.split.generated_test);
  run.test_scores = real_scores;
  run.test_scores.insert(run.test_scores.end(), gen_scores.begin(), gen_scores.end());
  run.report = aggregate_report(run.test_scores, run.split.test_labels(),
                                run.fit.model.config.threshold,
                                run.fit.model.config.histogram_bins);
  return run;
}

std::vector<SweepPoint> sweep_real_fraction(const ImageSet& real, const ImageSet& generated,
                                            const RunConfig& config,
                                            const std::vector<double>& fractions) {
  if (fractions.empty()) fail(ErrorKind::kArgument, "sweep needs at least one fraction");
  std::vector<SweepPoint> points;
  for (double f : fractions) {
    RunConfig c = config;
    c.real_fraction = f;
    const HoldoutRun run = fit_and_evaluate(real, generated, c);
    points.push_back({f, run.split.real_train.count(), run.split.generated_train.count(),
                      run.report.accuracy.value_or(0.0)});
  }
  return points;
}

}  // namespace lgsqe

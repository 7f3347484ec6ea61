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

#include "lgsqe/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lgsqe/error.hpp"

namespace lgsqe {

using nlohmann::json;

namespace {

json optional_size(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json("auto");
}

json optional_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    fail(ErrorKind::kFormat, "matrix payload does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json kernels_to_json(const SaabKernels& k) {
  return {{"mean", vector_to_json(k.mean)},
          {"kernels", matrix_to_json(k.kernels)},
          {"ac_eigenvalues", vector_to_json(k.ac_eigenvalues)}};
}

SaabKernels kernels_from_json(const json& j) {
  SaabKernels k;
  k.mean = vector_from_json(j.at("mean"));
  k.kernels = matrix_from_json(j.at("kernels"));
  k.ac_eigenvalues = vector_from_json(j.at("ac_eigenvalues"));
  if (k.kernels.rows() < 1 || k.mean.size() != k.kernels.cols() ||
      k.ac_eigenvalues.size() + 1 != k.kernels.cols()) {
    fail(ErrorKind::kFormat, "inconsistent Saab kernel shapes");
  }
  return k;
}

json tree_to_json(const RegressionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), weight = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    weight.push_back(n.weight);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"weight", weight}};
}

RegressionTree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto weight = j.at("weight").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      weight.size() != n) {
    fail(ErrorKind::kFormat, "tree arrays differ in length");
  }
  RegressionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tree.nodes[i] = {feature[i], threshold[i], left[i], right[i], weight[i]};
  }
  return tree;
}

void check_version(const json& j, const char* what) {
  if (!j.contains("format_version") || !j.at("format_version").is_string()) {
    fail(ErrorKind::kFormat, std::string(what) + " lacks a format_version");
  }
  const auto version = j.at("format_version").get<std::string>();
  if (version != kFormatVersion) {
    fail(ErrorKind::kVersion, std::string(what) + " format version " + version +
                                  " is not supported (expected " +
                                  std::string(kFormatVersion) + ")");
  }
}

}  // namespace

json config_to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset == Preset::kMnist   ? "mnist"
                : c.preset == Preset::kCifar ? "cifar"
                                             : "auto";
  j["patch_size"] = optional_size(c.patch_size);
  j["stride"] = optional_size(c.stride);
  j["selection"] = c.selection == SelectionMode::kTopK ? "topk" : "elbow";
  j["top_k"] = optional_size(c.top_k);
  if (!c.spatial_rule.is_explicit) j["energy_fraction"] = c.spatial_rule.energy_fraction;
  j["spatial_channels"] = c.spatial_rule.is_explicit ? json(c.spatial_rule.count) : json("auto");
  if (!c.channelwise_rule.is_explicit) {
    j["cw_energy_fraction"] = c.channelwise_rule.energy_fraction;
  }
  j["cw_channels"] =
      c.channelwise_rule.is_explicit ? json(c.channelwise_rule.count) : json("auto");
  j["num_bins"] = c.num_bins;
  j["trees"] = c.boost.num_trees;
  j["max_depth"] = c.boost.max_depth;
  j["learning_rate"] = c.boost.learning_rate;
  j["lambda"] = c.boost.lambda;
  j["min_samples_leaf"] = c.boost.min_samples_leaf;
  j["subsample"] = c.boost.subsample;
  j["early_stopping_rounds"] = c.boost.early_stopping_rounds;
  j["validation_fraction"] = c.boost.validation_fraction;
  j["threshold"] = c.threshold;
  j["histogram_bins"] = c.histogram_bins;
  j["seed"] = c.seed;
  j["real_fraction"] = c.real_fraction;
  j["test_fraction"] = c.test_fraction;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  // Energy fractions first, then the channel counts.
  for (const char* first : {"energy_fraction", "cw_energy_fraction"}) {
    if (j.contains(first)) apply_setting(c, first, j.at(first).dump());
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "energy_fraction" || key == "cw_energy_fraction") continue;
    apply_setting(c, key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return c;
}

json model_to_json(const PipelineModel& m) {
  json channelwise = json::array();
  for (const auto& k : m.saab.channelwise) channelwise.push_back(kernels_to_json(k));

  std::vector<double> loss, threshold, lo, hi;
  for (const auto& r : m.ranking.columns) {
    loss.push_back(r.loss);
    threshold.push_back(r.threshold);
    lo.push_back(r.min);
    hi.push_back(r.max);
  }
  json trees = json::array();
  for (const auto& t : m.ensemble.trees) trees.push_back(tree_to_json(t));

  json j;
  j["format_version"] = m.format_version;
  j["config"] = config_to_json(m.config);
  j["saab"] = {{"geometry",
                {{"image_size", m.saab.geometry.image_size},
                 {"channels", m.saab.geometry.channels},
                 {"patch_size", m.saab.geometry.patch_size},
                 {"stride", m.saab.geometry.stride}}},
               {"spatial", kernels_to_json(m.saab.spatial)},
               {"channelwise", channelwise}};
  j["dft"] = {{"num_bins", m.ranking.num_bins},
              {"entropy_base", "nats"},
              {"loss", loss},
              {"threshold", threshold},
              {"min", lo},
              {"max", hi}};
  j["selection"] = {{"mode", m.selection.mode == SelectionMode::kTopK ? "topk" : "elbow"},
                    {"parameter", m.selection.parameter},
                    {"columns", m.selection.columns}};
  j["ensemble"] = {{"base_score", m.ensemble.base_score},
                   {"learning_rate", m.ensemble.learning_rate},
                   {"num_features", m.ensemble.num_features},
                   {"seed", m.ensemble.params.seed},
                   {"trees", trees}};
  return j;
}

PipelineModel model_from_json(const json& j) {
  check_version(j, "model");
  PipelineModel m;
  try {
    m.format_version = j.at("format_version").get<std::string>();
    m.config = config_from_json(j.at("config"));

    const json& saab = j.at("saab");
    const json& g = saab.at("geometry");
    m.saab.geometry = make_patch_geometry(
        g.at("image_size").get<std::size_t>(), g.at("channels").get<std::size_t>(),
        g.at("patch_size").get<std::size_t>(), g.at("stride").get<std::size_t>());
    m.saab.spatial_rule = m.config.spatial_rule;
    m.saab.channelwise_rule = m.config.channelwise_rule;
    m.saab.spatial = kernels_from_json(saab.at("spatial"));
    for (const auto& k : saab.at("channelwise")) m.saab.channelwise.push_back(kernels_from_json(k));
    if (m.saab.spatial.dim() != m.saab.geometry.dim() ||
        m.saab.channelwise.size() != m.saab.kept_channels()) {
      fail(ErrorKind::kFormat, "Saab kernels do not match the patch geometry");
    }
    for (const auto& k : m.saab.channelwise) {
      if (k.dim() != m.saab.pooled_grid() * m.saab.pooled_grid()) {
        fail(ErrorKind::kFormat, "channel-wise kernels do not match the pooled grid");
      }
    }

    const json& dft = j.at("dft");
    m.ranking.num_bins = dft.at("num_bins").get<std::size_t>();
    const auto loss = dft.at("loss").get<std::vector<double>>();
    const auto threshold = dft.at("threshold").get<std::vector<double>>();
    const auto lo = dft.at("min").get<std::vector<double>>();
    const auto hi = dft.at("max").get<std::vector<double>>();
    if (threshold.size() != loss.size() || lo.size() != loss.size() || hi.size() != loss.size()) {
      fail(ErrorKind::kFormat, "DFT arrays differ in length");
    }
    for (std::size_t i = 0; i < loss.size(); ++i) {
      m.ranking.columns.push_back({loss[i], threshold[i], lo[i], hi[i]});
    }
    m.ranking.order.resize(loss.size());
    std::iota(m.ranking.order.begin(), m.ranking.order.end(), std::size_t{0});
    std::stable_sort(m.ranking.order.begin(), m.ranking.order.end(),
                     [&](std::size_t a, std::size_t b) { return loss[a] < loss[b]; });

    const json& sel = j.at("selection");
    const auto mode = sel.at("mode").get<std::string>();
    if (mode != "topk" && mode != "elbow") fail(ErrorKind::kFormat, "unknown selection mode");
    m.selection.mode = mode == "topk" ? SelectionMode::kTopK : SelectionMode::kElbow;
    m.selection.parameter = sel.at("parameter").get<std::size_t>();
    m.selection.columns = sel.at("columns").get<std::vector<std::size_t>>();

    const json& ens = j.at("ensemble");
    m.ensemble.base_score = ens.at("base_score").get<double>();
    m.ensemble.learning_rate = ens.at("learning_rate").get<double>();
    m.ensemble.num_features = ens.at("num_features").get<std::size_t>();
    m.ensemble.params = m.config.boost;
    m.ensemble.params.seed = ens.at("seed").get<std::uint64_t>();
    for (const auto& t : ens.at("trees")) m.ensemble.trees.push_back(tree_from_json(t));
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed model document: ") + e.what());
  }
  m.check_consistency();
  return m;
}

std::string dump_model(const PipelineModel& model) { return model_to_json(model).dump() + "\n"; }

void save_model(const PipelineModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << dump_model(model);
  if (!out) fail(ErrorKind::kIo, "short write to " + path.string());
}

PipelineModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

json report_to_json(const EvaluationReport& r, const ReportMetadata& meta) {
  json j;
  j["format_version"] = std::string(kFormatVersion);
  j["threshold"] = r.threshold;
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
  j["metrics"] = {{"accuracy", optional_double(r.accuracy)},
                  {"precision", optional_double(r.precision)},
                  {"recall", optional_double(r.recall)},
                  {"pr_auc", r.pr_auc},
                  {"roc_auc", r.roc_auc}};
  j["mean_score"] = {{"real", r.mean_score_real}, {"generated", r.mean_score_generated}};
  j["histogram"] = {{"bins", r.histogram.bins},
                    {"edges", r.histogram.edges()},
                    {"real", r.histogram.real},
                    {"generated", r.histogram.generated}};
  j["metadata"] = {{"config", config_to_json(meta.config)},
                   {"model_fingerprint", meta.model_fingerprint},
                   {"real_fingerprint", meta.real_fingerprint},
                   {"generated_fingerprint", meta.generated_fingerprint},
                   {"positive_class", "generated"},
                   {"quality_index", "soft score d, lower is more realistic"}};
  return j;
}

EvaluationReport report_from_json(const json& j) {
  check_version(j, "report");
  EvaluationReport r;
  try {
    r.threshold = j.at("threshold").get<double>();
    const json& c = j.at("counts");
    r.counts = {c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                c.at("tn").get<std::uint64_t>(), c.at("fn").get<std::uint64_t>()};
    const json& m = j.at("metrics");
    r.accuracy = read_optional_double(m.at("accuracy"));
    r.precision = read_optional_double(m.at("precision"));
    r.recall = read_optional_double(m.at("recall"));
    r.pr_auc = m.at("pr_auc").get<double>();
    r.roc_auc = m.at("roc_auc").get<double>();
    r.mean_score_real = j.at("mean_score").at("real").get<double>();
    r.mean_score_generated = j.at("mean_score").at("generated").get<double>();
    const json& h = j.at("histogram");
    r.histogram.bins = h.at("bins").get<std::size_t>();
    r.histogram.real = h.at("real").get<std::vector<std::uint64_t>>();
    r.histogram.generated = h.at("generated").get<std::vector<std::uint64_t>>();
    if (r.histogram.real.size() != r.histogram.bins ||
        r.histogram.generated.size() != r.histogram.bins) {
      fail(ErrorKind::kFormat, "histogram arrays do not match the bin count");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed report document: ") + e.what());
  }
  return r;
}

void write_scores_csv(std::span<const double> scores, std::span<const Label> provenance,
                      std::ostream& out) {
  if (scores.size() != provenance.size()) {
    fail(ErrorKind::kShape, "score and provenance lengths differ");
  }
  out << "sample_id,provenance,score\n";
  char buf[64];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f\n", i,
                  provenance[i] == 1 ? "generated" : "real", scores[i]);
    out << buf;
  }
}

}  // namespace lgsqe

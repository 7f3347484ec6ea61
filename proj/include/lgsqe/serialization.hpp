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

// JSON model and report documents. Both carry a "format_version" field;
// documents with an unknown version are rejected.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "lgsqe/eval.hpp"
#include "lgsqe/pipeline.hpp"

namespace lgsqe {

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const PipelineModel& model);
PipelineModel model_from_json(const nlohmann::json& j);

/// Canonical text: save -> load -> save is byte-identical.
std::string dump_model(const PipelineModel& model);
void save_model(const PipelineModel& model, const std::filesystem::path& path);
PipelineModel load_model(const std::filesystem::path& path);

/// Provenance of an evaluation, echoed into the report.
struct ReportMetadata {
  RunConfig config;
  std::string model_fingerprint;
  std::string real_fingerprint;
  std::string generated_fingerprint;
};

nlohmann::json report_to_json(const EvaluationReport& report, const ReportMetadata& meta);
EvaluationReport report_from_json(const nlohmann::json& j);

/// sample_id,provenance,score with six decimals. Ids count from 0 in
/// input order.
void write_scores_csv(std::span<const double> scores, std::span<const Label> provenance,
                      std::ostream& out);

}  // namespace lgsqe

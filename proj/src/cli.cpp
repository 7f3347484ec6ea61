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


#include "lgsqe/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "lgsqe/error.hpp"
#include "lgsqe/parallel.hpp"
#include "lgsqe/pipeline.hpp"
#include "lgsqe/rng.hpp"
#include "lgsqe/serialization.hpp"

namespace lgsqe {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  return out;
}

std::string flag_name(const std::string& key) {
  std::string name = key;
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

/// Config file plus per-key flag overrides.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", file, "key=value config file");
    for (const auto& key : config_keys()) {
      cmd.add_option(flag_name(key), overrides[key], "config override: " + key);
    }
  }

  RunConfig build(const CLI::App& cmd) const {
    RunConfig config;
    if (!file.empty()) config = parse_config(read_text(file), config);
    for (const auto& key : config_keys()) {
      if (cmd.count(flag_name(key)) > 0) apply_setting(config, key, overrides.at(key));
    }
    return config;
  }
};

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    RunConfig probe;
    apply_setting(probe, "real_fraction", item);
    out.push_back(probe.real_fraction);
  }
  return out;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); }

std::vector<Label> provenance_labels(const ImageSet& images) {
  return std::vector<Label>(images.count(), to_label(images.provenance()));
}

void print_summary(const FitSummary& s, std::ostream& out) {
  out << "representation width: " << s.representation_width << " (spatial "
      << s.spatial_width << ", spectral " << s.spectral_width << ")\n"
      << "selected features: " << s.selected << "\n"
      << "training samples: " << s.train_real << " real, " << s.train_generated
      << " generated\n"
      << "train accuracy: " << fmt(s.train_accuracy) << "\n"
      << "timings ms: saab " << fmt(s.timings.saab_ms, 1) << ", representation "
      << fmt(s.timings.representation_ms, 1) << ", dft " << fmt(s.timings.dft_ms, 1)
      << ", boosting " << fmt(s.timings.boosting_ms, 1) << "\n";
}

void print_report(const EvaluationReport& r, std::ostream& out) {
  out << "accuracy: " << fmt(r.accuracy) << "\n"
      << "precision: " << fmt(r.precision) << "\n"
      << "recall: " << fmt(r.recall) << "\n"
      << "pr_auc: " << fmt(r.pr_auc) << "\n"
      << "roc_auc: " << fmt(r.roc_auc) << "\n"
      << "mean score: real " << fmt(r.mean_score_real) << ", generated "
      << fmt(r.mean_score_generated) << "\n";
}

void write_json(const nlohmann::json& j, const std::string& path) {
  auto out = open_output(path);
  out << j.dump(2) << "\n";
}

std::string model_fingerprint(const PipelineModel& model) {
  const std::string text = dump_model(model);
  const std::uint64_t h = fnv1a64(std::as_bytes(std::span(text.data(), text.size())));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-based generated-image quality evaluator"};
  app.name("lgsqe");
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  // fit
  auto* fit = app.add_subcommand("fit", "train a real-vs-generated model");
  std::string fit_real, fit_gen, fit_out, holdout_dir, ranking_csv, report_path;
  ConfigOptions fit_cfg;
  fit->add_option("--real", fit_real, "real images (IDX, CIFAR or LGT)")->required();
  fit->add_option("--generated", fit_gen, "generated images")->required();
  fit->add_option("--out", fit_out, "model JSON")->required();
  fit->add_option("--holdout-dir", holdout_dir,
                  "split off test_fraction, apply real_fraction and write the test sets here");
  fit->add_option("--ranking-csv", ranking_csv, "per-column DFT losses");
  fit->add_option("--report", report_path, "held-out report JSON (needs --holdout-dir)");
  fit_cfg.attach(*fit);

  // score
  auto* score = app.add_subcommand("score", "soft scores for a sample set");
  std::string score_model, score_samples, score_out;
  score->add_option("--model", score_model)->required();
  score->add_option("--samples", score_samples)->required();
  score->add_option("--out", score_out, "scores CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate on labelled real and generated sets");
  std::string eval_model, eval_real, eval_gen, eval_out, eval_svg, eval_scores;
  std::optional<double> eval_threshold;
  std::optional<std::size_t> eval_bins;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--real", eval_real)->required();
  eval->add_option("--generated", eval_gen)->required();
  eval->add_option("--out", eval_out, "report JSON")->required();
  eval->add_option("--threshold", eval_threshold, "decision threshold t");
  eval->add_option("--bins", eval_bins, "histogram bins");
  eval->add_option("--svg", eval_svg, "score histogram SVG");
  eval->add_option("--scores", eval_scores, "per-sample scores CSV");

  // filter
  auto* filter = app.add_subcommand("filter", "keep the best-scoring generated samples");
  std::string filter_model, filter_samples, filter_out, filter_ids;
  double keep = 1.0;
  filter->add_option("--model", filter_model)->required();
  filter->add_option("--samples", filter_samples)->required();
  filter->add_option("--keep", keep, "fraction kept, in (0, 1]")->required();
  filter->add_option("--out", filter_out, "filtered LGT file")->required();
  filter->add_option("--ids", filter_ids, "kept ids CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "test accuracy against real-sample fraction");
  std::string sweep_real, sweep_gen, sweep_out, sweep_fractions = "0.05,0.1,0.2,0.5,1.0";
  ConfigOptions sweep_cfg;
  sweep->add_option("--real", sweep_real)->required();
  sweep->add_option("--generated", sweep_gen)->required();
  sweep->add_option("--fractions", sweep_fractions, "comma-separated real fractions");
  sweep->add_option("--out", sweep_out, "CSV")->required();
  sweep_cfg.attach(*sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    set_num_threads(threads);
    if (*fit) {
      const RunConfig config = fit_cfg.build(*fit);
      const ImageSet real = load_image_set(fit_real, Provenance::kReal);
      const ImageSet gen = load_image_set(fit_gen, Provenance::kGenerated);
      if (!report_path.empty() && holdout_dir.empty()) {
        fail(ErrorKind::kArgument, "--report needs --holdout-dir");
      }
      FitResult result;
      if (!holdout_dir.empty()) {
        HoldoutRun run = fit_and_evaluate(real, gen, config);
        std::filesystem::create_directories(holdout_dir);
        const std::filesystem::path dir(holdout_dir);
        save_raw_tensor(run.split.real_test, dir / "real_test.lgt");
        save_raw_tensor(run.split.generated_test, dir / "generated_test.lgt");
        print_summary(run.fit.summary, out);
        out << "held-out samples: " << run.split.real_test.count() << " real, "
            << run.split.generated_test.count() << " generated\n";
        print_report(run.report, out);
        if (!report_path.empty()) {
          ReportMetadata meta{run.fit.model.config, model_fingerprint(run.fit.model),
                              run.split.real_test.fingerprint(),
                              run.split.generated_test.fingerprint()};
          write_json(report_to_json(run.report, meta), report_path);
        }
        result = std::move(run.fit);
      } else {
        result = fit_pipeline(real, gen, config);
        print_summary(result.summary, out);
      }
      save_model(result.model, fit_out);
      if (!ranking_csv.empty()) {
        auto csv = open_output(ranking_csv);
        write_ranking_csv(result.model.ranking, csv);
      }
    } else if (*score) {
      const PipelineModel model = load_model(score_model);
      const ImageSet samples = load_image_set(score_samples, Provenance::kGenerated);
      const auto scores = score_images(model, samples);
      auto csv = open_output(score_out);
      write_scores_csv(scores, provenance_labels(samples), csv);
      out << "scored " << scores.size() << " samples\n";
    } else if (*eval) {
      const PipelineModel model = load_model(eval_model);
      const ImageSet real = load_image_set(eval_real, Provenance::kReal).with_provenance(Provenance::kReal);
      const ImageSet gen =
          load_image_set(eval_gen, Provenance::kGenerated).with_provenance(Provenance::kGenerated);
      std::vector<double> scores = score_images(model, real);
      const auto gen_scores = score_images(model, gen);
      scores.insert(scores.end(), gen_scores.begin(), gen_scores.end());
      std::vector<Label> labels(real.count(), 0);
      labels.resize(real.count() + gen.count(), 1);
      const EvaluationReport report =
          aggregate_report(scores, labels, eval_threshold.value_or(model.config.threshold),
                           eval_bins.value_or(model.config.histogram_bins));
      ReportMetadata meta{model.config, model_fingerprint(model), real.fingerprint(),
                          gen.fingerprint()};
      write_json(report_to_json(report, meta), eval_out);
      if (!eval_svg.empty()) {
        auto svg = open_output(eval_svg);
        write_histogram_svg(report.histogram, svg);
      }
      if (!eval_scores.empty()) {
        auto csv = open_output(eval_scores);
        write_scores_csv(scores, labels, csv);
      }
      print_report(report, out);
    } else if (*filter) {
      const PipelineModel model = load_model(filter_model);
      const ImageSet samples = load_image_set(filter_samples, Provenance::kGenerated);
      const auto scores = score_images(model, samples);
      std::vector<std::uint64_t> ids(samples.count());
      std::iota(ids.begin(), ids.end(), std::uint64_t{0});
      std::vector<std::uint64_t> kept = lgsqe::filter_samples(ids, scores, keep);
      std::sort(kept.begin(), kept.end());
      const std::vector<std::size_t> index(kept.begin(), kept.end());
      save_raw_tensor(samples.subset(index), filter_out);
      if (!filter_ids.empty()) {
        auto csv = open_output(filter_ids);
        csv << "sample_id,score\n";
        char buf[64];
        for (std::size_t i : index) {
          std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i, scores[i]);
          csv << buf;
        }
      }
      double mean_all = 0.0, mean_kept = 0.0;
      for (double s : scores) mean_all += s;
      for (std::size_t i : index) mean_kept += scores[i];
      out << "kept " << index.size() << " of " << samples.count() << " samples\n";
      if (!index.empty()) {
        out << "mean score: all " << fmt(mean_all / static_cast<double>(scores.size()))
            << ", kept " << fmt(mean_kept / static_cast<double>(index.size())) << "\n";
      }
    } else if (*sweep) {
      const RunConfig config = sweep_cfg.build(*sweep);
      const ImageSet real = load_image_set(sweep_real, Provenance::kReal);
      const ImageSet gen = load_image_set(sweep_gen, Provenance::kGenerated);
      const auto points = sweep_real_fraction(real, gen, config, parse_fractions(sweep_fractions));
      auto csv = open_output(sweep_out);
      csv << "real_fraction,train_real,train_generated,test_accuracy\n";
      char buf[128];
      for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.6g,%zu,%zu,%.6f\n", p.real_fraction, p.train_real,
                      p.train_generated, p.test_accuracy);
        csv << buf;
        out << buf;
      }
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lgsqe

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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lgsqe/dft.hpp"
#include "lgsqe/eval.hpp"
#include "lgsqe/gbdt.hpp"
#include "lgsqe/parallel.hpp"
#include "lgsqe/pipeline.hpp"
#include "lgsqe/saab.hpp"
#include "lgsqe/serialization.hpp"
#include "support.hpp"

namespace lgsqe {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              seconds_since(start));
  std::fflush(stdout);
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

Outcome saab_oracle_equivalence() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const std::size_t f = 2 + trial % 2, c = 1 + trial % 3;  // K in {4, 8, 9, 12, 18, 27}
    const std::size_t k = f * f * c;
    const Eigen::MatrixXd rows = testing::correlated_rows(200, k, 500 + trial);
    PatchMatrix p;
    p.geometry = make_patch_geometry(f, c, f, 1);
    p.rows = rows;
    const SaabModel m = fit_saab(p, ChannelRule::fixed(k));
    const auto [values, vectors] = testing::saab_oracle(rows);
    for (std::size_t j = 0; j + 1 < k; ++j) {
      worst = std::max(worst, std::abs(m.spatial.ac_eigenvalues[static_cast<Eigen::Index>(j)] -
                                       values[j]));
      for (std::size_t i = 0; i < k; ++i) {
        worst = std::max(worst, std::abs(m.spatial.kernels(static_cast<Eigen::Index>(j + 1),
                                                           static_cast<Eigen::Index>(i)) -
                                         vectors[i][j]));
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-6 && secs < 5.0,
          format("max abs diff %.3g over 10 sets (tol 1e-6), %.3f s (limit 5 s)", worst, secs)};
}

Outcome energy_preservation() {
  const std::size_t k = 27;
  const Eigen::MatrixXd rows = testing::correlated_rows(1000, k, 77);
  PatchMatrix p;
  p.geometry = make_patch_geometry(3, 3, 3, 1);
  p.rows = rows;
  const SaabModel m = fit_saab(p, ChannelRule::fixed(k));
  const Eigen::MatrixXd coeffs = m.spatial.transform_rows(rows);
  const Eigen::VectorXd dc = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k),
                                                       1.0 / std::sqrt(static_cast<double>(k)));
  double worst = 0.0;
  for (Eigen::Index n = 0; n < rows.rows(); ++n) {
    const Eigen::VectorXd x = rows.row(n).transpose();
    const Eigen::VectorXd residual = x - m.spatial.mean;
    const double decomposed =
        std::pow(dc.dot(x), 2) + (residual - dc * dc.dot(residual)).squaredNorm();
    worst = std::max(worst, std::abs(coeffs.row(n).squaredNorm() - decomposed) / decomposed);
  }
  return {worst < 1e-6, format("max relative error %.3g on 1000 patches (tol 1e-6)", worst)};
}

Outcome dft_oracle() {
  Rng rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(63);
    const std::size_t bins = 2 + rng.index(7);
    std::vector<double> v(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = trial % 2 ? rng.normal() : static_cast<double>(rng.index(9));
      y[i] = static_cast<Label>(rng.index(2));
    }
    y[0] = 0;
    y[1] = 1;
    const DftResult got = dft_loss(v, y, bins);
    const DftResult want = testing::dft_oracle(v, y, bins);
    if (got.loss != want.loss || got.threshold != want.threshold) ++mismatches;
  }
  std::vector<double> v(10000);
  std::vector<Label> y(10000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform();
    y[i] = static_cast<Label>(i % 2);
  }
  const double loss = dft_loss(v, y, 32).loss;
  const bool near_ln2 = std::abs(loss - std::log(2.0)) <= 0.02;
  return {mismatches == 0 && near_ln2,
          format("%d/100 exact mismatches; independent loss %.4f vs ln2 %.4f (tol 0.02)",
                 mismatches, loss, std::log(2.0))};
}

Outcome gbdt_correctness() {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const std::vector<Label> y = {0, 1, 1, 1};
  BoostParams p;
  p.num_trees = 1;
  p.max_depth = 1;
  p.min_samples_leaf = 1;
  p.lambda = 1.0;
  const BoostedEnsemble e = fit_ensemble(x, y, p);
  // Prior 3/4: p = 0.75, g = p - y, h = 0.1875. The best stump isolates x = 0.
  const double wl = -0.75 / (0.1875 + 1.0);
  const double wr = 0.75 / (3 * 0.1875 + 1.0);
  const auto& nodes = e.trees.at(0).nodes;
  const double err = nodes.size() == 3 ? std::max(std::abs(nodes[1].weight - wl),
                                                  std::abs(nodes[2].weight - wr))
                                       : INFINITY;

  Rng rng(31);
  Eigen::MatrixXd xs(2000, 6);
  std::vector<Label> ys(2000);
  for (Eigen::Index i = 0; i < 2000; ++i) {
    ys[static_cast<std::size_t>(i)] = static_cast<Label>(i % 2);
    for (Eigen::Index f = 0; f < 6; ++f) xs(i, f) = rng.normal() + (f < 3 ? 0.7 * (i % 2) : 0.0);
  }
  const BoostedEnsemble big = fit_ensemble(xs, ys, BoostParams{});
  const auto losses = staged_log_loss(big, xs, ys);
  std::size_t increases = 0;
  for (std::size_t r = 1; r < losses.size(); ++r) increases += losses[r] > losses[r - 1];
  return {err < 1e-12 && increases == 0 && big.trees.size() == 200,
          format("leaf weight error %.3g (tol 1e-12); loss %.4f -> %.4f over %zu rounds, "
                 "%zu increases",
                 err, losses.front(), losses.back(), big.trees.size(), increases)};
}

Outcome metric_arithmetic() {
  Rng rng(7);
  int bad = 0;
  for (int i = 0; i < 50; ++i) {
    const ConfusionCounts c{rng.index(50), rng.index(50), rng.index(50), rng.index(50) + 1};
    const auto total = static_cast<double>(c.total());
    if (*accuracy(c) != static_cast<double>(c.tp + c.tn) / total) ++bad;
    if (*recall(c) != static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)) ++bad;
    const auto pre = precision(c);
    if (c.tp + c.fp == 0 ? pre.has_value()
                         : *pre != static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp))
      ++bad;
  }
  int instances = 0, pr_bad = 0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 32; ++n) {
    for (int rep = 0; rep < 20; ++rep, ++instances) {
      std::vector<double> s(n);
      std::vector<Label> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = rep % 2 ? rng.uniform() : static_cast<double>(rng.index(6)) / 5.0;
        y[i] = static_cast<Label>(rng.index(2));
      }
      y[0] = 0;
      y[1] = 1;
      const double d = std::abs(pr_auc(s, y) - testing::pr_auc_oracle(s, y));
      worst = std::max(worst, d);
      pr_bad += d > 1e-12;
    }
  }
  return {bad == 0 && pr_bad == 0,
          format("%d/50 confusion fixtures off; PR-AUC max diff %.3g over %d instances",
                 bad, worst, instances)};
}

struct MnistData {
  bool loaded = false;
  ImageSet half_a;
  ImageSet half_b;
};

MnistData load_mnist() {
  MnistData d;
  const fs::path path = fs::path(LGSQE_DATA_DIR) / "mnist" / "t10k-images-idx3-ubyte.gz";
  if (!fs::exists(path)) return d;
  const ImageSet all = load_idx(path);
  Rng rng(derive_seed(0, "acceptance.halves"));
  const auto perm = rng.permutation(all.count());
  const std::size_t half = all.count() / 2;
  d.half_a = all.subset(std::span(perm).first(half));
  d.half_b = all.subset(std::span(perm).subspan(half, half)).with_provenance(Provenance::kGenerated);
  d.loaded = true;
  return d;
}

struct ProxyRun {
  double sigma;
  HoldoutRun run;
  double seconds;
};

}  // namespace
}  // namespace lgsqe

int main() {
  using namespace lgsqe;
  std::printf("acceptance: %zu worker thread(s)\n", num_threads());

  report(1, "Saab oracle equivalence", saab_oracle_equivalence);
  report(2, "Energy preservation", energy_preservation);
  report(3, "DFT exhaustive oracle", dft_oracle);
  report(4, "GBDT correctness", gbdt_correctness);
  report(5, "Metric arithmetic", metric_arithmetic);

  const MnistData mnist = load_mnist();
  auto need_data = [&](const std::function<Outcome()>& f) {
    return [&mnist, f]() -> Outcome {
      if (!mnist.loaded) return {false, "MNIST fixture missing under " LGSQE_DATA_DIR};
      return f();
    };
  };
  const RunConfig config;  // defaults: mnist preset, seed 0

  report(6, "Chance-level calibration", need_data([&] {
           const auto start = Clock::now();
           const HoldoutRun run = fit_and_evaluate(mnist.half_a, mnist.half_b, config);
           const double secs = seconds_since(start);
           const double acc = *run.report.accuracy;
           return Outcome{acc >= 0.45 && acc <= 0.55 && secs < 600.0,
                          format("test accuracy %.4f on %zu+%zu held-out (want [0.45, 0.55]), "
                                 "%zu+%zu training, %.0f s (limit 600 s)",
                                 acc, run.split.real_test.count(),
                                 run.split.generated_test.count(), run.split.real_train.count(),
                                 run.split.generated_train.count(), secs)};
         }));

  std::vector<ProxyRun> proxies;
  report(7, "Degradation rank order", need_data([&] {
           std::string detail;
           for (double sigma : {0.05, 0.15, 0.30}) {
             const ImageSet gen = testing::add_noise(
                 mnist.half_b, sigma, derive_seed(static_cast<std::uint64_t>(sigma * 100), "noise"));
             const auto start = Clock::now();
             HoldoutRun run = fit_and_evaluate(mnist.half_a, gen, config);
             proxies.push_back({sigma, std::move(run), seconds_since(start)});
             detail += format("Acc(%.2f)=%.4f ", sigma, *proxies.back().run.report.accuracy);
           }
           bool ok = *proxies[2].run.report.accuracy >= 0.9;
           for (std::size_t i = 0; i + 1 < proxies.size(); ++i) {
             ok = ok && *proxies[i].run.report.accuracy <= *proxies[i + 1].run.report.accuracy + 0.02;
           }
           return Outcome{ok, detail + "(nondecreasing within 0.02, Acc(0.30) >= 0.9)"};
         }));

  report(8, "Filtering improves aggregate quality", need_data([&] {
           if (proxies.empty()) return Outcome{false, "no proxy model"};
           const HoldoutRun& run = proxies[0].run;  // sigma 0.05, the closest proxy
           const PipelineModel& model = run.fit.model;
           const auto gen_scores = score_images(model, run.split.generated_test);
           const auto real_scores = score_images(model, run.split.real_test);
           std::vector<std::uint64_t> ids(gen_scores.size());
           for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
           std::string detail;
           bool ok = true;
           double prev_mean = INFINITY, prev_acc = INFINITY;
           for (double keep : {1.0, 0.8, 0.6, 0.4, 0.2}) {
             const auto kept = filter_samples(ids, gen_scores, keep);
             std::vector<double> scores(real_scores.begin(),
                                        real_scores.begin() + static_cast<std::ptrdiff_t>(kept.size()));
             std::vector<Label> labels(kept.size(), 0);
             double mean = 0.0;
             for (auto id : kept) {
               mean += gen_scores[id];
               scores.push_back(gen_scores[id]);
               labels.push_back(1);
             }
             mean /= static_cast<double>(kept.size());
             const double acc = *accuracy(confusion(scores, labels, model.config.threshold));
             ok = ok && mean <= prev_mean && acc <= prev_acc + 0.02;
             prev_mean = mean;
             prev_acc = acc;
             detail += format("keep %.1f: mean %.4f acc %.4f; ", keep, mean, acc);
           }
           return Outcome{ok, detail + "sigma 0.05 proxy"};
         }));

  report(9, "Weak-supervision convergence", need_data([&] {
           const ImageSet gen = testing::add_noise(mnist.half_b, 0.15,
                                                   derive_seed(15, "noise"));
           const auto points =
               sweep_real_fraction(mnist.half_a, gen, config, {0.05, 0.1, 0.2, 0.5, 1.0});
           std::string detail;
           double lo = INFINITY, hi = -INFINITY;
           for (const auto& p : points) {
             detail += format("%.2f:%.4f ", p.real_fraction, p.test_accuracy);
             if (p.real_fraction >= 0.2) {
               lo = std::min(lo, p.test_accuracy);
               hi = std::max(hi, p.test_accuracy);
             }
           }
           return Outcome{hi - lo <= 0.05,
                          detail + format("range from 0.2 on %.4f (limit 0.05)", hi - lo)};
         }));

  report(10, "Determinism and persistence", need_data([&] {
           if (proxies.size() < 2) return Outcome{false, "no proxy run"};
           const ImageSet gen = testing::add_noise(mnist.half_b, 0.15,
                                                   derive_seed(15, "noise"));
           const HoldoutRun& first = proxies[1].run;
           const std::size_t default_threads = num_threads();
           set_num_threads(1);
           const HoldoutRun single = fit_and_evaluate(mnist.half_a, gen, config);
           set_num_threads(4);
           const HoldoutRun multi = fit_and_evaluate(mnist.half_a, gen, config);
           set_num_threads(default_threads);
           const std::string m0 = dump_model(first.fit.model);
           const std::string r0 = report_to_json(first.report, {config, "", "", ""}).dump();
           const bool models = m0 == dump_model(single.fit.model) && m0 == dump_model(multi.fit.model);
           const bool reports = r0 == report_to_json(single.report, {config, "", "", ""}).dump() &&
                                r0 == report_to_json(multi.report, {config, "", "", ""}).dump();
           const auto dir = testing::scratch_dir("acceptance");
           save_model(first.fit.model, dir / "a.json");
           save_model(load_model(dir / "a.json"), dir / "b.json");
           const bool round_trip = dump_model(load_model(dir / "b.json")) == m0;
           return Outcome{models && reports && round_trip,
                          format("models identical: %s, reports identical: %s (default, 1 and 4 "
                                 "threads); save-load-save identical: %s",
                                 models ? "yes" : "no", reports ? "yes" : "no",
                                 round_trip ? "yes" : "no")};
         }));

  report(11, "Footprint", need_data([&] {
           if (proxies.size() < 2) return Outcome{false, "no proxy run"};
           const double secs = proxies[1].seconds;
           const double mb = static_cast<double>(dump_model(proxies[1].run.fit.model).size()) / 1e6;
           return Outcome{secs < 300.0 && mb < 10.0,
                          format("fit+eval %.1f s on %zu training images (limit 300 s), model "
                                 "%.2f MB (limit 10 MB)",
                                 secs,
                                 proxies[1].run.split.real_train.count() +
                                     proxies[1].run.split.generated_train.count(),
                                 mb)};
         }));

  std::printf("acceptance: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

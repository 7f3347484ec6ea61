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

#include "lgsqe/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lgsqe/error.hpp"
#include "lgsqe/parallel.hpp"
#include "lgsqe/rng.hpp"

namespace lgsqe {

std::size_t RegressionTree::leaf_index(const double* row, std::size_t stride) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = static_cast<std::size_t>(
        row[static_cast<std::size_t>(n.feature) * stride] < n.threshold ? n.left : n.right);
  }
  return node;
}

double BoostedEnsemble::margin(const double* row, std::size_t stride,
                               std::size_t rounds) const {
  double sum = 0.0;
  const std::size_t used = std::min(rounds, trees.size());
  for (std::size_t t = 0; t < used; ++t) sum += trees[t].predict(row, stride);
  return base_score + learning_rate * sum;
}

double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda) {
  const double g = grad_left + grad_right;
  const double h = hess_left + hess_right;
  return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                grad_right * grad_right / (hess_right + lambda) - g * g / (h + lambda));
}

namespace {

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + exp(m)) - y * m without overflow.
double logistic_loss(double m, Label y) {
  const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  return softplus - static_cast<double>(y) * m;
}

struct NodeStats {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  double threshold = 0.0;
  bool valid = false;
};

// Split point strictly between two adjacent distinct sorted values.
double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<std::vector<std::uint32_t>>& order,
              const BoostParams& params)
      : x_(x), order_(order), params_(params) {
    const auto stride = static_cast<std::size_t>(x_.rows());
    sorted_.resize(order_.size());
    for (std::size_t f = 0; f < order_.size(); ++f) {
      sorted_[f].reserve(order_[f].size());
      for (std::uint32_t i : order_[f]) sorted_[f].push_back(x_.data()[f * stride + i]);
    }
  }

  // Rows with in_sample[i] false do not influence the tree.
  RegressionTree build(const std::vector<double>& grad, const std::vector<double>& hess,
                       const std::vector<char>& in_sample) {
    const auto n = static_cast<std::size_t>(x_.rows());
    node_of_.assign(n, -1);
    RegressionTree tree;
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      node_of_[i] = 0;
      stats[0].grad += grad[i];
      stats[0].hess += hess[i];
      ++stats[0].count;
    }
    tree.nodes.emplace_back();
    std::vector<std::int32_t> frontier = {0};

    for (std::size_t depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      std::vector<std::int32_t> candidates;
      for (std::int32_t node : frontier) {
        if (stats[static_cast<std::size_t>(node)].count >= 2 * params_.min_samples_leaf) {
          candidates.push_back(node);
        }
      }
      if (candidates.empty()) break;
      std::vector<std::int32_t> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < candidates.size(); ++s) {
        slot_of[static_cast<std::size_t>(candidates[s])] = static_cast<std::int32_t>(s);
      }
      slot_of_row_.assign(n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        if (node_of_[i] >= 0) slot_of_row_[i] = slot_of[static_cast<std::size_t>(node_of_[i])];
      }
      const auto best = find_splits(grad, hess, stats, candidates);

      std::vector<std::int32_t> next;
      for (std::size_t s = 0; s < candidates.size(); ++s) {
        if (best[s].feature < 0) continue;
        const auto node = static_cast<std::size_t>(candidates[s]);
        const auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes[node].feature = best[s].feature;
        tree.nodes[node].threshold = best[s].threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.emplace_back();
        stats.emplace_back();
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      const auto stride = static_cast<std::size_t>(x_.rows());
      for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t node = node_of_[i];
        if (node < 0) continue;
        const TreeNode& parent = tree.nodes[static_cast<std::size_t>(node)];
        if (parent.is_leaf()) continue;
        const double v = x_.data()[static_cast<std::size_t>(parent.feature) * stride + i];
        const std::int32_t child = v < parent.threshold ? parent.left : parent.right;
        node_of_[i] = child;
        auto& st = stats[static_cast<std::size_t>(child)];
        st.grad += grad[i];
        st.hess += hess[i];
        ++st.count;
      }
      frontier = std::move(next);
    }
    for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
      if (tree.nodes[node].is_leaf()) {
        tree.nodes[node].weight = leaf_weight(stats[node].grad, stats[node].hess, params_.lambda);
      }
    }
    return tree;
  }

 private:
  struct BestSplit {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<BestSplit> find_splits(const std::vector<double>& grad,
                                     const std::vector<double>& hess,
                                     const std::vector<NodeStats>& stats,
                                     const std::vector<std::int32_t>& candidates) const {
    const auto features = static_cast<std::size_t>(x_.cols());
    const std::size_t slots = candidates.size();
    std::vector<SplitCandidate> per_feature(features * slots);

    parallel_for(features, [&](std::size_t begin, std::size_t end) {
      std::vector<double> gl(slots), hl(slots), last(slots);
      std::vector<std::size_t> nl(slots);
      for (std::size_t f = begin; f < end; ++f) {
        std::fill(gl.begin(), gl.end(), 0.0);
        std::fill(hl.begin(), hl.end(), 0.0);
        std::fill(nl.begin(), nl.end(), 0);
        const std::vector<std::uint32_t>& rows = order_[f];
        const std::vector<double>& values = sorted_[f];
        SplitCandidate* out = per_feature.data() + f * slots;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const std::uint32_t i = rows[k];
          const std::int32_t s = slot_of_row_[i];
          if (s < 0) continue;
          const auto slot = static_cast<std::size_t>(s);
          const double v = values[k];
          if (nl[slot] > 0 && v != last[slot]) {
            const NodeStats& total = stats[static_cast<std::size_t>(candidates[slot])];
            const std::size_t nr = total.count - nl[slot];
            if (nl[slot] >= params_.min_samples_leaf && nr >= params_.min_samples_leaf) {
              const double gain = split_gain(gl[slot], hl[slot], total.grad - gl[slot],
                                             total.hess - hl[slot], params_.lambda);
              if (!out[slot].valid || gain > out[slot].gain) {
                out[slot] = {gain, midpoint(last[slot], v), true};
              }
            }
          }
          gl[slot] += grad[i];
          hl[slot] += hess[i];
          ++nl[slot];
          last[slot] = v;
        }
      }
    });

    // Lowest feature index wins ties; within a feature the lowest threshold
    // was already kept by the ascending scan.
    std::vector<BestSplit> best(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      for (std::size_t f = 0; f < features; ++f) {
        const SplitCandidate& c = per_feature[f * slots + s];
        if (c.valid && c.gain > 0.0 && c.gain > best[s].gain) {
          best[s] = {static_cast<std::int32_t>(f), c.threshold, c.gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<std::vector<std::uint32_t>>& order_;
  std::vector<std::vector<double>> sorted_;
  std::vector<std::int32_t> slot_of_row_;
  const BoostParams& params_;
  std::vector<std::int32_t> node_of_;
};

void validate(const Eigen::MatrixXd& x, std::span<const Label> labels,
              const BoostParams& params) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(ErrorKind::kShape, "feature rows and label count differ");
  }
  if (x.rows() < 2) fail(ErrorKind::kArgument, "boosting needs at least 2 samples");
  if (x.cols() == 0) fail(ErrorKind::kArgument, "boosting needs at least 1 feature");
  if (!x.allFinite()) fail(ErrorKind::kArgument, "non-finite feature value");
  std::size_t ones = 0;
  for (Label l : labels) {
    if (l > 1) fail(ErrorKind::kArgument, "labels must be 0 or 1");
    ones += l;
  }
  if (ones == 0 || ones == labels.size()) {
    fail(ErrorKind::kArgument, "boosting needs both classes present");
  }
  if (!(params.learning_rate > 0.0)) fail(ErrorKind::kArgument, "learning rate must be positive");
  if (!(params.lambda >= 0.0)) fail(ErrorKind::kArgument, "lambda must be nonnegative");
  if (params.min_samples_leaf < 1) fail(ErrorKind::kArgument, "min_samples_leaf must be >= 1");
  if (!(params.subsample > 0.0 && params.subsample <= 1.0)) {
    fail(ErrorKind::kArgument, "subsample must lie in (0, 1]");
  }
  if (params.early_stopping_rounds > 0 &&
      !(params.validation_fraction > 0.0 && params.validation_fraction < 1.0)) {
    fail(ErrorKind::kArgument, "validation_fraction must lie in (0, 1)");
  }
}

}  // namespace

BoostedEnsemble fit_ensemble(const Eigen::MatrixXd& features,
                             std::span<const Label> labels, const BoostParams& params) {
  validate(features, labels, params);
  const auto n = static_cast<std::size_t>(features.rows());
  const auto num_features = static_cast<std::size_t>(features.cols());
  const auto stride = n;

  std::vector<char> is_train(n, 1);
  std::vector<std::size_t> validation;
  if (params.early_stopping_rounds > 0) {
    Rng rng(derive_seed(params.seed, "gbdt.validation"));
    const auto perm = rng.permutation(n);
    auto n_val = static_cast<std::size_t>(
        std::floor(params.validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    validation.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(validation.begin(), validation.end());
    for (std::size_t i : validation) is_train[i] = 0;
  }
  std::vector<std::size_t> train_rows;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_train[i]) continue;
    train_rows.push_back(i);
    ones += labels[i];
  }
  if (ones == 0 || ones == train_rows.size()) {
    fail(ErrorKind::kArgument, "training rows lack one class after the validation hold-out");
  }

  BoostedEnsemble ensemble;
  ensemble.learning_rate = params.learning_rate;
  ensemble.num_features = num_features;
  ensemble.params = params;
  const double prior = static_cast<double>(ones) / static_cast<double>(train_rows.size());
  ensemble.base_score = std::log(prior / (1.0 - prior));

  std::vector<std::vector<std::uint32_t>> order(num_features);
  parallel_for(num_features, [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) {
      const double* column = features.data() + f * stride;
      auto& idx = order[f];
      idx.reserve(train_rows.size());
      for (std::size_t i : train_rows) idx.push_back(static_cast<std::uint32_t>(i));
      std::sort(idx.begin(), idx.end(), [column](std::uint32_t a, std::uint32_t b) {
        return column[a] < column[b] || (column[a] == column[b] && a < b);
      });
    }
  });

  std::vector<double> margin(n, ensemble.base_score);
  std::vector<double> grad(n, 0.0), hess(n, 0.0);
  std::vector<char> in_sample(n, 0);
  Rng sampler(derive_seed(params.seed, "gbdt.subsample"));
  TreeBuilder builder(features, order, params);

  double best_validation = std::numeric_limits<double>::infinity();
  std::size_t best_rounds = 0;
  std::size_t stale = 0;

  for (std::size_t round = 0; round < params.num_trees; ++round) {
    for (std::size_t i : train_rows) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - static_cast<double>(labels[i]);
      hess[i] = p * (1.0 - p);
    }
    std::fill(in_sample.begin(), in_sample.end(), 0);
    if (params.subsample < 1.0) {
      auto take = static_cast<std::size_t>(
          std::floor(params.subsample * static_cast<double>(train_rows.size())));
      take = std::clamp<std::size_t>(take, 2, train_rows.size());
      const auto perm = sampler.permutation(train_rows.size());
      for (std::size_t j = 0; j < take; ++j) in_sample[train_rows[perm[j]]] = 1;
    } else {
      for (std::size_t i : train_rows) in_sample[i] = 1;
    }
    ensemble.trees.push_back(builder.build(grad, hess, in_sample));
    const RegressionTree& tree = ensemble.trees.back();
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += params.learning_rate * tree.predict(features.data() + i, stride);
    }

    if (params.early_stopping_rounds > 0) {
      double loss = 0.0;
      for (std::size_t i : validation) loss += logistic_loss(margin[i], labels[i]);
      loss /= static_cast<double>(validation.size());
      if (loss < best_validation) {
        best_validation = loss;
        best_rounds = ensemble.trees.size();
        stale = 0;
      } else if (++stale >= params.early_stopping_rounds) {
        break;
      }
    }
  }
  if (params.early_stopping_rounds > 0) ensemble.trees.resize(best_rounds);
  return ensemble;
}

std::vector<double> predict_score(const BoostedEnsemble& ensemble,
                                  const Eigen::MatrixXd& features) {
  if (static_cast<std::size_t>(features.cols()) != ensemble.num_features) {
    fail(ErrorKind::kShape, "ensemble expects " + std::to_string(ensemble.num_features) +
                                " features, got " + std::to_string(features.cols()));
  }
  const auto n = static_cast<std::size_t>(features.rows());
  std::vector<double> scores(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      scores[i] = sigmoid(ensemble.margin(features.data() + i, n));
    }
  });
  return scores;
}

std::vector<double> staged_log_loss(const BoostedEnsemble& ensemble,
                                    const Eigen::MatrixXd& features,
                                    std::span<const Label> labels) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (n != labels.size()) fail(ErrorKind::kShape, "feature rows and label count differ");
  if (n == 0) fail(ErrorKind::kArgument, "log loss of zero samples");
  std::vector<double> margin(n, ensemble.base_score);
  std::vector<double> losses;
  losses.reserve(ensemble.trees.size() + 1);
  auto mean_loss = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += logistic_loss(margin[i], labels[i]);
    return sum / static_cast<double>(n);
  };
  losses.push_back(mean_loss());
  for (const auto& tree : ensemble.trees) {
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += ensemble.learning_rate * tree.predict(features.data() + i, n);
    }
    losses.push_back(mean_loss());
  }
  return losses;
}

}  // namespace lgsqe

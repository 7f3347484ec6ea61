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

#include "lgsqe/saab.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "lgsqe/error.hpp"
#include "lgsqe/parallel.hpp"

namespace lgsqe {

PatchGeometry make_patch_geometry(std::size_t image_size, std::size_t channels,
                                  std::size_t patch_size, std::size_t stride) {
  if (patch_size == 0 || stride == 0) {
    fail(ErrorKind::kGeometry, "patch size and stride must be positive");
  }
  if (patch_size > image_size) {
    fail(ErrorKind::kGeometry, "patch size " + std::to_string(patch_size) +
                                   " exceeds image size " +
                                   std::to_string(image_size));
  }
  if (channels == 0) fail(ErrorKind::kGeometry, "images have no channels");
  return {image_size, channels, patch_size, stride};
}

namespace {

// Writes the grid() * grid() patches of one image into consecutive rows of
// `out`, starting at `first_row`.
void fill_patches(const PatchGeometry& g, std::span<const float> image,
                  Eigen::MatrixXd& out, Eigen::Index first_row) {
  const std::size_t grid = g.grid();
  const std::size_t n = g.image_size, c = g.channels, f = g.patch_size;
  Eigen::Index row = first_row;
  for (std::size_t gy = 0; gy < grid; ++gy) {
    for (std::size_t gx = 0; gx < grid; ++gx, ++row) {
      Eigen::Index col = 0;
      for (std::size_t dy = 0; dy < f; ++dy) {
        const std::size_t y = gy * g.stride + dy;
        const float* src = image.data() + (y * n + gx * g.stride) * c;
        for (std::size_t k = 0; k < f * c; ++k) out(row, col++) = src[k];
      }
    }
  }
}

inline double abs_max4(double a, double b, double c, double d) {
  double best = a;
  if (std::abs(b) > std::abs(best)) best = b;
  if (std::abs(c) > std::abs(best)) best = c;
  if (std::abs(d) > std::abs(best)) best = d;
  return best;
}

// responses: grid^2 x K1 with row = y * grid + x. Returns pooled^2 x K1.
Eigen::MatrixXd pool_responses(const Eigen::MatrixXd& responses, std::size_t grid) {
  const std::size_t pooled = grid / 2;
  const Eigen::Index channels = responses.cols();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pooled * pooled), channels);
  for (std::size_t py = 0; py < pooled; ++py) {
    for (std::size_t px = 0; px < pooled; ++px) {
      const auto r00 = static_cast<Eigen::Index>((2 * py) * grid + 2 * px);
      const auto r01 = r00 + 1;
      const auto r10 = r00 + static_cast<Eigen::Index>(grid);
      const auto r11 = r10 + 1;
      const auto dst = static_cast<Eigen::Index>(py * pooled + px);
      for (Eigen::Index k = 0; k < channels; ++k) {
        out(dst, k) = abs_max4(responses(r00, k), responses(r01, k),
                               responses(r10, k), responses(r11, k));
      }
    }
  }
  return out;
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

constexpr double kFlatEnergy = 1e-24;

}  // namespace

PatchMatrix extract_patches(const ImageSet& images, std::size_t patch_size,
                            std::size_t stride) {
  PatchMatrix out;
  out.geometry = make_patch_geometry(images.size(), images.channels(),
                                     patch_size, stride);
  out.image_count = images.count();
  const std::size_t per_image = out.geometry.grid() * out.geometry.grid();
  out.rows.resize(static_cast<Eigen::Index>(images.count() * per_image),
                  static_cast<Eigen::Index>(out.geometry.dim()));
  out.origin.resize(images.count() * per_image);
  for (std::size_t i = 0; i < images.count(); ++i) {
    fill_patches(out.geometry, images.image(i), out.rows,
                 static_cast<Eigen::Index>(i * per_image));
    std::fill_n(out.origin.begin() + static_cast<std::ptrdiff_t>(i * per_image),
                per_image, i);
  }
  return out;
}

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      scatter_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                     static_cast<Eigen::Index>(dim))) {}

void CovarianceAccumulator::add(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0) return;
  if (count_ == 0 && mean_.size() == 0) {
    mean_ = Eigen::VectorXd::Zero(rows.cols());
    scatter_ = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  }
  if (rows.cols() != mean_.size()) {
    fail(ErrorKind::kShape, "observation dimension mismatch in covariance");
  }
  const auto nb = static_cast<double>(rows.rows());
  const Eigen::VectorXd batch_mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - batch_mean.transpose();
  Eigen::MatrixXd batch_scatter = centered.transpose() * centered;
  if (count_ == 0) {
    mean_ = batch_mean;
    scatter_ = std::move(batch_scatter);
  } else {
    const auto na = static_cast<double>(count_);
    const double n = na + nb;
    const Eigen::VectorXd delta = batch_mean - mean_;
    scatter_ += batch_scatter + delta * delta.transpose() * (na * nb / n);
    mean_ += delta * (nb / n);
  }
  count_ += static_cast<std::size_t>(rows.rows());
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (count_ == 0) fail(ErrorKind::kArgument, "covariance of zero observations");
  const double denom = count_ > 1 ? static_cast<double>(count_ - 1) : 1.0;
  return scatter_ / denom;
}

Eigen::VectorXd SaabKernels::transform(
    const Eigen::Ref<const Eigen::VectorXd>& patch) const {
  Eigen::VectorXd coeffs = kernels * (patch - mean);
  coeffs[0] += kernels.row(0).dot(mean);
  return coeffs;
}

Eigen::MatrixXd SaabKernels::transform_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& patches) const {
  Eigen::MatrixXd coeffs =
      (patches.rowwise() - mean.transpose()) * kernels.transpose();
  coeffs.col(0).array() += kernels.row(0).dot(mean);
  return coeffs;
}

SaabKernels fit_kernels(const CovarianceAccumulator& stats, const ChannelRule& rule,
                        bool dc_only_if_flat) {
  const auto dim = static_cast<Eigen::Index>(stats.dim());
  if (dim == 0 || stats.count() == 0) {
    fail(ErrorKind::kArgument, "cannot fit Saab kernels without observations");
  }
  if (rule.is_explicit && (rule.count < 1 || rule.count > stats.dim())) {
    fail(ErrorKind::kArgument, "explicit channel count " + std::to_string(rule.count) +
                                   " outside [1, " + std::to_string(stats.dim()) + "]");
  }
  if (!rule.is_explicit && !(rule.energy_fraction > 0.0 && rule.energy_fraction <= 1.0)) {
    fail(ErrorKind::kArgument, "energy fraction must lie in (0, 1]");
  }

  SaabKernels out;
  out.mean = stats.mean();
  const Eigen::VectorXd dc =
      Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));

  // Orthonormal basis of the complement of the DC direction. Diagonalizing
  // the covariance inside it keeps every AC kernel exactly orthogonal to DC.
  Eigen::MatrixXd eigvecs(dim, dim - 1);
  out.ac_eigenvalues.resize(dim - 1);
  if (dim > 1) {
    const Eigen::MatrixXd dc_column = dc;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dc_column);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd basis = q.rightCols(dim - 1);
    Eigen::MatrixXd reduced = basis.transpose() * stats.covariance() * basis;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reduced);
    if (solver.info() != Eigen::Success) {
      fail(ErrorKind::kArgument, "eigendecomposition of patch covariance failed");
    }
    for (Eigen::Index j = 0; j < dim - 1; ++j) {
      const Eigen::Index src = dim - 2 - j;  // solver sorts ascending
      out.ac_eigenvalues[j] = std::max(0.0, solver.eigenvalues()[src]);
      eigvecs.col(j) = basis * solver.eigenvectors().col(src);
      eigvecs.col(j).normalize();
      normalize_sign(eigvecs.col(j));
    }
  }

  const double total = out.ac_eigenvalues.sum();
  std::size_t ac_kept = 0;
  if (dc_only_if_flat && total <= kFlatEnergy) {
    ac_kept = 0;
  } else if (rule.is_explicit) {
    ac_kept = rule.count - 1;
  } else if (rule.energy_fraction >= 1.0) {
    ac_kept = static_cast<std::size_t>(dim - 1);
  } else if (total > 0.0) {
    double cumulative = 0.0;
    while (ac_kept < static_cast<std::size_t>(dim - 1) &&
           cumulative < rule.energy_fraction * total) {
      cumulative += out.ac_eigenvalues[static_cast<Eigen::Index>(ac_kept)];
      ++ac_kept;
    }
  }

  out.kernels.resize(static_cast<Eigen::Index>(ac_kept + 1), dim);
  out.kernels.row(0) = dc.transpose();
  for (std::size_t j = 0; j < ac_kept; ++j) {
    out.kernels.row(static_cast<Eigen::Index>(j + 1)) =
        eigvecs.col(static_cast<Eigen::Index>(j)).transpose();
  }
  return out;
}

std::size_t SaabModel::spatial_width() const {
  return pooled_grid() * pooled_grid() * kept_channels();
}

std::size_t SaabModel::spectral_width() const {
  std::size_t width = 0;
  for (const auto& k : channelwise) width += k.kept();
  return width;
}

SaabModel fit_saab(const PatchMatrix& patches, const ChannelRule& rule) {
  const auto rows = static_cast<std::size_t>(patches.rows.rows());
  if (rows < patches.geometry.dim()) {
    std::clog << "warning: fitting Saab kernels of dimension "
              << patches.geometry.dim() << " on only " << rows
              << " patches; trailing eigenvalues are rank-deficient\n";
  }
  CovarianceAccumulator stats(patches.geometry.dim());
  stats.add(patches.rows);
  SaabModel model;
  model.geometry = patches.geometry;
  model.spatial_rule = rule;
  model.spatial = fit_kernels(stats, rule);
  return model;
}

namespace {

void check_geometry(const SaabModel& model, const ImageSet& images) {
  if (images.empty()) return;
  if (images.size() != model.geometry.image_size ||
      images.channels() != model.geometry.channels) {
    fail(ErrorKind::kShape,
         "images are " + std::to_string(images.size()) + "x" +
             std::to_string(images.size()) + "x" + std::to_string(images.channels()) +
             " but the model expects " + std::to_string(model.geometry.image_size) +
             "x" + std::to_string(model.geometry.image_size) + "x" +
             std::to_string(model.geometry.channels));
  }
}

Eigen::MatrixXd image_responses(const SaabModel& model, std::span<const float> image,
                                Eigen::MatrixXd& scratch) {
  const auto per_image =
      static_cast<Eigen::Index>(model.geometry.grid() * model.geometry.grid());
  scratch.resize(per_image, static_cast<Eigen::Index>(model.geometry.dim()));
  fill_patches(model.geometry, image, scratch, 0);
  return model.spatial.transform_rows(scratch);
}

}  // namespace

ResponseTensor apply_saab(const SaabModel& model, const ImageSet& images) {
  check_geometry(model, images);
  ResponseTensor out;
  out.count = images.count();
  out.height = out.width = model.geometry.grid();
  out.channels = model.kept_channels();
  const std::size_t per_image = out.height * out.width * out.channels;
  out.values.resize(out.count * per_image);
  parallel_for(images.count(), [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd scratch;
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::MatrixXd r = image_responses(model, images.image(i), scratch);
      double* dst = out.values.data() + i * per_image;
      for (Eigen::Index row = 0; row < r.rows(); ++row) {
        for (Eigen::Index k = 0; k < r.cols(); ++k) *dst++ = r(row, k);
      }
    }
  });
  return out;
}

ResponseTensor abs_max_pool(const ResponseTensor& responses) {
  if (responses.height < 2 || responses.width < 2) {
    fail(ErrorKind::kShape, "absolute max-pooling needs at least a 2x2 grid");
  }
  ResponseTensor out;
  out.count = responses.count;
  out.height = responses.height / 2;
  out.width = responses.width / 2;
  out.channels = responses.channels;
  out.values.resize(out.count * out.height * out.width * out.channels);
  for (std::size_t n = 0; n < out.count; ++n) {
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) {
        for (std::size_t c = 0; c < out.channels; ++c) {
          out.at(n, y, x, c) = abs_max4(
              responses.at(n, 2 * y, 2 * x, c), responses.at(n, 2 * y, 2 * x + 1, c),
              responses.at(n, 2 * y + 1, 2 * x, c),
              responses.at(n, 2 * y + 1, 2 * x + 1, c));
        }
      }
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd channel_rows(const ResponseTensor& pooled, std::size_t c) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(pooled.count),
                       static_cast<Eigen::Index>(pooled.height * pooled.width));
  for (std::size_t n = 0; n < pooled.count; ++n) {
    for (std::size_t y = 0; y < pooled.height; ++y) {
      for (std::size_t x = 0; x < pooled.width; ++x) {
        rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(y * pooled.width + x)) =
            pooled.at(n, y, x, c);
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<SaabKernels> fit_cw_saab(const ResponseTensor& pooled,
                                     const ChannelRule& rule) {
  if (pooled.count == 0) fail(ErrorKind::kArgument, "no pooled maps to fit");
  std::vector<SaabKernels> out;
  out.reserve(pooled.channels);
  for (std::size_t c = 0; c < pooled.channels; ++c) {
    CovarianceAccumulator stats(pooled.height * pooled.width);
    stats.add(channel_rows(pooled, c));
    out.push_back(fit_kernels(stats, rule, /*dc_only_if_flat=*/true));
  }
  return out;
}

Eigen::MatrixXd apply_cw_saab(const SaabModel& model, const ResponseTensor& pooled) {
  if (pooled.channels != model.channelwise.size()) {
    fail(ErrorKind::kShape, "pooled channel count does not match channel-wise models");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pooled.count),
                      static_cast<Eigen::Index>(model.spectral_width()));
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < pooled.channels; ++c) {
    const auto& kernels = model.channelwise[c];
    if (kernels.dim() != pooled.height * pooled.width) {
      fail(ErrorKind::kShape, "pooled map size does not match channel-wise kernels");
    }
    const auto kept = static_cast<Eigen::Index>(kernels.kept());
    if (pooled.count > 0) {
      out.middleCols(col, kept) = kernels.transform_rows(channel_rows(pooled, c));
    }
    col += kept;
  }
  return out;
}

std::vector<ColumnOrigin> column_layout(const SaabModel& model) {
  std::vector<ColumnOrigin> columns;
  columns.reserve(model.width());
  const std::size_t cells = model.pooled_grid() * model.pooled_grid();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t c = 0; c < model.kept_channels(); ++c) {
      columns.push_back({FeatureStage::kSpatial, static_cast<std::uint32_t>(c),
                         static_cast<std::uint32_t>(cell)});
    }
  }
  for (std::size_t c = 0; c < model.channelwise.size(); ++c) {
    for (std::size_t j = 0; j < model.channelwise[c].kept(); ++j) {
      columns.push_back({FeatureStage::kSpectral, static_cast<std::uint32_t>(c),
                         static_cast<std::uint32_t>(j)});
    }
  }
  return columns;
}

FeatureMatrix build_representation(const SaabModel& model, const ImageSet& images) {
  check_geometry(model, images);
  if (model.channelwise.size() != model.kept_channels()) {
    fail(ErrorKind::kArgument, "channel-wise Saab sub-models are not fitted");
  }
  if (model.pooled_grid() == 0) {
    fail(ErrorKind::kGeometry, "response grid too small to pool");
  }
  FeatureMatrix out;
  out.columns = column_layout(model);
  out.values.resize(static_cast<Eigen::Index>(images.count()),
                    static_cast<Eigen::Index>(out.columns.size()));
  const std::size_t grid = model.geometry.grid();
  parallel_for(images.count(), [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd scratch;
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Eigen::MatrixXd pooled =
          pool_responses(image_responses(model, images.image(i), scratch), grid);
      Eigen::Index col = 0;
      for (Eigen::Index cell = 0; cell < pooled.rows(); ++cell) {
        for (Eigen::Index k = 0; k < pooled.cols(); ++k) {
          out.values(row, col++) = pooled(cell, k);
        }
      }
      for (Eigen::Index k = 0; k < pooled.cols(); ++k) {
        const Eigen::VectorXd coeffs =
            model.channelwise[static_cast<std::size_t>(k)].transform(pooled.col(k));
        out.values.row(row).segment(col, coeffs.size()) = coeffs.transpose();
        col += coeffs.size();
      }
    }
  });
  return out;
}

SaabModel fit_representation(std::span<const ImageSet* const> sets,
                             const SaabConfig& config) {
  const ImageSet* first = nullptr;
  std::size_t total_images = 0;
  for (const ImageSet* s : sets) {
    if (s->empty()) continue;
    if (first == nullptr) first = s;
    if (s->size() != first->size() || s->channels() != first->channels()) {
      fail(ErrorKind::kShape, "training sets differ in image geometry");
    }
    total_images += s->count();
  }
  if (first == nullptr) fail(ErrorKind::kArgument, "no training images");

  SaabModel model;
  model.geometry = make_patch_geometry(first->size(), first->channels(),
                                       config.patch_size, config.stride);
  model.spatial_rule = config.spatial_rule;
  model.channelwise_rule = config.channelwise_rule;
  if (model.geometry.grid() < 2) {
    fail(ErrorKind::kGeometry, "patch grid of " + std::to_string(model.geometry.grid()) +
                                   " is too small for 2x2 pooling");
  }

  constexpr std::size_t kBatch = 64;
  const std::size_t per_image = model.geometry.grid() * model.geometry.grid();
  const std::size_t dim = model.geometry.dim();
  if (total_images * per_image < dim) {
    std::clog << "warning: only " << total_images * per_image
              << " patches for Saab dimension " << dim << "\n";
  }

  CovarianceAccumulator patch_stats(dim);
  Eigen::MatrixXd batch;
  for (const ImageSet* s : sets) {
    for (std::size_t start = 0; start < s->count(); start += kBatch) {
      const std::size_t n = std::min(kBatch, s->count() - start);
      batch.resize(static_cast<Eigen::Index>(n * per_image), static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < n; ++i) {
        fill_patches(model.geometry, s->image(start + i), batch,
                     static_cast<Eigen::Index>(i * per_image));
      }
      patch_stats.add(batch);
    }
  }
  model.spatial = fit_kernels(patch_stats, config.spatial_rule);

  const std::size_t channels = model.kept_channels();
  const std::size_t cells = model.pooled_grid() * model.pooled_grid();
  std::vector<CovarianceAccumulator> channel_stats(channels, CovarianceAccumulator(cells));
  std::vector<Eigen::MatrixXd> pooled(kBatch);
  for (const ImageSet* s : sets) {
    for (std::size_t start = 0; start < s->count(); start += kBatch) {
      const std::size_t n = std::min(kBatch, s->count() - start);
      parallel_for(n, [&](std::size_t begin, std::size_t end) {
        Eigen::MatrixXd scratch;
        for (std::size_t i = begin; i < end; ++i) {
          pooled[i] = pool_responses(
              image_responses(model, s->image(start + i), scratch),
              model.geometry.grid());
        }
      });
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cells));
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
          rows.row(static_cast<Eigen::Index>(i)) =
              pooled[i].col(static_cast<Eigen::Index>(c)).transpose();
        }
        channel_stats[c].add(rows);
      }
    }
  }
  model.channelwise.reserve(channels);
  for (const auto& stats : channel_stats) {
    model.channelwise.push_back(
        fit_kernels(stats, config.channelwise_rule, /*dc_only_if_flat=*/true));
  }
  return model;
}

}  // namespace lgsqe

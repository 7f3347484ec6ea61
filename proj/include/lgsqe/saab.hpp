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

// One-hop Saab representation.
//
// An image is cut into overlapping F x F x C patches with stride S. Each patch
// is projected onto a constant unit DC kernel and onto AC kernels obtained by
// PCA of the DC-removed, mean-centered patches. The K1 strongest channels are
// kept, each channel is 2x2 absolute-max-pooled, and finally every pooled
// channel map is treated as one global patch and passed through its own Saab
// transform (channel-wise Saab). Pooled responses form the spatial features,
// channel-wise coefficients the spectral features.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lgsqe/image_set.hpp"

namespace lgsqe {

struct PatchGeometry {
  std::size_t image_size = 0;
  std::size_t channels = 0;
  std::size_t patch_size = 0;
  std::size_t stride = 1;

  /// Patch positions per axis, floor((N - F) / S) + 1.
  std::size_t grid() const { return (image_size - patch_size) / stride + 1; }
  /// Flattened patch length F * F * C.
  std::size_t dim() const { return patch_size * patch_size * channels; }

  bool operator==(const PatchGeometry&) const = default;
};

/// Throws a geometry error when F > N, F == 0 or S == 0.
PatchGeometry make_patch_geometry(std::size_t image_size, std::size_t channels,
                                  std::size_t patch_size, std::size_t stride);

/// One flattened patch per row, in (y, x, c) order within the patch. Rows are
/// image-major, then row-major over grid positions.
struct PatchMatrix {
  PatchGeometry geometry;
  std::size_t image_count = 0;
  Eigen::MatrixXd rows;
  std::vector<std::size_t> origin;
};

PatchMatrix extract_patches(const ImageSet& images, std::size_t patch_size,
                            std::size_t stride);

/// How many channels a Saab stage keeps: either an explicit total count
/// (DC included) or the fewest AC kernels whose eigenvalues reach the given
/// fraction of the total AC energy.
struct ChannelRule {
  bool is_explicit = false;
  double energy_fraction = 0.99;
  std::size_t count = 0;

  static ChannelRule energy(double fraction) { return {false, fraction, 0}; }
  static ChannelRule fixed(std::size_t k) { return {true, 0.0, k}; }

  bool operator==(const ChannelRule&) const = default;
};

/// Running mean and scatter matrix, merged batch by batch (Chan et al.).
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t dim = 0);

  /// Each row is one observation.
  void add(const Eigen::Ref<const Eigen::MatrixXd>& rows);

  std::size_t count() const { return count_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Scatter / (n - 1); n == 1 divides by 1.
  Eigen::MatrixXd covariance() const;

 private:
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

/// Kernels of one Saab stage.
struct SaabKernels {
  /// Mean patch, subtracted before the AC projections.
  Eigen::VectorXd mean;
  /// kept x dim. Row 0 is the DC kernel (all entries 1/sqrt(dim)); rows 1..
  /// are AC kernels in nonincreasing eigenvalue order, each with its first
  /// nonzero entry positive.
  Eigen::MatrixXd kernels;
  /// All dim - 1 AC eigenvalues, nonincreasing, clamped at zero.
  Eigen::VectorXd ac_eigenvalues;

  std::size_t dim() const { return static_cast<std::size_t>(kernels.cols()); }
  std::size_t kept() const { return static_cast<std::size_t>(kernels.rows()); }

  /// DC = dc . patch; AC_k = ac_k . (patch - mean).
  Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& patch) const;
  /// Row-wise transform of many patches.
  Eigen::MatrixXd transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& patches) const;
};

/// Fits DC/AC kernels from accumulated patch statistics. When
/// `dc_only_if_flat` is set, a stage without AC energy keeps only its DC
/// kernel regardless of the rule.
SaabKernels fit_kernels(const CovarianceAccumulator& stats, const ChannelRule& rule,
                        bool dc_only_if_flat = false);

/// Dense count x height x width x channels tensor of filter responses.
struct ResponseTensor {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  double& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) {
    return values[((n * height + y) * width + x) * channels + c];
  }
  double at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const {
    return values[((n * height + y) * width + x) * channels + c];
  }
};

struct SaabModel {
  PatchGeometry geometry;
  ChannelRule spatial_rule;
  ChannelRule channelwise_rule;
  SaabKernels spatial;
  /// One sub-model per kept spatial channel; empty until fit_cw_saab.
  std::vector<SaabKernels> channelwise;

  std::size_t kept_channels() const { return spatial.kept(); }
  std::size_t pooled_grid() const { return geometry.grid() / 2; }
  std::size_t spatial_width() const;
  std::size_t spectral_width() const;
  std::size_t width() const { return spatial_width() + spectral_width(); }
};

/// Fits the spatial kernels only; `channelwise` stays empty.
SaabModel fit_saab(const PatchMatrix& patches, const ChannelRule& rule);

/// count x N1 x N1 x K1 responses. Channel 0 is DC, then AC in eigenvalue order.
ResponseTensor apply_saab(const SaabModel& model, const ImageSet& images);

/// Non-overlapping 2x2 windows; keeps the signed element of largest magnitude
/// (first in row-major window order on ties). Odd trailing rows/columns are
/// dropped.
ResponseTensor abs_max_pool(const ResponseTensor& responses);

/// Fits one Saab transform per channel, treating each pooled channel map as a
/// single global patch. Channels without variance keep only their DC kernel.
std::vector<SaabKernels> fit_cw_saab(const ResponseTensor& pooled,
                                     const ChannelRule& rule);

/// count x spectral_width coefficients, channel by channel.
Eigen::MatrixXd apply_cw_saab(const SaabModel& model, const ResponseTensor& pooled);

enum class FeatureStage : std::uint8_t { kSpatial = 0, kSpectral = 1 };

/// Where a representation column comes from. Spatial columns index a pooled
/// (y, x) position; spectral columns index a channel-wise coefficient.
struct ColumnOrigin {
  FeatureStage stage;
  std::uint32_t channel;
  std::uint32_t index;
};

struct FeatureMatrix {
  /// samples x columns.
  Eigen::MatrixXd values;
  std::vector<ColumnOrigin> columns;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Column order: pooled spatial responses flattened as (y, x, channel), then
/// spectral coefficients channel by channel.
std::vector<ColumnOrigin> column_layout(const SaabModel& model);

/// Requires fitted channel-wise sub-models. Images are processed in parallel.
FeatureMatrix build_representation(const SaabModel& model, const ImageSet& images);

struct SaabConfig {
  std::size_t patch_size = 5;
  std::size_t stride = 2;
  ChannelRule spatial_rule = ChannelRule::energy(0.99);
  ChannelRule channelwise_rule = ChannelRule::energy(0.99);
};

/// Fits spatial and channel-wise kernels by streaming over the given sets, so
/// the full patch matrix is never materialized.
SaabModel fit_representation(std::span<const ImageSet* const> sets,
                             const SaabConfig& config);

}  // namespace lgsqe

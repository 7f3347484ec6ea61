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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lgsqe {

/// Binary class label. Real samples are 0, generated samples are 1.
using Label = std::uint8_t;

enum class Provenance : std::uint8_t { kReal = 0, kGenerated = 1 };

inline Label to_label(Provenance p) { return static_cast<Label>(p); }
std::string to_string(Provenance p);

/// A batch of square images stored as a dense count x N x N x C tensor of
/// pixels in [0, 1]. Immutable after construction.
class ImageSet {
 public:
  ImageSet() = default;
  /// Validates the tensor length and pixel range.
  ImageSet(std::size_t count, std::size_t size, std::size_t channels,
           std::vector<float> pixels, Provenance provenance);

  std::size_t count() const { return count_; }
  std::size_t size() const { return size_; }
  std::size_t channels() const { return channels_; }
  std::size_t image_stride() const { return size_ * size_ * channels_; }
  Provenance provenance() const { return provenance_; }
  bool empty() const { return count_ == 0; }

  std::span<const float> pixels() const { return pixels_; }
  std::span<const float> image(std::size_t i) const {
    return std::span(pixels_).subspan(i * image_stride(), image_stride());
  }
  float at(std::size_t i, std::size_t y, std::size_t x, std::size_t c) const {
    return pixels_[((i * size_ + y) * size_ + x) * channels_ + c];
  }

  /// Images at the given indices, in the given order.
  ImageSet subset(std::span<const std::size_t> indices) const;
  ImageSet with_provenance(Provenance p) const;

  /// FNV-1a over geometry and pixel bytes, as 16 hex digits.
  std::string fingerprint() const;

 private:
  std::size_t count_ = 0;
  std::size_t size_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> pixels_;
  Provenance provenance_ = Provenance::kReal;
};

/// Concatenates sets with identical geometry. Provenance is taken from the
/// first set.
ImageSet concatenate(std::span<const ImageSet> sets);

/// MNIST IDX unsigned-byte rank-3 tensor (magic 0x00000803). Gzip-compressed
/// files are decoded transparently. Pixels are scaled by 1/255.
ImageSet load_idx(const std::filesystem::path& path,
                  Provenance provenance = Provenance::kReal);

/// CIFAR-10 binary batch: 3073-byte records of one label byte followed by
/// channel-planar 32x32 R, G, B planes. Labels are discarded.
ImageSet load_cifar_bin(const std::filesystem::path& path,
                        Provenance provenance = Provenance::kReal);

/// LGT raw tensor: "LGT1", little-endian u32 count, N, N, C, u8 provenance,
/// then count*N*N*C little-endian float32 pixels.
ImageSet load_raw_tensor(const std::filesystem::path& path);
void save_raw_tensor(const ImageSet& images, const std::filesystem::path& path);

/// Dispatches on content: LGT magic, IDX magic (plain or gzip), otherwise
/// CIFAR records. `provenance` overrides the IDX/CIFAR default of real;
/// LGT files carry their own flag.
ImageSet load_image_set(const std::filesystem::path& path,
                        Provenance provenance);

struct SourceSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Train/test partition of a real and a generated source.
struct LabeledSplit {
  ImageSet real_train;
  ImageSet real_test;
  ImageSet generated_train;
  ImageSet generated_test;
  SourceSplit real_indices;
  SourceSplit generated_indices;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  double real_fraction = 1.0;

  std::vector<Label> train_labels() const;
  std::vector<Label> test_labels() const;
};

/// Deterministic given `seed`. `real_fraction` subsamples only the real
/// training portion; test sets never depend on it.
LabeledSplit make_labeled_split(const ImageSet& real, const ImageSet& generated,
                                double test_fraction, double real_fraction,
                                std::uint64_t seed);

}  // namespace lgsqe

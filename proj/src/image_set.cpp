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

#include "lgsqe/image_set.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lgsqe/error.hpp"
#include "lgsqe/rng.hpp"

namespace lgsqe {

std::string to_string(Provenance p) {
  return p == Provenance::kReal ? "real" : "generated";
}

ImageSet::ImageSet(std::size_t count, std::size_t size, std::size_t channels,
                   std::vector<float> pixels, Provenance provenance)
    : count_(count),
      size_(size),
      channels_(channels),
      pixels_(std::move(pixels)),
      provenance_(provenance) {
  if (count_ > 0 && (size_ == 0 || channels_ == 0)) {
    fail(ErrorKind::kShape, "image set with zero size or channels");
  }
  if (pixels_.size() != count_ * size_ * size_ * channels_) {
    fail(ErrorKind::kLength,
         "pixel buffer holds " + std::to_string(pixels_.size()) +
             " values, expected " +
             std::to_string(count_ * size_ * size_ * channels_));
  }
  for (float v : pixels_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      fail(ErrorKind::kArgument, "pixel value outside [0, 1]");
    }
  }
}

ImageSet ImageSet::subset(std::span<const std::size_t> indices) const {
  const std::size_t stride = image_stride();
  std::vector<float> out;
  out.reserve(indices.size() * stride);
  for (std::size_t i : indices) {
    if (i >= count_) fail(ErrorKind::kArgument, "subset index out of range");
    auto img = image(i);
    out.insert(out.end(), img.begin(), img.end());
  }
  return ImageSet(indices.size(), size_, channels_, std::move(out),
                  provenance_);
}

ImageSet ImageSet::with_provenance(Provenance p) const {
  ImageSet copy = *this;
  copy.provenance_ = p;
  return copy;
}

std::string ImageSet::fingerprint() const {
  const std::array<std::uint64_t, 3> dims = {count_, size_, channels_};
  auto state = fnv1a64(std::as_bytes(std::span(dims)));
  state = fnv1a64(std::as_bytes(std::span(pixels_)), state);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(state));
  return buf;
}

ImageSet concatenate(std::span<const ImageSet> sets) {
  if (sets.empty()) return {};
  const auto& first = sets.front();
  std::size_t total = 0;
  std::vector<float> pixels;
  for (const auto& s : sets) {
    if (s.empty()) continue;
    if (!first.empty() &&
        (s.size() != first.size() || s.channels() != first.channels())) {
      fail(ErrorKind::kShape, "cannot concatenate image sets of different geometry");
    }
    total += s.count();
    pixels.insert(pixels.end(), s.pixels().begin(), s.pixels().end());
  }
  std::size_t size = first.size(), channels = first.channels();
  for (const auto& s : sets) {
    if (!s.empty()) {
      size = s.size();
      channels = s.channels();
      break;
    }
  }
  return ImageSet(total, size, channels, std::move(pixels), first.provenance());
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// gzread passes uncompressed files through unchanged.
std::vector<unsigned char> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf;
  int n;
  while ((n = gzread(file, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  const bool ok = n == 0;
  gzclose(file);
  if (!ok) fail(ErrorKind::kFormat, "corrupt gzip stream in " + path.string());
  return out;
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::uint32_t read_le32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void write_le32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kIdxUbyteRank3 = 0x00000803;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;
constexpr std::array<char, 4> kLgtMagic = {'L', 'G', 'T', '1'};
constexpr std::size_t kLgtHeader = 4 + 4 * 4 + 1;

ImageSet parse_idx(const std::vector<unsigned char>& bytes,
                   const std::string& name, Provenance provenance) {
  if (bytes.size() < 16) fail(ErrorKind::kLength, name + ": truncated IDX header");
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != kIdxUbyteRank3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), ": bad IDX magic 0x%08x", magic);
    fail(ErrorKind::kFormat, name + buf);
  }
  const std::size_t count = read_be32(bytes.data() + 4);
  const std::size_t rows = read_be32(bytes.data() + 8);
  const std::size_t cols = read_be32(bytes.data() + 12);
  if (rows != cols) fail(ErrorKind::kShape, name + ": non-square IDX images");
  const std::size_t expected = count * rows * cols;
  if (bytes.size() - 16 < expected) {
    fail(ErrorKind::kLength, name + ": IDX payload truncated");
  }
  std::vector<float> pixels(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    pixels[i] = static_cast<float>(bytes[16 + i]) / 255.0f;
  }
  return ImageSet(count, rows, 1, std::move(pixels), provenance);
}

ImageSet parse_cifar(const std::vector<unsigned char>& bytes,
                     const std::string& name, Provenance provenance) {
  if (bytes.size() % kCifarRecord != 0) {
    fail(ErrorKind::kLength, name + ": length " + std::to_string(bytes.size()) +
                                 " is not a multiple of 3073");
  }
  const std::size_t count = bytes.size() / kCifarRecord;
  const std::size_t plane = kCifarSide * kCifarSide;
  std::vector<float> pixels(count * plane * 3);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* rec = bytes.data() + i * kCifarRecord + 1;
    float* out = pixels.data() + i * plane * 3;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        out[p * 3 + c] = static_cast<float>(rec[c * plane + p]) / 255.0f;
      }
    }
  }
  return ImageSet(count, kCifarSide, 3, std::move(pixels), provenance);
}

ImageSet parse_lgt(const std::vector<unsigned char>& bytes,
                   const std::string& name) {
  if (bytes.size() < kLgtHeader) fail(ErrorKind::kLength, name + ": truncated LGT header");
  if (std::memcmp(bytes.data(), "LGT", 3) != 0) {
    fail(ErrorKind::kFormat, name + ": missing LGT magic");
  }
  if (bytes[3] != static_cast<unsigned char>(kLgtMagic[3])) {
    fail(ErrorKind::kVersion, name + ": unsupported LGT version '" +
                                  std::string(1, static_cast<char>(bytes[3])) + "'");
  }
  const std::size_t count = read_le32(bytes.data() + 4);
  const std::size_t height = read_le32(bytes.data() + 8);
  const std::size_t width = read_le32(bytes.data() + 12);
  const std::size_t channels = read_le32(bytes.data() + 16);
  const unsigned char flag = bytes[20];
  if (height != width) fail(ErrorKind::kShape, name + ": non-square LGT images");
  if (flag > 1) fail(ErrorKind::kFormat, name + ": bad provenance flag");
  const std::size_t values = count * height * width * channels;
  if (bytes.size() - kLgtHeader != values * 4) {
    fail(ErrorKind::kLength, name + ": header declares " + std::to_string(values) +
                                 " floats but payload holds " +
                                 std::to_string((bytes.size() - kLgtHeader) / 4));
  }
  std::vector<float> pixels(values);
  for (std::size_t i = 0; i < values; ++i) {
    pixels[i] = std::bit_cast<float>(read_le32(bytes.data() + kLgtHeader + 4 * i));
  }
  return ImageSet(count, height, channels, std::move(pixels),
                  static_cast<Provenance>(flag));
}

}  // namespace

ImageSet load_idx(const std::filesystem::path& path, Provenance provenance) {
  return parse_idx(read_maybe_gzip(path), path.string(), provenance);
}

ImageSet load_cifar_bin(const std::filesystem::path& path,
                        Provenance provenance) {
  return parse_cifar(read_file(path), path.string(), provenance);
}

ImageSet load_raw_tensor(const std::filesystem::path& path) {
  return parse_lgt(read_file(path), path.string());
}

void save_raw_tensor(const ImageSet& images, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(kLgtMagic.data(), kLgtMagic.size());
  write_le32(out, static_cast<std::uint32_t>(images.count()));
  write_le32(out, static_cast<std::uint32_t>(images.size()));
  write_le32(out, static_cast<std::uint32_t>(images.size()));
  write_le32(out, static_cast<std::uint32_t>(images.channels()));
  out.put(static_cast<char>(images.provenance()));
  for (float v : images.pixels()) write_le32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) fail(ErrorKind::kIo, "short write to " + path.string());
}

ImageSet load_image_set(const std::filesystem::path& path,
                        Provenance provenance) {
  const auto bytes = read_maybe_gzip(path);
  if (bytes.size() >= 3 && std::memcmp(bytes.data(), "LGT", 3) == 0) {
    return parse_lgt(bytes, path.string());
  }
  if (bytes.size() >= 4 && read_be32(bytes.data()) == kIdxUbyteRank3) {
    return parse_idx(bytes, path.string(), provenance);
  }
  return parse_cifar(bytes, path.string(), provenance);
}

std::vector<Label> LabeledSplit::train_labels() const {
  std::vector<Label> labels(real_train.count(), 0);
  labels.resize(real_train.count() + generated_train.count(), 1);
  return labels;
}

std::vector<Label> LabeledSplit::test_labels() const {
  std::vector<Label> labels(real_test.count(), 0);
  labels.resize(real_test.count() + generated_test.count(), 1);
  return labels;
}

namespace {

SourceSplit split_source(std::size_t n, double test_fraction,
                         double train_keep_fraction, std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  auto n_test = static_cast<std::size_t>(
      std::floor(test_fraction * static_cast<double>(n) + 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  const std::size_t n_train_all = n - n_test;
  auto n_train = static_cast<std::size_t>(
      std::floor(train_keep_fraction * static_cast<double>(n_train_all) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n_train_all);

  SourceSplit split;
  split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                     perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_train));
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace

LabeledSplit make_labeled_split(const ImageSet& real, const ImageSet& generated,
                                double test_fraction, double real_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::kArgument, "test_fraction must lie in (0, 1)");
  }
  if (!(real_fraction > 0.0 && real_fraction <= 1.0)) {
    fail(ErrorKind::kArgument, "real_fraction must lie in (0, 1]");
  }
  if (real.count() < 2 || generated.count() < 2) {
    fail(ErrorKind::kArgument,
         "both real and generated sources need at least 2 images");
  }
  if (real.size() != generated.size() || real.channels() != generated.channels()) {
    fail(ErrorKind::kShape, "real and generated images differ in geometry");
  }
  LabeledSplit out;
  out.seed = seed;
  out.test_fraction = test_fraction;
  out.real_fraction = real_fraction;
  out.real_indices = split_source(real.count(), test_fraction, real_fraction,
                                  derive_seed(seed, "split.real"));
  out.generated_indices = split_source(generated.count(), test_fraction, 1.0,
                                       derive_seed(seed, "split.generated"));
  out.real_train = real.subset(out.real_indices.train).with_provenance(Provenance::kReal);
  out.real_test = real.subset(out.real_indices.test).with_provenance(Provenance::kReal);
  out.generated_train = generated.subset(out.generated_indices.train)
                            .with_provenance(Provenance::kGenerated);
  out.generated_test = generated.subset(out.generated_indices.test)
                           .with_provenance(Provenance::kGenerated);
  return out;
}

}  // namespace lgsqe

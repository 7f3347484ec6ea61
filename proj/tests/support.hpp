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


// Shared fixtures and independent oracles for the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgsqe/dft.hpp"
#include "lgsqe/image_set.hpp"
#include "lgsqe/rng.hpp"

namespace lgsqe::testing {

using Matrix = std::vector<std::vector<double>>;

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), sorted by descending eigenvalue.
inline std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  std::vector<double> values(n);
  Matrix vectors(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = a[idx[j]][idx[j]];
    for (std::size_t k = 0; k < n; ++k) vectors[k][j] = v[k][idx[j]];
  }
  return {values, vectors};
}

/// Plain covariance of row observations with 1/(n-1) normalization.
inline Matrix covariance_of(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix c(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (auto& row : c)
    for (double& x : row) x /= static_cast<double>(n - 1);
  return c;
}

/// Eigenpairs of the covariance restricted to the complement of the DC
/// direction, formed explicitly and diagonalized by Jacobi rotations.
inline std::pair<std::vector<double>, Matrix> saab_oracle(const Eigen::MatrixXd& rows) {
  std::vector<std::vector<double>> obs(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      obs[static_cast<std::size_t>(i)].push_back(rows(i, j));
    }
  }
  const Matrix c = covariance_of(obs);
  const std::size_t k = c.size();
  // P C P with P = I - 11^T / k.
  Matrix p(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) p[i][j] = (i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(k);
  auto mul = [k](const Matrix& a, const Matrix& b) {
    Matrix r(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t j = 0; j < k; ++j) r[i][j] += a[i][l] * b[l][j];
    return r;
  };
  auto [values, vectors] = jacobi_eigen(mul(mul(p, c), p));
  values.pop_back();  // the DC direction, eigenvalue 0
  for (std::size_t j = 0; j + 1 < k; ++j) {
    std::size_t first = 0;
    while (std::abs(vectors[first][j]) <= 1e-12) ++first;
    if (vectors[first][j] < 0)
      for (std::size_t i = 0; i < k; ++i) vectors[i][j] = -vectors[i][j];
  }
  return {values, vectors};
}

/// Uniform rows mixed by a random matrix, so the spectrum is spread out.
inline Eigen::MatrixXd correlated_rows(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd mix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m * mix + Eigen::MatrixXd::Constant(m.rows(), m.cols(), 0.3);
}

inline double entropy_nats(std::size_t ones, std::size_t n) {
  if (n == 0) return 0.0;
  const double p1 = static_cast<double>(ones) / static_cast<double>(n);
  const double p0 = 1.0 - p1;
  return -(p0 > 0.0 ? p0 * std::log(p0) : 0.0) - (p1 > 0.0 ? p1 * std::log(p1) : 0.0);
}

/// Counts both sides of every candidate threshold from scratch.
inline DftResult dft_oracle(const std::vector<double>& v, const std::vector<Label>& y, std::size_t bins) {
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  std::size_t ones = 0;
  for (Label l : y) ones += l;
  const std::size_t n = v.size();
  DftResult best{entropy_nats(ones, n), lo, lo, hi};
  if (lo == hi) return best;
  best.loss = INFINITY;
  for (std::size_t j = 1; j < bins; ++j) {
    const double t = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bins);
    std::size_t ln = 0, l1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] < t) {
        ++ln;
        l1 += y[i];
      }
    }
    const double loss =
        static_cast<double>(ln) / static_cast<double>(n) * entropy_nats(l1, ln) +
        static_cast<double>(n - ln) / static_cast<double>(n) * entropy_nats(ones - l1, n - ln);
    if (loss < best.loss) {
      best.loss = loss;
      best.threshold = t;
    }
  }
  return best;
}

/// Sweeps every distinct score plus the end points directly, then
/// integrates with the trapezoid rule from recall 0.
inline double pr_auc_oracle(const std::vector<double>& s, const std::vector<Label>& y) {
  std::set<double, std::greater<>> ts(s.begin(), s.end());
  ts.insert(1.0);
  ts.insert(0.0);
  std::size_t pos = 0;
  for (Label l : y) pos += l;
  std::vector<std::pair<double, double>> pts;  // recall, precision
  for (double t : ts) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp)++;
    }
    if (tp + fp == 0) continue;
    pts.emplace_back(static_cast<double>(tp) / static_cast<double>(pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  double area = 0.0, r0 = 0.0, p0 = pts.front().second;
  for (const auto& [r, p] : pts) {
    area += (r - r0) * (p + p0) / 2.0;
    r0 = r;
    p0 = p;
  }
  return area;
}

/// Random images with uniform pixels.
inline ImageSet random_images(std::size_t count, std::size_t size, std::size_t channels,
                              std::uint64_t seed, Provenance p = Provenance::kReal) {
  Rng rng(seed);
  std::vector<float> px(count * size * size * channels);
  for (float& x : px) x = static_cast<float>(rng.uniform());
  return ImageSet(count, size, channels, std::move(px), p);
}

/// Smooth single-channel images: a few Gaussian blobs at random positions.
inline ImageSet blob_images(std::size_t count, std::size_t size, std::uint64_t seed,
                            Provenance p = Provenance::kReal) {
  Rng rng(seed);
  std::vector<float> px(count * size * size, 0.0f);
  for (std::size_t n = 0; n < count; ++n) {
    for (int b = 0; b < 3; ++b) {
      const double cy = rng.uniform() * static_cast<double>(size);
      const double cx = rng.uniform() * static_cast<double>(size);
      const double r = 1.5 + 2.0 * rng.uniform();
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const double d2 = (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy) +
                            (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx);
          float& v = px[(n * size + y) * size + x];
          v = std::min(1.0f, v + static_cast<float>(std::exp(-d2 / (2 * r * r))));
        }
    }
  }
  return ImageSet(count, size, 1, std::move(px), p);
}

/// Copy of `images` with clipped additive Gaussian noise, labelled generated.
inline ImageSet add_noise(const ImageSet& images, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> px(images.pixels().begin(), images.pixels().end());
  for (float& x : px) {
    x = static_cast<float>(std::clamp(static_cast<double>(x) + sigma * rng.normal(), 0.0, 1.0));
  }
  return ImageSet(images.count(), images.size(), images.channels(), std::move(px),
                  Provenance::kGenerated);
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lgsqe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lgsqe::testing

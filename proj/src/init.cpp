// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/init.hpp"

#include <cmath>

namespace recnas {

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::parameter(std::move(shape), std::move(values));
}

Tensor xavier_param(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_param({fan_in, fan_out}, bound, rng);
}

Tensor he_param(Shape shape, std::size_t fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::parameter(std::move(shape), std::move(values));
}

Tensor orthogonal_param(std::size_t rows, std::size_t cols, Rng& rng) {
  // Gram-Schmidt on Gaussian vectors of length max(rows, cols).
  const std::size_t n = std::max(rows, cols);
  const std::size_t m = std::min(rows, cols);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  while (basis.size() < m) {
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      values[r * cols + c] = rows >= cols ? basis[c][r] : basis[r][c];
  return Tensor::parameter({rows, cols}, std::move(values));
}

Tensor zeros_param(Shape shape) { return constant_param(std::move(shape), 0.0); }

Tensor constant_param(Shape shape, double value) {
  std::vector<double> values(shape_numel(shape), value);
  return Tensor::parameter(std::move(shape), std::move(values));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined word.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace recnas

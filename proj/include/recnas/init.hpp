// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Weight initializers: uniform for embeddings and attention, He for
// convolutions, orthogonal for recurrent kernels, Xavier for linear layers.

#pragma once

#include <cstdint>
#include <random>

#include "recnas/tensor.hpp"

namespace recnas {

using Rng = std::mt19937_64;

Tensor uniform_param(Shape shape, double bound, Rng& rng);
Tensor xavier_param(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor he_param(Shape shape, std::size_t fan_in, Rng& rng);
// (rows, cols) with orthonormal columns when rows >= cols, rows otherwise.
Tensor orthogonal_param(std::size_t rows, std::size_t cols, Rng& rng);
Tensor zeros_param(Shape shape);
Tensor constant_param(Shape shape, double value);

// Stream seeding for independent sub-generators derived from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace recnas

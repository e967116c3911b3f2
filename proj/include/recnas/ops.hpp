// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every function records itself on the tape when
// any input requires a gradient and rejects non-finite results.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recnas/tensor.hpp"

namespace recnas::ops {

// Elementwise with NumPy-style broadcasting (shapes aligned on the right).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

// (m,k) x (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);
// (B,m,k) x (B,k,n) -> (B,m,n); with transpose_b, b is (B,n,k).
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);  // exact x * Phi(x)
Tensor swish(const Tensor& a);
Tensor softplus(const Tensor& a);

// Along the last axis.
Tensor softmax(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Reduces and removes `axis`.
Tensor sum_axis(const Tensor& a, std::size_t axis);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& a, Shape shape);

// Row r of the output is the sum of table rows ids[offsets[r] .. offsets[r+1]).
// Empty bags produce zero rows. Backward scatters additively.
Tensor embedding_bag(const Tensor& table, std::span<const std::size_t> offsets,
                     std::span<const std::int64_t> ids);

// x (B,T,C), w (k,C,O), bias (O); stride 1, SAME zero padding, odd k.
Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t dilation);

enum class PoolKind { kAverage, kMax };
// x (B,T,C); mask holds B*T flags. Windows of width k centred on each step
// only see in-range, unmasked positions; a window with none yields 0.
Tensor pool1d_same(const Tensor& x, std::span<const double> mask, PoolKind kind, std::size_t k);

// Mean binary cross-entropy of sigmoid(logits) against labels in {0,1},
// computed in the stable log-sum-exp form.
Tensor bce_with_logits(const Tensor& logits, const Tensor& labels);

}  // namespace recnas::ops

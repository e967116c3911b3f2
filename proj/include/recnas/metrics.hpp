// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ranking and classification metrics. Ranks are 1-based; a candidate ties
// ahead of the target when it has an equal score and a smaller index.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace recnas {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t rank_of(std::span<const double> scores, std::size_t target);

double hr_at_rank(std::size_t rank, std::size_t k);
double ndcg_at_rank(std::size_t rank, std::size_t k);
double hr_at_k(std::span<const double> scores, std::size_t target, std::size_t k);
double ndcg_at_k(std::span<const double> scores, std::size_t target, std::size_t k);

// Mann-Whitney statistic via mid-ranks. Throws MetricError unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const std::int64_t> labels);

// Mean binary cross-entropy of sigmoid(logit).
double log_loss(std::span<const double> logits, std::span<const std::int64_t> labels);

}  // namespace recnas

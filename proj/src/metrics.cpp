// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace recnas {

std::size_t rank_of(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) throw MetricError("target index outside the candidate list");
  const double s = scores[target];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > s || (scores[i] == s && i < target)) ++rank;
  return rank;
}

double hr_at_rank(std::size_t rank, std::size_t k) { return rank <= k ? 1.0 : 0.0; }

double ndcg_at_rank(std::size_t rank, std::size_t k) {
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

double hr_at_k(std::span<const double> scores, std::size_t target, std::size_t k) {
  return hr_at_rank(rank_of(scores, target), k);
}

double ndcg_at_k(std::span<const double> scores, std::size_t target, std::size_t k) {
  return ndcg_at_rank(rank_of(scores, target), k);
}

double auc(std::span<const double> scores, std::span<const std::int64_t> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Positions i..j-1 share the mid-rank (i + 1 + j) / 2.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t p = i; p < j; ++p)
      if (labels[order[p]] != 0) {
        positive_rank_sum += mid;
        ++positives;
      }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw MetricError("auc needs both classes");
  const double np = static_cast<double>(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double log_loss(std::span<const double> logits, std::span<const std::int64_t> labels) {
  if (logits.size() != labels.size() || logits.empty())
    throw MetricError("log_loss: empty or mismatched input");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = labels[i] != 0 ? 1.0 : 0.0;
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace recnas

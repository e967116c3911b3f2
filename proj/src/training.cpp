// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "recnas/data.hpp"

namespace recnas {

std::vector<IdBatch> make_batches(const DatasetSchema& schema, std::span<const Instance> instances,
                                  std::size_t batch_size, std::size_t max_len, Rng* shuffle) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<IdBatch> out;
  if (shuffle == nullptr) {
    for (std::size_t start = 0; start < instances.size(); start += batch_size)
      out.push_back(make_id_batch(schema, instances.subspan(start, std::min(batch_size, instances.size() - start)),
                                  max_len));
    return out;
  }
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), *shuffle);
  std::vector<Instance> chunk;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) chunk.push_back(instances[order[i]]);
    out.push_back(make_id_batch(schema, chunk, max_len));
  }
  return out;
}

void attach_next_item_candidates(std::vector<IdBatch>& batches, std::span<const Instance> instances,
                                 std::size_t num_items, const NegativePlan& plan, Rng& rng) {
  std::size_t row = 0;
  for (auto& batch : batches) {
    batch.positives.assign(batch.size, {});
    batch.negatives.assign(batch.size, {});
    for (std::size_t b = 0; b < batch.size; ++b, ++row) {
      const Instance& inst = instances[row];
      std::unordered_set<std::int64_t> excluded{inst.label};
      if (plan.exclude_history)
        for (const auto& el : inst.behavior) excluded.insert(el[0].begin(), el[0].end());
      batch.positives[b] = {inst.label};
      batch.negatives[b] = sample_negatives(num_items, excluded, plan.count, rng);
    }
  }
}

double optimizer_step(const Tensor& loss, std::vector<Tensor> params, Adam& adam, const char* where) {
  const double value = loss.value()[0];
  if (!std::isfinite(value)) throw NumericError(std::string(where) + ": non-finite loss");
  const auto grads = grad(loss, params);
  for (const auto& g : grads)
    for (double v : g.value())
      if (!std::isfinite(v)) throw NumericError(std::string(where) + ": non-finite gradient");
  adam.step(params, grads);
  return value;
}

}  // namespace recnas

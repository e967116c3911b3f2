// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch streams and the single optimizer step shared by every stage.

#pragma once

#include <span>
#include <vector>

#include "recnas/feature_space.hpp"
#include "recnas/optim.hpp"

namespace recnas {

// Consecutive chunks of `batch_size` instances, in a shuffled order when
// `shuffle` is given.
std::vector<IdBatch> make_batches(const DatasetSchema& schema, std::span<const Instance> instances,
                                  std::size_t batch_size, std::size_t max_len, Rng* shuffle = nullptr);

struct NegativePlan {
  std::size_t count = 5;
  bool exclude_history = true;
};

// Next-item candidates for every row of every batch: the label as the only
// positive and `plan.count` sampled negatives over the first behavior field.
// `instances` must be in batch order.
void attach_next_item_candidates(std::vector<IdBatch>& batches, std::span<const Instance> instances,
                                 std::size_t num_items, const NegativePlan& plan, Rng& rng);

// Backward, finiteness check and one Adam update. Returns the loss value.
// Throws NumericError tagged with `where` on a non-finite loss or gradient.
double optimizer_step(const Tensor& loss, std::vector<Tensor> params, Adam& adam, const char* where);

}  // namespace recnas

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task heads over a hidden representation h^c, batch losses and the
// evaluation protocols for CTR and next-item tasks.

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/feature_space.hpp"
#include "recnas/head.hpp"

namespace recnas {

struct Metrics {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
  double auc = kUnset;
  double log_loss = kUnset;
  double hr1 = kUnset, hr5 = kUnset, hr10 = kUnset;
  double ndcg5 = kUnset, ndcg10 = kUnset;

  // NDCG@5 for next-item, AUC for CTR.
  double fitness(Task task) const;
  nlohmann::json to_json(Task task) const;
};

struct HeadSpec {
  Task task = Task::kCtr;
  std::string item_table;  // retrieval candidates come from this embedding table
};

HeadSpec head_for(const DatasetSchema& schema, Task task);
void add_head(ParamStore& store, const HeadSpec& head, std::size_t hidden_width, std::size_t item_width,
              Rng& rng);
std::vector<std::string> head_names(const HeadSpec& head);

// CTR: logits (B). Next-item: (B, per_row) scores of `candidates`.
Tensor head_forward(const ParamStore& store, const HeadSpec& head, const Tensor& hidden,
                    std::span<const std::int64_t> candidates, std::size_t per_row);

// CTR: mean log loss. Next-item: sampled binary cross-entropy over the
// batch's attached positives and negatives.
Tensor head_loss(const ParamStore& store, const HeadSpec& head, const Tensor& hidden, const IdBatch& batch);

using HiddenFn = std::function<Tensor(const Batch& batch, bool training)>;

// Next-item candidates per row are the positives and negatives sorted by
// item id, so equal scores rank by id.
Metrics evaluate(const ParamStore& store, const DatasetSchema& schema, const HeadSpec& head,
                 const HiddenFn& hidden, std::span<const IdBatch> batches);

}  // namespace recnas

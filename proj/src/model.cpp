// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recnas/metrics.hpp"

namespace recnas {

using nlohmann::json;

double Metrics::fitness(Task task) const { return task == Task::kCtr ? auc : ndcg5; }

json Metrics::to_json(Task task) const {
  json out{{"count", count}};
  if (task == Task::kCtr) {
    out["auc"] = auc;
    out["log_loss"] = log_loss;
  } else {
    out["hr@1"] = hr1;
    out["hr@5"] = hr5;
    out["hr@10"] = hr10;
    out["ndcg@5"] = ndcg5;
    out["ndcg@10"] = ndcg10;
  }
  return out;
}

HeadSpec head_for(const DatasetSchema& schema, Task task) {
  HeadSpec head{task, {}};
  if (task == Task::kNextItem) {
    if (schema.num_behavior() == 0) throw SchemaError("next-item prediction needs a behavior field");
    head.item_table = embedding_name(schema.behavior()[0]);
  }
  return head;
}

void add_head(ParamStore& store, const HeadSpec& head, std::size_t hidden_width, std::size_t item_width,
              Rng& rng) {
  if (head.task == Task::kCtr) {
    add_ctr_head(store, "head", hidden_width, rng);
  } else {
    add_retrieval_head(store, "head", hidden_width, item_width, rng);
  }
}

std::vector<std::string> head_names(const HeadSpec& head) {
  return {head.task == Task::kCtr ? "head.w" : "head.W"};
}

Tensor head_forward(const ParamStore& store, const HeadSpec& head, const Tensor& hidden,
                    std::span<const std::int64_t> candidates, std::size_t per_row) {
  if (head.task == Task::kCtr) return ctr_logits(store, "head", hidden);
  return retrieval_scores(store, "head", store.at(head.item_table), hidden, candidates, per_row);
}

Tensor head_loss(const ParamStore& store, const HeadSpec& head, const Tensor& hidden, const IdBatch& batch) {
  if (head.task == Task::kCtr) return loss_ctr(head_forward(store, head, hidden, {}, 0), batch.labels);
  if (batch.positives.size() != batch.size || batch.negatives.size() != batch.size)
    throw std::invalid_argument("next-item batch has no attached candidates");
  std::size_t per_row = 0;
  for (std::size_t b = 0; b < batch.size; ++b)
    per_row = std::max(per_row, batch.positives[b].size() + batch.negatives[b].size());
  std::vector<std::int64_t> ids(batch.size * per_row, 0);
  std::vector<double> roles(batch.size * per_row, 0.0);
  for (std::size_t b = 0; b < batch.size; ++b) {
    std::size_t c = b * per_row;
    for (auto id : batch.positives[b]) {
      ids[c] = id;
      roles[c++] = 1.0;
    }
    for (auto id : batch.negatives[b]) {
      ids[c] = id;
      roles[c++] = -1.0;
    }
  }
  return loss_nextitem(head_forward(store, head, hidden, ids, per_row), roles);
}

Metrics evaluate(const ParamStore& store, const DatasetSchema& schema, const HeadSpec& head,
                 const HiddenFn& hidden, std::span<const IdBatch> batches) {
  NoGradGuard no_grad;
  Metrics m;
  if (head.task == Task::kCtr) {
    std::vector<double> scores;
    std::vector<std::int64_t> labels;
    for (const auto& ids : batches) {
      const Tensor logits = head_forward(store, head, hidden(embed_batch(store, schema, ids), false), {}, 0);
      scores.insert(scores.end(), logits.value().begin(), logits.value().end());
      labels.insert(labels.end(), ids.labels.begin(), ids.labels.end());
    }
    m.count = scores.size();
    m.auc = auc(scores, labels);
    m.log_loss = recnas::log_loss(scores, labels);
    return m;
  }
  double hr1 = 0, hr5 = 0, hr10 = 0, n5 = 0, n10 = 0;
  for (const auto& ids : batches) {
    if (ids.positives.size() != ids.size) throw std::invalid_argument("evaluation batch has no candidates");
    std::vector<std::vector<std::int64_t>> rows(ids.size);
    std::size_t per_row = 0;
    for (std::size_t b = 0; b < ids.size; ++b) {
      rows[b] = ids.positives[b];
      rows[b].insert(rows[b].end(), ids.negatives[b].begin(), ids.negatives[b].end());
      std::sort(rows[b].begin(), rows[b].end());
      per_row = std::max(per_row, rows[b].size());
    }
    std::vector<std::int64_t> flat(ids.size * per_row, 0);
    for (std::size_t b = 0; b < ids.size; ++b) std::copy(rows[b].begin(), rows[b].end(), flat.begin() + b * per_row);
    const Tensor scores = head_forward(store, head, hidden(embed_batch(store, schema, ids), false), flat, per_row);
    for (std::size_t b = 0; b < ids.size; ++b) {
      const auto first = scores.value().begin() + static_cast<std::ptrdiff_t>(b * per_row);
      const std::vector<double> row(first, first + static_cast<std::ptrdiff_t>(rows[b].size()));
      const auto target = static_cast<std::size_t>(
          std::lower_bound(rows[b].begin(), rows[b].end(), ids.positives[b][0]) - rows[b].begin());
      const std::size_t rank = rank_of(row, target);
      hr1 += hr_at_rank(rank, 1);
      hr5 += hr_at_rank(rank, 5);
      hr10 += hr_at_rank(rank, 10);
      n5 += ndcg_at_rank(rank, 5);
      n10 += ndcg_at_rank(rank, 10);
      ++m.count;
    }
  }
  if (m.count == 0) throw std::invalid_argument("empty evaluation stream");
  const double n = static_cast<double>(m.count);
  m.hr1 = hr1 / n;
  m.hr5 = hr5 / n;
  m.hr10 = hr10 / n;
  m.ndcg5 = n5 / n;
  m.ndcg10 = n10 / n;
  return m;
}

}  // namespace recnas

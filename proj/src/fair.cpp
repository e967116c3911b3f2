// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/fair.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace recnas {

FairQueue::FairQueue(std::size_t candidates, std::uint64_t seed)
    : candidates_(candidates), rng_(seed), order_(candidates), cursor_(candidates), counts_(candidates, 0) {
  if (candidates == 0) throw std::invalid_argument("a choice point needs at least one candidate");
  std::iota(order_.begin(), order_.end(), 0);
}

std::size_t FairQueue::next() {
  if (cursor_ == candidates_) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t pick = order_[cursor_++];
  ++counts_[pick];
  return pick;
}

FairSchedule::FairSchedule(const std::vector<std::size_t>& choice_counts, std::uint64_t seed) {
  queues_.reserve(choice_counts.size());
  for (std::size_t i = 0; i < choice_counts.size(); ++i) queues_.emplace_back(choice_counts[i], mix_seed(seed, i));
}

std::vector<std::size_t> FairSchedule::next() {
  std::vector<std::size_t> out;
  out.reserve(queues_.size());
  for (auto& q : queues_) out.push_back(q.next());
  return out;
}

}  // namespace recnas

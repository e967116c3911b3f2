// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Strict-fairness sampling: each choice point draws from a shuffled queue of
// its candidates that is refilled on exhaustion, so every window of m
// consecutive draws contains each of the m candidates exactly once.

#pragma once

#include <cstdint>
#include <vector>

#include "recnas/init.hpp"

namespace recnas {

class FairQueue {
 public:
  FairQueue(std::size_t candidates, std::uint64_t seed);

  std::size_t next();
  std::size_t size() const { return candidates_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::size_t candidates_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
  std::vector<std::size_t> counts_;
};

class FairSchedule {
 public:
  FairSchedule(const std::vector<std::size_t>& choice_counts, std::uint64_t seed);

  // One candidate index per choice point.
  std::vector<std::size_t> next();
  std::size_t num_points() const { return queues_.size(); }
  const FairQueue& point(std::size_t i) const { return queues_.at(i); }

 private:
  std::vector<FairQueue> queues_;
};

}  // namespace recnas

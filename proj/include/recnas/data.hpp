// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Splitting, negative sampling and synthetic datasets with planted signal.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "recnas/feature_space.hpp"
#include "recnas/init.hpp"

namespace recnas {

using ItemSequence = std::vector<std::int64_t>;

// History plus the held-out next item of one user.
struct SequenceExample {
  std::size_t user = 0;
  ItemSequence history;
  std::int64_t target = 0;
};

struct SequenceSplit {
  std::vector<std::size_t> users;    // indices of users kept by the filter
  std::vector<ItemSequence> train;   // per kept user, all but the last two items
  std::vector<SequenceExample> validation;
  std::vector<SequenceExample> test;
};

// Drops sequences shorter than `min_length` (at least 3), then holds out the
// last item for test and the one before it for validation.
SequenceSplit leave_one_out_split(std::span<const ItemSequence> sequences, std::size_t min_length = 3);

// `n` distinct ids from `universe` minus `exclusions`, in sampling order.
std::vector<std::int64_t> sample_negatives(std::span<const std::int64_t> universe,
                                           const std::unordered_set<std::int64_t>& exclusions,
                                           std::size_t n, Rng& rng);
// Universe {0, ..., num_items - 1}.
std::vector<std::int64_t> sample_negatives(std::size_t num_items,
                                           const std::unordered_set<std::int64_t>& exclusions,
                                           std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Planted-interaction CTR data: fields i.i.d. uniform, label ~
// Bernoulli(sigmoid(beta * g(x_a, x_b) + noise)) for a random +-1 table g with
// zero row and column sums, so no single field carries signal.

struct CtrSyntheticSpec {
  std::size_t train_rows = 50000;
  std::size_t validation_rows = 5000;
  std::size_t test_rows = 5000;
  std::size_t fields = 10;
  std::size_t cardinality = 8;  // even
  double target_auc = 0.80;     // Bayes AUC the generator solves beta for
  double beta = -1.0;           // used as given when >= 0
  double noise_sd = 0.0;        // Gaussian logit noise
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static CtrSyntheticSpec from_json(const nlohmann::json& j);
};

struct CtrSynthetic {
  DatasetSchema schema;
  std::vector<Instance> train, validation, test;
  std::pair<std::size_t, std::size_t> planted;  // field indices, a < b
  std::vector<std::vector<int>> table;         // g, cardinality x cardinality
  double beta = 0.0;
  double bayes_auc = 0.0;  // analytic, from the generator's own model
};

// Random +-1 matrix with zero row and column sums.
std::vector<std::vector<int>> balanced_sign_table(std::size_t n, Rng& rng);
// Bayes AUC of the planted rule: E[sigmoid(beta + eps)], eps ~ N(0, sd^2).
double planted_bayes_auc(double beta, double noise_sd);
double solve_beta(double target_auc, double noise_sd);

CtrSynthetic generate_planted_ctr(const CtrSyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Markov item sequences: each next item is a fixed successor of the current
// one with probability 1 - noise, uniform otherwise.

struct MarkovSyntheticSpec {
  std::size_t users = 5000;
  std::size_t items = 200;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  double noise = 0.2;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static MarkovSyntheticSpec from_json(const nlohmann::json& j);
};

struct MarkovSynthetic {
  DatasetSchema schema;  // one behavior field "item"
  std::vector<ItemSequence> sequences;
  std::vector<std::int64_t> successor;
  double bayes_hr1 = 0.0;  // best achievable next-item accuracy
};

MarkovSynthetic generate_markov(const MarkovSyntheticSpec& spec);

// Next-item records: behavior = all but the last item, label = last item.
std::vector<Instance> sequences_to_instances(std::span<const ItemSequence> sequences);
std::vector<ItemSequence> instances_to_sequences(std::span<const Instance> instances);

// Plug-in mutual information (nats) between a discrete key and binary labels.
double empirical_mutual_information(std::span<const std::size_t> keys,
                                    std::span<const std::int64_t> labels);

}  // namespace recnas

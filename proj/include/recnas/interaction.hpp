// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hadamard feature interactions over non-sequential fields and the beam
// evolution that grows them one field per round.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "recnas/activation.hpp"
#include "recnas/feature_space.hpp"
#include "recnas/optim.hpp"

namespace recnas {

// Sorted, distinct non-sequential field indices.
class Interaction {
 public:
  Interaction() = default;
  // Canonicalizes; throws std::invalid_argument on an empty or repeated set.
  explicit Interaction(std::vector<std::size_t> fields);

  const std::vector<std::size_t>& fields() const { return fields_; }
  std::size_t order() const { return fields_.size(); }
  bool contains(std::size_t field) const;
  // "0_3_7"; used in parameter names.
  std::string key() const;
  std::string name(const DatasetSchema& schema) const;  // "F00*F03"

  auto operator<=>(const Interaction&) const = default;

 private:
  std::vector<std::size_t> fields_;
};

// e_{i1} * ... * e_{ir} over (B, K) field embeddings.
Tensor hadamard(std::span<const Tensor> embeddings, const Interaction& interaction);

// Survivors, then every survivor crossed with each field it lacks, without
// duplicates, in first-seen order.
std::vector<Interaction> expand_beam(std::span<const Interaction> survivors, std::size_t num_fields);

std::vector<Interaction> order_one(std::size_t num_fields);

nlohmann::json interactions_to_json(const DatasetSchema& schema, std::span<const Interaction> list);
std::vector<Interaction> interactions_from_json(const DatasetSchema& schema, const nlohmann::json& j);

struct ScoredInteraction {
  Interaction interaction;
  double fitness = 0.0;
};

struct InteractionSearchConfig {
  std::size_t width = 8;
  std::vector<std::size_t> hidden{64, 32};
  Activation activation = Activation::kReLU;
  std::size_t rounds = 4;
  std::size_t beam = 50;     // k
  std::size_t keep = 15;     // k'
  std::size_t epochs_per_round = 1;
  std::size_t batch_size = 256;
  std::size_t validation_batches = 0;  // 0 uses the whole validation stream
  double lr = 1e-2;
  std::uint64_t seed = 1;
};

// Pre-defined MLP over e^a whose first layer adds the projection of a
// single active interaction: h_1 = act(W_e concat(e^a) + W_p(i) p_i + b).
class InteractionSupernet {
 public:
  InteractionSupernet(const DatasetSchema& schema, const InteractionSearchConfig& config);

  const DatasetSchema& schema() const { return schema_; }
  const InteractionSearchConfig& config() const { return config_; }
  const ParamStore& params() const { return store_; }
  ParamStore& params() { return store_; }

  // Adds W_p for candidates not seen before; existing ones are inherited.
  void ensure(std::span<const Interaction> candidates);
  std::string projection_name(const Interaction& interaction) const;

  // First hidden layer pre-activation.
  Tensor first_layer(const Batch& batch, const Interaction& candidate) const;
  // CTR logits (B).
  Tensor forward(const IdBatch& batch, const Interaction& candidate) const;

  // One pass over `train` per epoch; each step trains the candidate drawn
  // from a fair queue. Returns the mean training loss of the last epoch.
  double train(std::span<const Interaction> candidates, std::span<const Instance> train, std::size_t epochs);
  // Validation AUC per candidate over fixed batches.
  std::vector<double> score(std::span<const Interaction> candidates, std::span<const IdBatch> validation) const;

  // Per-candidate training step counts since construction, keyed by key().
  std::size_t steps_for(const Interaction& interaction) const;

 private:
  std::vector<std::string> shared_names() const;

  DatasetSchema schema_;
  InteractionSearchConfig config_;
  ParamStore store_;
  Adam adam_;
  Rng rng_;
  std::size_t round_ = 0;
  std::unordered_map<std::string, std::size_t> steps_;
};

struct EvolutionRound {
  std::vector<Interaction> pool;
  std::vector<double> fitness;  // aligned with pool
  std::vector<ScoredInteraction> beam;
};

struct EvolutionResult {
  std::vector<ScoredInteraction> selected;  // order >= 2, top k'
  std::vector<EvolutionRound> rounds;
};

// Validation batches: a seeded subset of the stream when
// config.validation_batches > 0.
std::vector<IdBatch> validation_stream(const DatasetSchema& schema, std::span<const Instance> validation,
                                       const InteractionSearchConfig& config);

EvolutionResult evolve(InteractionSupernet& supernet, std::span<const Instance> train,
                       std::span<const Instance> validation, const InteractionSearchConfig& config);
EvolutionResult evolve(const DatasetSchema& schema, std::span<const Instance> train,
                       std::span<const Instance> validation, const InteractionSearchConfig& config);

nlohmann::json evolution_to_json(const DatasetSchema& schema, const EvolutionResult& result);

}  // namespace recnas

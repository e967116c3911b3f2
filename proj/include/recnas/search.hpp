// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// The three search steps: one-shot training with fair single-path sampling,
// random search with inherited weights and fine-tuning, for both the
// behavior-block space (step 1) and the aggregation MLP space (step 3), plus
// the interaction evolution (step 2) and the end-to-end pipeline.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/behavior.hpp"
#include "recnas/data.hpp"
#include "recnas/head.hpp"
#include "recnas/interaction.hpp"
#include "recnas/model.hpp"

namespace recnas {

struct SearchConfig {
  Task task = Task::kCtr;
  std::size_t width = 16;  // K
  std::size_t batch_size = 128;
  std::size_t max_len = 20;
  std::uint64_t seed = 1;

  std::size_t validation_batches = 4;  // fixed fitness subset; 0 uses all
  std::size_t eval_negatives = 100;
  std::size_t train_negatives = 5;
  bool exclude_history = true;

  bool run_blocks = true;
  bool run_interactions = true;
  bool run_mlp = true;

  // Step 1.
  std::size_t num_blocks = 3;             // L_b
  std::vector<std::string> layer_set;     // empty: every candidate
  std::vector<std::size_t> base_hidden{200, 80};
  std::size_t oneshot_epochs = 50;        // upper bound; early stop applies
  std::size_t patience = 3;
  std::size_t curve_architectures = 8;    // sampled children averaged per epoch
  double lr_oneshot = 1e-3;
  std::size_t num_samples = 2000;
  std::size_t top_n = 5;
  std::size_t finetune_epochs = 3;
  double lr_finetune = 3e-4;

  // Step 2.
  std::size_t rounds = 4;
  std::size_t beam = 50;  // k
  std::size_t keep = 15;  // k'
  std::size_t interaction_epochs = 1;
  std::size_t interaction_batch_size = 256;
  std::vector<std::size_t> interaction_hidden{64, 32};
  Activation interaction_activation = Activation::kReLU;
  double lr_interaction = 1e-2;

  // Step 3.
  std::size_t mlp_layers = 3;  // L_c
  std::size_t mlp_epochs = 50;
  bool mlp_uses_step1_blocks = false;  // default: attention-pooling shortcut

  InteractionSearchConfig interaction_config() const;
  BehaviorSpace behavior_space(bool has_target) const;
};

struct Dataset {
  DatasetSchema schema;
  std::vector<Instance> train, validation, test;

  bool has_target() const;
  std::size_t num_items() const;  // cardinality of the first behavior field
};

// Leave-one-out next-item dataset. With `all_prefixes` every training prefix
// of length >= 2 becomes its own example.
Dataset sequence_dataset(const DatasetSchema& schema, std::span<const ItemSequence> sequences,
                         bool all_prefixes, std::size_t min_length = 3);

struct EvalStreams {
  std::vector<IdBatch> fitness;     // fixed seeded subset of validation
  std::vector<IdBatch> validation;  // all of validation
  std::vector<IdBatch> test;
};

EvalStreams make_eval_streams(const Dataset& data, const SearchConfig& config);
// One shuffled pass over train, with sampled negatives for next-item tasks.
std::vector<IdBatch> train_epoch(const Dataset& data, const SearchConfig& config, Rng& rng);

// Candidate index per choice point.
using Choice = std::vector<std::size_t>;

// A weight-sharing supernet seen through its choice points.
class OneShotSpace {
 public:
  virtual ~OneShotSpace() = default;

  virtual const DatasetSchema& schema() const = 0;
  virtual const HeadSpec& head() const = 0;
  virtual ParamStore& params() = 0;
  virtual const ParamStore& params() const = 0;

  virtual std::vector<std::size_t> choice_counts() const = 0;
  // Maps equivalent choices (e.g. every Zero block) to one representative.
  virtual Choice canonical(const Choice& choice) const = 0;
  // Uniform over distinct architectures.
  virtual Choice sample(Rng& rng) const = 0;
  virtual std::optional<std::vector<Choice>> enumerate(std::uint64_t limit) const = 0;
  virtual nlohmann::json describe(const Choice& choice) const = 0;
  virtual std::vector<std::string> param_names(const Choice& choice) const = 0;
  virtual Tensor hidden(const ParamStore& store, const Choice& choice, const Batch& batch,
                        bool training) const = 0;
};

// Step 1: behavior blocks + compression, then a fixed ReLU MLP over
// [e^a, h^b], then the task head.
class BlockSpace : public OneShotSpace {
 public:
  BlockSpace(const DatasetSchema& schema, const SearchConfig& config, bool has_target);

  const DatasetSchema& schema() const override { return schema_; }
  const HeadSpec& head() const override { return head_; }
  ParamStore& params() override { return store_; }
  const ParamStore& params() const override { return store_; }
  const BehaviorConfig& behavior() const { return behavior_; }

  std::vector<std::size_t> choice_counts() const override;
  Choice canonical(const Choice& choice) const override;
  Choice sample(Rng& rng) const override;
  std::optional<std::vector<Choice>> enumerate(std::uint64_t limit) const override;
  nlohmann::json describe(const Choice& choice) const override;
  std::vector<std::string> param_names(const Choice& choice) const override;
  Tensor hidden(const ParamStore& store, const Choice& choice, const Batch& batch, bool training) const override;

  BlockArchitecture architecture(const Choice& choice) const;
  Choice choice_of(const BlockArchitecture& arch) const;

 private:
  DatasetSchema schema_;
  BehaviorConfig behavior_;
  HeadSpec head_;
  std::size_t base_layers_;
  ParamStore store_;
};

// Step 3: h_0 = [e^a, p^a, h^b] through a sliced MLP bank, the SE summary of
// embeddings and interactions, then the head over [h_L (zero padded to K_0),
// h^se].
class MlpSpace : public OneShotSpace {
 public:
  // `blocks` empty selects the attention-pooling shortcut (compression over
  // raw behavior embeddings). `inherit` seeds matching parameters.
  MlpSpace(const DatasetSchema& schema, const SearchConfig& config, bool has_target,
           std::vector<Interaction> interactions, std::optional<BlockArchitecture> blocks,
           const ParamStore* inherit);

  const DatasetSchema& schema() const override { return schema_; }
  const HeadSpec& head() const override { return head_; }
  ParamStore& params() override { return store_; }
  const ParamStore& params() const override { return store_; }
  std::size_t input_width() const { return input_width_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }
  bool uses_se() const { return se_rows_ > 0; }

  std::vector<std::size_t> choice_counts() const override;
  Choice canonical(const Choice& choice) const override { return choice; }
  Choice sample(Rng& rng) const override;
  std::optional<std::vector<Choice>> enumerate(std::uint64_t limit) const override;
  nlohmann::json describe(const Choice& choice) const override;
  std::vector<std::string> param_names(const Choice& choice) const override;
  Tensor hidden(const ParamStore& store, const Choice& choice, const Batch& batch, bool training) const override;

  MlpSpec spec(const Choice& choice) const;
  Choice choice_of(const MlpSpec& spec) const;

 private:
  DatasetSchema schema_;
  std::size_t width_;
  std::size_t layers_;
  std::vector<Interaction> interactions_;
  std::optional<BehaviorConfig> behavior_;
  BlockArchitecture blocks_;
  HeadSpec head_;
  std::size_t input_width_ = 0;
  std::size_t se_rows_ = 0;
  std::vector<std::vector<std::size_t>> tuples_;
  std::vector<Activation> acts_;
  ParamStore store_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double fitness = 0.0;
};

struct OneShotResult {
  std::vector<EpochRecord> curve;
  std::size_t steps = 0;
  bool early_stopped = false;
  // Per choice point, activation count of each candidate.
  std::vector<std::vector<std::size_t>> activations;
};

// Each step trains the single path drawn from a fair schedule with one
// optimizer update; the per-epoch fitness is the mean over a fixed sample of
// children. Stops after `config.patience` epochs without improvement.
OneShotResult train_oneshot(OneShotSpace& space, const Dataset& data, const EvalStreams& streams,
                            const SearchConfig& config, std::size_t max_epochs);

struct CandidateResult {
  Choice choice;
  nlohmann::json descriptor;
  double fitness = 0.0;
  std::size_t rank = 0;  // 1-based
};

Metrics evaluate_choice(const OneShotSpace& space, const ParamStore& store, const Choice& choice,
                        std::span<const IdBatch> batches);

// Scores `config.num_samples` distinct architectures (all of them when the
// space is smaller) with inherited weights; returns the best `config.top_n`.
std::vector<CandidateResult> random_search(const OneShotSpace& space, std::span<const IdBatch> fitness,
                                           const SearchConfig& config);

struct DerivedModel {
  Choice choice;
  nlohmann::json descriptor;
  ParamStore params;
  Metrics inherited;   // validation, before any training
  Metrics validation;  // validation of the kept weights
  Metrics test;
  std::vector<EpochRecord> curve;
};

// Copies the child's weights out of the supernet and trains them alone,
// keeping the weights of the best validation epoch (epoch 0 included).
DerivedModel finetune(const OneShotSpace& space, const Choice& choice, const Dataset& data,
                      const EvalStreams& streams, const SearchConfig& config, std::size_t epochs, double lr);

// Item-frequency ranking over the training split.
Metrics popularity_baseline(const Dataset& data, std::span<const IdBatch> batches);

struct PipelineResult {
  std::optional<BlockArchitecture> blocks;
  std::vector<CandidateResult> block_candidates;
  std::optional<OneShotResult> block_training;
  std::optional<EvolutionResult> interactions;
  std::vector<Interaction> selected_interactions;
  std::optional<MlpSpec> mlp;
  std::size_t mlp_input_width = 0;
  std::vector<CandidateResult> mlp_candidates;
  std::optional<OneShotResult> mlp_training;
  nlohmann::json final_descriptor;
  Metrics validation;
  Metrics test;
  std::optional<Metrics> popularity;
  ParamStore final_params;

  nlohmann::json to_json(const DatasetSchema& schema, Task task) const;
};

// Winners carried over from an earlier run; a given value replaces its step.
struct PipelineInputs {
  std::optional<std::vector<Interaction>> interactions;
  std::optional<BlockArchitecture> blocks;
  std::optional<ParamStore> block_params;  // weights of the given blocks' model
};

PipelineResult run_pipeline(const Dataset& data, const SearchConfig& config, const PipelineInputs& given = {});

}  // namespace recnas

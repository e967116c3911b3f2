// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/interaction.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "recnas/fair.hpp"
#include "recnas/head.hpp"
#include "recnas/metrics.hpp"
#include "recnas/ops.hpp"
#include "recnas/training.hpp"

namespace recnas {

using nlohmann::json;

Interaction::Interaction(std::vector<std::size_t> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw std::invalid_argument("an interaction needs at least one field");
  std::sort(fields_.begin(), fields_.end());
  if (std::adjacent_find(fields_.begin(), fields_.end()) != fields_.end())
    throw std::invalid_argument("interaction repeats a field");
}

bool Interaction::contains(std::size_t field) const {
  return std::binary_search(fields_.begin(), fields_.end(), field);
}

std::string Interaction::key() const {
  std::string out;
  for (std::size_t i = 0; i < fields_.size(); ++i) out += (i ? "_" : "") + std::to_string(fields_[i]);
  return out;
}

std::string Interaction::name(const DatasetSchema& schema) const {
  std::string out;
  for (std::size_t i = 0; i < fields_.size(); ++i) out += (i ? "*" : "") + schema.non_sequential().at(fields_[i]).name;
  return out;
}

Tensor hadamard(std::span<const Tensor> embeddings, const Interaction& interaction) {
  if (interaction.order() == 0) throw std::invalid_argument("empty interaction");
  for (auto f : interaction.fields())
    if (f >= embeddings.size())
      throw std::out_of_range("interaction field " + std::to_string(f) + " out of range");
  Tensor out = embeddings[interaction.fields()[0]];
  for (std::size_t i = 1; i < interaction.order(); ++i) out = ops::mul(out, embeddings[interaction.fields()[i]]);
  return out;
}

std::vector<Interaction> expand_beam(std::span<const Interaction> survivors, std::size_t num_fields) {
  std::vector<Interaction> out;
  std::set<Interaction> seen;
  auto push = [&](const Interaction& i) {
    if (seen.insert(i).second) out.push_back(i);
  };
  for (const auto& s : survivors) push(s);
  for (const auto& s : survivors) {
    for (std::size_t f = 0; f < num_fields; ++f) {
      if (s.contains(f)) continue;
      auto fields = s.fields();
      fields.push_back(f);
      push(Interaction(std::move(fields)));
    }
  }
  return out;
}

std::vector<Interaction> order_one(std::size_t num_fields) {
  std::vector<Interaction> out;
  for (std::size_t f = 0; f < num_fields; ++f) out.emplace_back(std::vector<std::size_t>{f});
  return out;
}

json interactions_to_json(const DatasetSchema& schema, std::span<const Interaction> list) {
  json out = json::array();
  for (const auto& i : list) {
    json names = json::array();
    for (auto f : i.fields()) names.push_back(schema.non_sequential().at(f).name);
    out.push_back(names);
  }
  return out;
}

std::vector<Interaction> interactions_from_json(const DatasetSchema& schema, const json& j) {
  if (!j.is_array()) throw std::invalid_argument("interaction list must be a JSON array");
  std::vector<Interaction> out;
  for (const auto& entry : j) {
    std::vector<std::size_t> fields;
    for (const auto& name : entry) fields.push_back(schema.non_sequential_index(name.get<std::string>()));
    out.emplace_back(std::move(fields));
  }
  return out;
}

InteractionSupernet::InteractionSupernet(const DatasetSchema& schema, const InteractionSearchConfig& config)
    : schema_(schema), config_(config), adam_(AdamConfig{.lr = config.lr}), rng_(mix_seed(config.seed, 0x1A)) {
  if (schema.num_non_sequential() == 0) throw std::invalid_argument("interaction search needs non-sequential fields");
  if (config.hidden.empty()) throw std::invalid_argument("interaction supernet needs a hidden layer");
  add_embedding_tables(store_, schema, config.width, rng_);
  const std::size_t n = schema.num_non_sequential();
  store_.add("ix.We", xavier_param(n * config.width, config.hidden[0], rng_));
  store_.add("ix.b0", zeros_param({config.hidden[0]}));
  const std::vector<std::size_t> rest(config.hidden.begin() + 1, config.hidden.end());
  add_dense_mlp(store_, "ix.mlp", config.hidden[0], rest, rng_);
  add_ctr_head(store_, "ix.ctr", config.hidden.back(), rng_);
}

std::string InteractionSupernet::projection_name(const Interaction& interaction) const {
  return "ix.Wp." + interaction.key();
}

void InteractionSupernet::ensure(std::span<const Interaction> candidates) {
  for (const auto& c : candidates) {
    for (auto f : c.fields())
      if (f >= schema_.num_non_sequential()) throw std::out_of_range("interaction field out of range");
    const std::string name = projection_name(c);
    if (!store_.contains(name)) store_.add(name, xavier_param(config_.width, config_.hidden[0], rng_));
  }
}

std::vector<std::string> InteractionSupernet::shared_names() const {
  std::vector<std::string> names;
  for (const auto& f : schema_.non_sequential()) names.push_back(embedding_name(f));
  names.push_back("ix.We");
  names.push_back("ix.b0");
  for (const auto& n : dense_mlp_names("ix.mlp", config_.hidden.size() - 1)) names.push_back(n);
  names.push_back("ix.ctr.w");
  return names;
}

Tensor InteractionSupernet::first_layer(const Batch& batch, const Interaction& candidate) const {
  const Tensor e = ops::concat(batch.non_seq, 1);
  const Tensor base = ops::matmul(e, store_.at("ix.We"));
  const Tensor p = hadamard(batch.non_seq, candidate);
  return ops::add(ops::add(base, ops::matmul(p, store_.at(projection_name(candidate)))), store_.at("ix.b0"));
}

Tensor InteractionSupernet::forward(const IdBatch& ids, const Interaction& candidate) const {
  const Batch batch = embed_batch(store_, schema_, ids);
  const Tensor h1 = activation_apply(config_.activation, first_layer(batch, candidate));
  const Tensor h = dense_mlp_forward(store_, "ix.mlp", config_.hidden.size() - 1, config_.activation, h1);
  return ctr_logits(store_, "ix.ctr", h);
}

double InteractionSupernet::train(std::span<const Interaction> candidates, std::span<const Instance> train,
                                  std::size_t epochs) {
  if (candidates.empty()) throw std::invalid_argument("no interaction candidates to train");
  ensure(candidates);
  FairQueue queue(candidates.size(), mix_seed(config_.seed, 0x1B00 + round_++));
  const auto shared = shared_names();
  double last_epoch = 0.0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto batches = make_batches(schema_, train, config_.batch_size, 1, &rng_);
    double total = 0.0;
    for (const auto& batch : batches) {
      const Interaction& c = candidates[queue.next()];
      auto names = shared;
      names.push_back(projection_name(c));
      const Tensor loss = loss_ctr(forward(batch, c), batch.labels);
      total += optimizer_step(loss, store_.trainable(names), adam_, "interaction supernet");
      ++steps_[c.key()];
    }
    last_epoch = total / static_cast<double>(batches.size());
  }
  return last_epoch;
}

std::vector<double> InteractionSupernet::score(std::span<const Interaction> candidates,
                                               std::span<const IdBatch> validation) const {
  if (validation.empty()) throw std::invalid_argument("empty validation stream");
  NoGradGuard no_grad;
  std::vector<std::int64_t> labels;
  for (const auto& b : validation) labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    std::vector<double> scores;
    scores.reserve(labels.size());
    for (const auto& b : validation) {
      const Tensor logits = forward(b, c);
      scores.insert(scores.end(), logits.value().begin(), logits.value().end());
    }
    out.push_back(auc(scores, labels));
  }
  return out;
}

std::size_t InteractionSupernet::steps_for(const Interaction& interaction) const {
  const auto it = steps_.find(interaction.key());
  return it == steps_.end() ? 0 : it->second;
}

std::vector<IdBatch> validation_stream(const DatasetSchema& schema, std::span<const Instance> validation,
                                       const InteractionSearchConfig& config) {
  if (config.validation_batches == 0) return make_batches(schema, validation, config.batch_size, 1);
  Rng rng(mix_seed(config.seed, 0x1C));
  auto batches = make_batches(schema, validation, config.batch_size, 1, &rng);
  if (batches.size() > config.validation_batches) batches.resize(config.validation_batches);
  return batches;
}

EvolutionResult evolve(InteractionSupernet& supernet, std::span<const Instance> train,
                       std::span<const Instance> validation, const InteractionSearchConfig& config) {
  if (config.beam == 0 || config.keep == 0) throw std::invalid_argument("beam sizes must be positive");
  const DatasetSchema& schema = supernet.schema();
  if (schema.num_non_sequential() < 2) throw std::invalid_argument("interaction search needs two or more fields");
  const auto stream = validation_stream(schema, validation, config);
  EvolutionResult result;
  std::vector<ScoredInteraction> beam;
  for (const auto& i : order_one(schema.num_non_sequential())) beam.push_back({i, 0.0});
  for (std::size_t round = 0; round < config.rounds; ++round) {
    std::vector<Interaction> survivors;
    for (const auto& s : beam) survivors.push_back(s.interaction);
    EvolutionRound r;
    r.pool = expand_beam(survivors, schema.num_non_sequential());
    supernet.train(r.pool, train, config.epochs_per_round);
    r.fitness = supernet.score(r.pool, stream);
    std::vector<std::size_t> order(r.pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.fitness[a] > r.fitness[b]; });
    beam.clear();
    for (std::size_t i = 0; i < std::min(config.beam, order.size()); ++i)
      beam.push_back({r.pool[order[i]], r.fitness[order[i]]});
    r.beam = beam;
    result.rounds.push_back(std::move(r));
  }
  for (const auto& s : beam)
    if (s.interaction.order() >= 2 && result.selected.size() < config.keep) result.selected.push_back(s);
  return result;
}

EvolutionResult evolve(const DatasetSchema& schema, std::span<const Instance> train,
                       std::span<const Instance> validation, const InteractionSearchConfig& config) {
  InteractionSupernet supernet(schema, config);
  return evolve(supernet, train, validation, config);
}

json evolution_to_json(const DatasetSchema& schema, const EvolutionResult& result) {
  auto scored = [&](std::span<const ScoredInteraction> list) {
    json out = json::array();
    for (const auto& s : list)
      out.push_back({{"fields", interactions_to_json(schema, std::span(&s.interaction, 1))[0]}, {"fitness", s.fitness}});
    return out;
  };
  json rounds = json::array();
  for (const auto& r : result.rounds) rounds.push_back({{"pool_size", r.pool.size()}, {"beam", scored(r.beam)}});
  return {{"selected", scored(result.selected)}, {"rounds", rounds}};
}

}  // namespace recnas

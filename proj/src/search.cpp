// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/search.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "recnas/fair.hpp"
#include "recnas/metrics.hpp"
#include "recnas/ops.hpp"
#include "recnas/training.hpp"

namespace recnas {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBlockInitStream = 0x51;
constexpr std::uint64_t kMlpInitStream = 0x53;
constexpr std::uint64_t kFitnessSubsetStream = 0xE1;
constexpr std::uint64_t kEvalNegativeStream = 0xE2;
constexpr std::uint64_t kScheduleStream = 0x60;
constexpr std::uint64_t kOneShotDataStream = 0x61;
constexpr std::uint64_t kCurveStream = 0x62;
constexpr std::uint64_t kRandomSearchStream = 0x63;
constexpr std::uint64_t kFinetuneStream = 0x64;
constexpr std::uint64_t kInteractionStream = 0x70;

std::vector<IdBatch> batches_with_candidates(const Dataset& data, const SearchConfig& config,
                                             std::span<const Instance> rows, std::size_t negatives, Rng& rng) {
  auto batches = make_batches(data.schema, rows, config.batch_size, config.max_len);
  if (config.task == Task::kNextItem)
    attach_next_item_candidates(batches, rows, data.num_items(), {negatives, config.exclude_history}, rng);
  return batches;
}

// Best first; ties keep the earlier candidate.
std::vector<std::size_t> order_by_fitness(const std::vector<double>& fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  return order;
}

}  // namespace

InteractionSearchConfig SearchConfig::interaction_config() const {
  InteractionSearchConfig c;
  c.width = width;
  c.hidden = interaction_hidden;
  c.activation = interaction_activation;
  c.rounds = rounds;
  c.beam = beam;
  c.keep = keep;
  c.epochs_per_round = interaction_epochs;
  c.batch_size = interaction_batch_size;
  c.lr = lr_interaction;
  c.seed = mix_seed(seed, kInteractionStream);
  return c;
}

BehaviorSpace SearchConfig::behavior_space(bool has_target) const {
  BehaviorSpace space = BehaviorSpace::standard(num_blocks, has_target);
  if (!layer_set.empty()) {
    space.layers.clear();
    for (const auto& name : layer_set) {
      const LayerChoice layer = parse_layer_choice(name);
      if (layer.kind == LayerKind::kZero) continue;
      if (layer.kind == LayerKind::kTargetAttn && !has_target)
        throw std::invalid_argument("layer_set: TargetAttn needs target items");
      space.layers.push_back(layer);
    }
    if (space.layers.empty()) throw std::invalid_argument("layer_set has no usable layer");
  }
  return space;
}

bool Dataset::has_target() const {
  return !train.empty() && train.front().target.has_value();
}

std::size_t Dataset::num_items() const {
  if (schema.num_behavior() == 0) throw SchemaError("dataset has no behavior field");
  return schema.behavior()[0].cardinality;
}

Dataset sequence_dataset(const DatasetSchema& schema, std::span<const ItemSequence> sequences,
                         bool all_prefixes, std::size_t min_length) {
  const SequenceSplit split = leave_one_out_split(sequences, min_length);
  Dataset data{schema, {}, {}, {}};
  for (const auto& seq : split.train) {
    const std::size_t first = all_prefixes ? 2 : seq.size();
    for (std::size_t len = first; len <= seq.size(); ++len) {
      const ItemSequence prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len));
      auto one = sequences_to_instances(std::span(&prefix, 1));
      data.train.push_back(std::move(one[0]));
    }
  }
  const auto examples = [](const std::vector<SequenceExample>& list) {
    std::vector<ItemSequence> seqs;
    for (const auto& ex : list) {
      seqs.push_back(ex.history);
      seqs.back().push_back(ex.target);
    }
    return sequences_to_instances(seqs);
  };
  data.validation = examples(split.validation);
  data.test = examples(split.test);
  return data;
}

EvalStreams make_eval_streams(const Dataset& data, const SearchConfig& config) {
  EvalStreams s;
  Rng negatives(mix_seed(config.seed, kEvalNegativeStream));
  s.validation = batches_with_candidates(data, config, data.validation, config.eval_negatives, negatives);
  s.test = batches_with_candidates(data, config, data.test, config.eval_negatives, negatives);
  if (config.validation_batches == 0 || config.validation_batches >= s.validation.size()) {
    s.fitness = s.validation;
  } else {
    std::vector<std::size_t> order(s.validation.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(config.seed, kFitnessSubsetStream));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < config.validation_batches; ++i) s.fitness.push_back(s.validation[order[i]]);
  }
  if (s.validation.empty()) throw std::invalid_argument("empty validation split");
  return s;
}

std::vector<IdBatch> train_epoch(const Dataset& data, const SearchConfig& config, Rng& rng) {
  std::vector<Instance> rows = data.train;
  std::shuffle(rows.begin(), rows.end(), rng);
  return batches_with_candidates(data, config, rows, config.train_negatives, rng);
}

// ---------------------------------------------------------------------------
// Step 1 space.

BlockSpace::BlockSpace(const DatasetSchema& schema, const SearchConfig& config, bool has_target)
    : schema_(schema), base_layers_(config.base_hidden.size()) {
  if (schema.num_behavior() == 0) throw SchemaError("block search needs behavior fields");
  behavior_ = BehaviorConfig{config.behavior_space(has_target), schema.num_behavior() * config.width, has_target};
  head_ = head_for(schema, config.task);
  Rng rng(mix_seed(config.seed, kBlockInitStream));
  add_embedding_tables(store_, schema, config.width, rng);
  add_supernet_params(store_, behavior_, rng);
  const std::size_t input = schema.num_non_sequential() * config.width + compressed_width(behavior_);
  add_dense_mlp(store_, "base", input, config.base_hidden, rng);
  add_head(store_, head_, config.base_hidden.empty() ? input : config.base_hidden.back(), config.width, rng);
}

std::vector<std::size_t> BlockSpace::choice_counts() const {
  const auto& s = behavior_.space;
  std::vector<std::size_t> counts;
  for (std::size_t b = 0; b < s.num_blocks; ++b) {
    counts.push_back(s.norms.size());
    counts.push_back(s.layers.size() + (s.allow_zero ? 1 : 0));
    counts.push_back(s.acts.size());
  }
  return counts;
}

BlockArchitecture BlockSpace::architecture(const Choice& choice) const {
  const auto& s = behavior_.space;
  if (choice.size() != 3 * s.num_blocks) throw std::invalid_argument("block choice has the wrong length");
  BlockArchitecture arch;
  for (std::size_t b = 0; b < s.num_blocks; ++b) {
    const std::size_t layer = choice[3 * b + 1];
    BlockSpec spec{s.norms.at(choice[3 * b]), LayerChoice::zero(), s.acts.at(choice[3 * b + 2])};
    if (layer < s.layers.size()) {
      spec.layer = s.layers[layer];
    } else if (layer != s.layers.size() || !s.allow_zero) {
      throw std::out_of_range("block layer choice out of range");
    }
    arch.blocks.push_back(spec);
  }
  return arch;
}

Choice BlockSpace::choice_of(const BlockArchitecture& arch) const {
  const auto& s = behavior_.space;
  s.validate(arch);
  Choice out;
  for (const auto& spec : arch.blocks) {
    if (spec.is_zero()) {
      out.insert(out.end(), {0, s.layers.size(), 0});
      continue;
    }
    const auto index = [](const auto& list, const auto& value) {
      return static_cast<std::size_t>(std::find(list.begin(), list.end(), value) - list.begin());
    };
    out.insert(out.end(), {index(s.norms, spec.norm), index(s.layers, spec.layer), index(s.acts, spec.act)});
  }
  return out;
}

Choice BlockSpace::canonical(const Choice& choice) const { return choice_of(architecture(choice)); }

Choice BlockSpace::sample(Rng& rng) const { return choice_of(behavior_.space.sample(rng)); }

std::optional<std::vector<Choice>> BlockSpace::enumerate(std::uint64_t limit) const {
  if (behavior_.space.size() > limit) return std::nullopt;
  std::vector<Choice> out;
  for (const auto& arch : behavior_.space.enumerate(limit)) out.push_back(choice_of(arch));
  return out;
}

json BlockSpace::describe(const Choice& choice) const { return architecture_to_json(architecture(choice)); }

std::vector<std::string> BlockSpace::param_names(const Choice& choice) const {
  std::vector<std::string> names = embedding_names(schema_);
  for (auto& n : behavior_param_names(behavior_, architecture(choice))) names.push_back(std::move(n));
  for (auto& n : dense_mlp_names("base", base_layers_)) names.push_back(std::move(n));
  for (auto& n : head_names(head_)) names.push_back(std::move(n));
  return names;
}

Tensor BlockSpace::hidden(const ParamStore& store, const Choice& choice, const Batch& batch, bool training) const {
  const Tensor hb = behavior_forward(store, behavior_, architecture(choice), batch, training);
  const Tensor h0 = assemble_input(batch.non_seq, {}, hb);
  return dense_mlp_forward(store, "base", base_layers_, Activation::kReLU, h0);
}

// ---------------------------------------------------------------------------
// Step 3 space.

MlpSpace::MlpSpace(const DatasetSchema& schema, const SearchConfig& config, bool has_target,
                   std::vector<Interaction> interactions, std::optional<BlockArchitecture> blocks,
                   const ParamStore* inherit)
    : schema_(schema),
      width_(config.width),
      layers_(config.mlp_layers),
      interactions_(std::move(interactions)),
      tuples_(monotone_width_tuples(config.mlp_layers)),
      acts_(mlp_activations()) {
  if (layers_ == 0) throw std::invalid_argument("the aggregation MLP needs at least one layer");
  head_ = head_for(schema, config.task);
  Rng rng(mix_seed(config.seed, kMlpInitStream));
  add_embedding_tables(store_, schema, width_, rng);
  std::size_t behavior_width = 0;
  if (schema.num_behavior() > 0) {
    behavior_ = BehaviorConfig{config.behavior_space(has_target), schema.num_behavior() * width_, has_target};
    if (blocks) {
      blocks_ = *blocks;
      behavior_->space.num_blocks = blocks_.blocks.size();
    } else {
      blocks_.blocks.assign(behavior_->space.num_blocks, BlockSpec{Norm::kNone, LayerChoice::zero(), Activation::kIdentity});
    }
    behavior_->space.validate(blocks_);
    ParamStore all;
    add_supernet_params(all, *behavior_, rng);
    const ParamStore used = all.subset(behavior_param_names(*behavior_, blocks_));
    for (const auto& [name, tensor] : used.entries()) store_.add(name, tensor);
    behavior_width = compressed_width(*behavior_);
  }
  for (const auto& i : interactions_)
    for (auto f : i.fields())
      if (f >= schema.num_non_sequential()) throw std::out_of_range("interaction field out of range");
  se_rows_ = schema.num_non_sequential() + interactions_.size();
  input_width_ = se_rows_ * width_ + behavior_width;
  if (input_width_ == 0) throw std::invalid_argument("no features reach the aggregation MLP");
  add_mlp_bank(store_, "mlp", layers_, input_width_, rng);
  if (se_rows_ > 0) add_se_params(store_, "se", se_rows_, width_, rng);
  add_head(store_, head_, input_width_ + (se_rows_ > 0 ? width_ : 0), width_, rng);
  if (inherit != nullptr) store_.copy_matching(*inherit);
}

std::vector<std::size_t> MlpSpace::choice_counts() const {
  std::vector<std::size_t> counts{tuples_.size()};
  counts.insert(counts.end(), layers_, acts_.size());
  return counts;
}

MlpSpec MlpSpace::spec(const Choice& choice) const {
  if (choice.size() != layers_ + 1) throw std::invalid_argument("MLP choice has the wrong length");
  const auto& tuple = tuples_.at(choice[0]);
  MlpSpec out;
  for (std::size_t l = 0; l < layers_; ++l) out.layers.push_back({tuple[l], acts_.at(choice[l + 1])});
  return out;
}

Choice MlpSpace::choice_of(const MlpSpec& spec) const {
  if (spec.layers.size() != layers_) throw std::invalid_argument("MLP spec has the wrong depth");
  std::vector<std::size_t> tuple;
  for (const auto& l : spec.layers) tuple.push_back(l.tenths);
  const auto it = std::find(tuples_.begin(), tuples_.end(), tuple);
  if (it == tuples_.end()) throw std::invalid_argument("MLP widths are not non-increasing");
  Choice out{static_cast<std::size_t>(it - tuples_.begin())};
  for (const auto& l : spec.layers) {
    const auto a = std::find(acts_.begin(), acts_.end(), l.act);
    if (a == acts_.end()) throw std::invalid_argument("activation is not an MLP candidate");
    out.push_back(static_cast<std::size_t>(a - acts_.begin()));
  }
  return out;
}

Choice MlpSpace::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> tuple(0, tuples_.size() - 1), act(0, acts_.size() - 1);
  Choice out{tuple(rng)};
  for (std::size_t l = 0; l < layers_; ++l) out.push_back(act(rng));
  return out;
}

std::optional<std::vector<Choice>> MlpSpace::enumerate(std::uint64_t limit) const {
  std::uint64_t total = tuples_.size();
  for (std::size_t l = 0; l < layers_; ++l) {
    total *= acts_.size();
    if (total > limit) return std::nullopt;
  }
  std::vector<Choice> out;
  for (std::uint64_t index = 0; index < total; ++index) {
    std::uint64_t rest = index;
    Choice c{static_cast<std::size_t>(rest % tuples_.size())};
    rest /= tuples_.size();
    for (std::size_t l = 0; l < layers_; ++l) {
      c.push_back(static_cast<std::size_t>(rest % acts_.size()));
      rest /= acts_.size();
    }
    out.push_back(std::move(c));
  }
  return out;
}

json MlpSpace::describe(const Choice& choice) const { return mlp_spec_to_json(spec(choice), input_width_); }

std::vector<std::string> MlpSpace::param_names(const Choice& choice) const {
  std::vector<std::string> names = embedding_names(schema_);
  if (behavior_)
    for (auto& n : behavior_param_names(*behavior_, blocks_)) names.push_back(std::move(n));
  for (auto& n : mlp_bank_names("mlp", spec(choice))) names.push_back(std::move(n));
  if (se_rows_ > 0)
    for (auto& n : se_names("se")) names.push_back(std::move(n));
  for (auto& n : head_names(head_)) names.push_back(std::move(n));
  return names;
}

Tensor MlpSpace::hidden(const ParamStore& store, const Choice& choice, const Batch& batch, bool training) const {
  const Tensor hb = behavior_ ? behavior_forward(store, *behavior_, blocks_, batch, training) : Tensor();
  std::vector<Tensor> products;
  for (const auto& i : interactions_) products.push_back(hadamard(batch.non_seq, i));
  const Tensor h0 = assemble_input(batch.non_seq, products, hb);
  Tensor out = mlp_forward(store, "mlp", spec(choice), h0, training);
  const std::size_t b = batch.size;
  if (out.dim(1) < input_width_) {
    const std::vector<Tensor> parts{out, Tensor::zeros({b, input_width_ - out.dim(1)})};
    out = ops::concat(parts, 1);
  }
  if (se_rows_ == 0) return out;
  std::vector<Tensor> rows;
  for (const auto& e : batch.non_seq) rows.push_back(ops::reshape(e, {b, 1, width_}));
  for (const auto& p : products) rows.push_back(ops::reshape(p, {b, 1, width_}));
  const Tensor q = rows.size() == 1 ? rows[0] : ops::concat(rows, 1);
  const std::vector<Tensor> parts{out, se_compress(store, "se", q)};
  return ops::concat(parts, 1);
}

// ---------------------------------------------------------------------------
// Training and selection.

Metrics evaluate_choice(const OneShotSpace& space, const ParamStore& store, const Choice& choice,
                        std::span<const IdBatch> batches) {
  const HiddenFn hidden = [&](const Batch& batch, bool training) {
    return space.hidden(store, choice, batch, training);
  };
  return evaluate(store, space.schema(), space.head(), hidden, batches);
}

OneShotResult train_oneshot(OneShotSpace& space, const Dataset& data, const EvalStreams& streams,
                            const SearchConfig& config, std::size_t max_epochs) {
  OneShotResult result;
  FairSchedule schedule(space.choice_counts(), mix_seed(config.seed, kScheduleStream));
  Rng data_rng(mix_seed(config.seed, kOneShotDataStream));
  Rng curve_rng(mix_seed(config.seed, kCurveStream));
  std::vector<Choice> probes;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, config.curve_architectures); ++i)
    probes.push_back(space.sample(curve_rng));

  Adam adam(AdamConfig{.lr = config.lr_oneshot});
  double best = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    double total = 0.0;
    const auto batches = train_epoch(data, config, data_rng);
    for (const auto& ids : batches) {
      const Choice choice = space.canonical(schedule.next());
      ParamStore& store = space.params();
      const Tensor h = space.hidden(store, choice, embed_batch(store, space.schema(), ids), true);
      const Tensor loss = head_loss(store, space.head(), h, ids);
      total += optimizer_step(loss, store.trainable(space.param_names(choice)), adam, "one-shot training");
      ++result.steps;
    }
    double fitness = 0.0;
    for (const auto& probe : probes)
      fitness += evaluate_choice(space, space.params(), probe, streams.fitness).fitness(config.task);
    fitness /= static_cast<double>(probes.size());
    result.curve.push_back({epoch, total / static_cast<double>(batches.size()), fitness});
    if (fitness > best) {
      best = fitness;
      stale = 0;
    } else if (++stale >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  for (std::size_t i = 0; i < schedule.num_points(); ++i) result.activations.push_back(schedule.point(i).counts());
  return result;
}

std::vector<CandidateResult> random_search(const OneShotSpace& space, std::span<const IdBatch> fitness,
                                           const SearchConfig& config) {
  if (config.num_samples == 0 || config.top_n == 0) throw std::invalid_argument("num_samples and top_n must be positive");
  std::vector<Choice> candidates;
  if (auto all = space.enumerate(config.num_samples)) {
    candidates = std::move(*all);
  } else {
    Rng rng(mix_seed(config.seed, kRandomSearchStream));
    std::set<std::string> seen;
    const std::size_t max_draws = 50 * config.num_samples;
    for (std::size_t draw = 0; draw < max_draws && candidates.size() < config.num_samples; ++draw) {
      Choice c = space.sample(rng);
      if (seen.insert(space.describe(c).dump()).second) candidates.push_back(std::move(c));
    }
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(evaluate_choice(space, space.params(), c, fitness).fitness(config.task));
  const auto order = order_by_fitness(scores);
  std::vector<CandidateResult> out;
  for (std::size_t r = 0; r < std::min(config.top_n, order.size()); ++r) {
    const auto& c = candidates[order[r]];
    out.push_back({c, space.describe(c), scores[order[r]], r + 1});
  }
  return out;
}

DerivedModel finetune(const OneShotSpace& space, const Choice& choice, const Dataset& data,
                      const EvalStreams& streams, const SearchConfig& config, std::size_t epochs, double lr) {
  DerivedModel model;
  model.choice = choice;
  model.descriptor = space.describe(choice);
  ParamStore child = space.params().subset(space.param_names(choice));
  model.inherited = evaluate_choice(space, child, choice, streams.validation);
  model.validation = model.inherited;
  model.params = child.clone();
  model.curve.push_back({0, 0.0, model.inherited.fitness(config.task)});

  Adam adam(AdamConfig{.lr = lr});
  Rng rng(mix_seed(config.seed, kFinetuneStream));
  const auto params = child.trainable();
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    double total = 0.0;
    const auto batches = train_epoch(data, config, rng);
    for (const auto& ids : batches) {
      const Tensor h = space.hidden(child, choice, embed_batch(child, space.schema(), ids), true);
      total += optimizer_step(head_loss(child, space.head(), h, ids), params, adam, "fine-tuning");
    }
    const Metrics m = evaluate_choice(space, child, choice, streams.validation);
    model.curve.push_back({epoch, total / static_cast<double>(batches.size()), m.fitness(config.task)});
    if (m.fitness(config.task) > model.validation.fitness(config.task)) {
      model.validation = m;
      model.params = child.clone();
    }
  }
  model.test = evaluate_choice(space, model.params, choice, streams.test);
  return model;
}

Metrics popularity_baseline(const Dataset& data, std::span<const IdBatch> batches) {
  std::map<std::int64_t, double> counts;
  for (const auto& inst : data.train) {
    counts[inst.label] += 1.0;
    for (const auto& el : inst.behavior)
      for (auto id : el[0]) counts[id] += 1.0;
  }
  Metrics m;
  double hr1 = 0, hr5 = 0, hr10 = 0, n5 = 0, n10 = 0;
  for (const auto& ids : batches) {
    for (std::size_t b = 0; b < ids.size; ++b) {
      std::vector<std::int64_t> row = ids.positives.at(b);
      row.insert(row.end(), ids.negatives[b].begin(), ids.negatives[b].end());
      std::sort(row.begin(), row.end());
      std::vector<double> scores;
      for (auto id : row) scores.push_back(counts.count(id) ? counts[id] : 0.0);
      const auto target =
          static_cast<std::size_t>(std::lower_bound(row.begin(), row.end(), ids.positives[b][0]) - row.begin());
      const std::size_t rank = rank_of(scores, target);
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

namespace {

DerivedModel best_finetuned(const OneShotSpace& space, const std::vector<CandidateResult>& candidates,
                            const Dataset& data, const EvalStreams& streams, const SearchConfig& config) {
  std::optional<DerivedModel> best;
  for (const auto& c : candidates) {
    DerivedModel m = finetune(space, c.choice, data, streams, config, config.finetune_epochs, config.lr_finetune);
    if (!best || m.validation.fitness(config.task) > best->validation.fitness(config.task)) best = std::move(m);
  }
  if (!best) throw std::logic_error("random search returned no candidates");
  return std::move(*best);
}

json curve_json(const OneShotResult& r) {
  json curve = json::array();
  for (const auto& e : r.curve) curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"fitness", e.fitness}});
  return {{"curve", curve}, {"steps", r.steps}, {"early_stopped", r.early_stopped}, {"activations", r.activations}};
}

json candidates_json(const std::vector<CandidateResult>& list) {
  json out = json::array();
  for (const auto& c : list) out.push_back({{"rank", c.rank}, {"fitness", c.fitness}, {"architecture", c.descriptor}});
  return out;
}

}  // namespace

PipelineResult run_pipeline(const Dataset& data, const SearchConfig& config, const PipelineInputs& given) {
  PipelineResult r;
  const EvalStreams streams = make_eval_streams(data, config);
  const bool has_target = data.has_target();
  std::optional<DerivedModel> step1;
  const ParamStore* step1_params = nullptr;

  if (given.blocks) {
    r.blocks = given.blocks;
    if (given.block_params) step1_params = &*given.block_params;
  } else if (config.run_blocks && data.schema.num_behavior() > 0) {
    BlockSpace space(data.schema, config, has_target);
    r.block_training = train_oneshot(space, data, streams, config, config.oneshot_epochs);
    r.block_candidates = random_search(space, streams.fitness, config);
    step1 = best_finetuned(space, r.block_candidates, data, streams, config);
    r.blocks = space.architecture(step1->choice);
    step1_params = &step1->params;
  }

  if (given.interactions) {
    r.selected_interactions = *given.interactions;
  } else if (config.run_interactions && config.task == Task::kCtr && data.schema.num_non_sequential() >= 2) {
    r.interactions = evolve(data.schema, data.train, data.validation, config.interaction_config());
    for (const auto& s : r.interactions->selected) r.selected_interactions.push_back(s.interaction);
  }

  if (config.run_mlp) {
    std::optional<BlockArchitecture> blocks;
    const ParamStore* inherit = nullptr;
    if (config.mlp_uses_step1_blocks) {
      if (!r.blocks) throw std::invalid_argument("the MLP step was asked to reuse blocks that were not searched");
      blocks = r.blocks;
      inherit = step1_params;
    }
    MlpSpace space(data.schema, config, has_target, r.selected_interactions, blocks, inherit);
    r.mlp_training = train_oneshot(space, data, streams, config, config.mlp_epochs);
    r.mlp_candidates = random_search(space, streams.fitness, config);
    DerivedModel best = best_finetuned(space, r.mlp_candidates, data, streams, config);
    r.mlp = space.spec(best.choice);
    r.mlp_input_width = space.input_width();
    r.final_descriptor = best.descriptor;
    r.validation = best.validation;
    r.test = best.test;
    r.final_params = std::move(best.params);
  } else if (step1) {
    r.final_descriptor = step1->descriptor;
    r.validation = step1->validation;
    r.test = step1->test;
    r.final_params = std::move(step1->params);
  } else {
    throw std::invalid_argument("nothing to search: enable the MLP step or provide behavior fields");
  }
  if (config.task == Task::kNextItem) r.popularity = popularity_baseline(data, streams.test);
  return r;
}

json PipelineResult::to_json(const DatasetSchema& schema, Task task) const {
  json out;
  out["blocks"] = nullptr;
  if (blocks) {
    json described = json::array();
    for (const auto& b : blocks->blocks) described.push_back(describe_block(b));
    out["blocks"] = {{"architecture", architecture_to_json(*blocks)}, {"describe", described}};
    out["block_candidates"] = candidates_json(block_candidates);
    if (block_training) out["block_training"] = curve_json(*block_training);
  }
  out["interactions"] = interactions_to_json(schema, selected_interactions);
  if (interactions) out["interaction_search"] = evolution_to_json(schema, *interactions);
  out["mlp"] = nullptr;
  if (mlp) {
    json described = json::array();
    for (const auto& l : mlp->layers) described.push_back(describe_mlp_layer(l, mlp_input_width));
    out["mlp"] = {{"input_width", mlp_input_width}, {"layers", mlp_spec_to_json(*mlp, mlp_input_width)},
                  {"describe", described}};
    out["mlp_candidates"] = candidates_json(mlp_candidates);
    if (mlp_training) out["mlp_training"] = curve_json(*mlp_training);
  }
  out["final"] = final_descriptor;
  out["metrics"] = {{"validation", validation.to_json(task)}, {"test", test.to_json(task)}};
  if (popularity) out["metrics"]["popularity_test"] = popularity->to_json(task);
  return out;
}

}  // namespace recnas

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "recnas/data.hpp"
#include "recnas/fair.hpp"
#include "recnas/search.hpp"

using namespace recnas;

namespace {

Dataset tiny_sequences(std::uint64_t seed) {
  MarkovSyntheticSpec spec;
  spec.users = 60;
  spec.items = 30;
  spec.min_length = 5;
  spec.max_length = 8;
  spec.seed = seed;
  const MarkovSynthetic m = generate_markov(spec);
  return sequence_dataset(m.schema, m.sequences, true);
}

SearchConfig tiny_next_item() {
  SearchConfig c;
  c.task = Task::kNextItem;
  c.width = 4;
  c.batch_size = 32;
  c.max_len = 6;
  c.eval_negatives = 10;
  c.train_negatives = 3;
  c.validation_batches = 1;
  c.num_blocks = 1;
  c.layer_set = {"Conv1", "AvgPool3"};
  c.base_hidden = {8};
  c.oneshot_epochs = 2;
  c.curve_architectures = 2;
  c.num_samples = 50;
  c.top_n = 2;
  c.finetune_epochs = 1;
  c.mlp_layers = 2;
  c.mlp_epochs = 1;
  c.seed = 3;
  return c;
}

Dataset tiny_ctr() {
  CtrSyntheticSpec spec;
  spec.fields = 3;
  spec.cardinality = 4;
  spec.train_rows = 300;
  spec.validation_rows = 200;
  spec.test_rows = 200;
  spec.seed = 9;
  CtrSynthetic d = generate_planted_ctr(spec);
  return {d.schema, d.train, d.validation, d.test};
}

}  // namespace

TEST_CASE("fair schedule activates every candidate once per window") {
  const std::vector<std::size_t> counts{4, 3, 7};
  FairSchedule schedule(counts, 17);
  std::vector<std::vector<std::size_t>> draws(counts.size());
  for (int step = 0; step < 10000; ++step) {
    const auto c = schedule.next();
    for (std::size_t p = 0; p < counts.size(); ++p) draws[p].push_back(c[p]);
  }
  for (std::size_t p = 0; p < counts.size(); ++p) {
    const std::size_t n = counts[p];
    for (std::size_t start = 0; start + n <= draws[p].size(); start += n) {
      std::set<std::size_t> window(draws[p].begin() + start, draws[p].begin() + start + n);
      CHECK(window.size() == n);
    }
    const auto& tally = schedule.point(p).counts();
    const auto [lo, hi] = std::minmax_element(tally.begin(), tally.end());
    CHECK(*hi - *lo <= 1);
  }
  CHECK(schedule.point(0).counts() == std::vector<std::size_t>(4, 2500));
  CHECK_THROWS(FairQueue(0, 1));
}

TEST_CASE("sequence dataset splits") {
  const std::vector<ItemSequence> seqs{{1, 2, 3, 4, 5}, {7, 8}};
  DatasetSchema schema = generate_markov({.users = 2, .items = 10}).schema;
  const Dataset plain = sequence_dataset(schema, seqs, false);
  REQUIRE(plain.train.size() == 1);
  CHECK(plain.train[0].label == 3);
  CHECK(plain.validation[0].label == 4);
  CHECK(plain.test[0].label == 5);
  CHECK(plain.test[0].behavior.size() == 4);
  CHECK(sequence_dataset(schema, seqs, true).train.size() == 2);
}

TEST_CASE("block space choices") {
  const Dataset data = tiny_sequences(1);
  const SearchConfig config = tiny_next_item();
  BlockSpace space(data.schema, config, data.has_target());
  CHECK(space.choice_counts() == std::vector<std::size_t>{2, 3, 4});

  const Choice zero_a{1, 2, 3}, zero_b{0, 2, 0};
  CHECK(space.canonical(zero_a) == zero_b);
  CHECK(space.param_names(zero_a) == space.param_names(zero_b));
  const Choice conv{0, 0, 1};
  CHECK(space.canonical(conv) == conv);
  CHECK(space.choice_of(space.architecture(conv)) == conv);
  CHECK(space.param_names(conv).size() > space.param_names(zero_a).size());
  CHECK_THROWS(space.architecture({0, 3, 0}));

  // 2 norms x 2 layers x 4 activations + Zero.
  const auto all = space.enumerate(100);
  REQUIRE(all.has_value());
  CHECK(all->size() == 17);
  CHECK_FALSE(space.enumerate(16).has_value());
}

TEST_CASE("random search") {
  const Dataset data = tiny_sequences(2);
  SearchConfig config = tiny_next_item();
  BlockSpace space(data.schema, config, data.has_target());
  const EvalStreams streams = make_eval_streams(data, config);

  config.top_n = 100;
  const auto all = random_search(space, streams.fitness, config);
  CHECK(all.size() == 17);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < all.size(); ++i) {
    seen.insert(all[i].descriptor.dump());
    CHECK(all[i].rank == i + 1);
    if (i > 0) CHECK(all[i - 1].fitness >= all[i].fitness);
    CHECK(all[i].fitness == evaluate_choice(space, space.params(), all[i].choice, streams.fitness).fitness(config.task));
  }
  CHECK(seen.size() == 17);

  config.num_samples = 5;
  config.top_n = 3;
  const auto sampled = random_search(space, streams.fitness, config);
  CHECK(sampled.size() == 3);
  CHECK(sampled[0].fitness >= sampled[2].fitness);
  CHECK(random_search(space, streams.fitness, config)[0].choice == sampled[0].choice);
}

TEST_CASE("one-shot training and weight inheritance") {
  const Dataset data = tiny_sequences(3);
  const SearchConfig config = tiny_next_item();
  const EvalStreams streams = make_eval_streams(data, config);

  BlockSpace a(data.schema, config, data.has_target()), b(data.schema, config, data.has_target());
  const OneShotResult ra = train_oneshot(a, data, streams, config, 2);
  const OneShotResult rb = train_oneshot(b, data, streams, config, 2);
  REQUIRE(ra.curve.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
    CHECK(ra.curve[i].fitness == rb.curve[i].fitness);
  }
  const std::size_t steps_per_epoch = (data.train.size() + config.batch_size - 1) / config.batch_size;
  CHECK(ra.steps == 2 * steps_per_epoch);
  REQUIRE(ra.activations.size() == 3);
  for (const auto& point : ra.activations) {
    std::size_t total = 0;
    for (auto c : point) total += c;
    CHECK(total == ra.steps);
  }

  const Choice child{0, 1, 2};
  const DerivedModel derived = finetune(a, child, data, streams, config, 0, 1e-3);
  for (const auto& name : a.param_names(child)) {
    REQUIRE(derived.params.contains(name));
    CHECK(derived.params.at(name).value() == a.params().at(name).value());
  }
  CHECK(derived.params.names().size() == a.param_names(child).size());
  const Metrics direct = evaluate_choice(a, a.params(), child, streams.validation);
  CHECK(derived.inherited.ndcg5 == direct.ndcg5);
  CHECK(derived.validation.hr1 == direct.hr1);
  CHECK(derived.curve.size() == 1);

  // Fine-tuning never returns weights worse on validation than inherited ones.
  const DerivedModel tuned = finetune(a, child, data, streams, config, 2, 1e-2);
  CHECK(tuned.validation.ndcg5 >= tuned.inherited.ndcg5);
  CHECK(tuned.curve.size() == 3);
  CHECK(a.params().at("emb.item").value() == b.params().at("emb.item").value());
}

TEST_CASE("MLP space") {
  const Dataset data = tiny_ctr();
  SearchConfig config;
  config.width = 4;
  config.mlp_layers = 3;
  const std::vector<Interaction> ix{Interaction({0, 1})};
  MlpSpace space(data.schema, config, false, ix, std::nullopt, nullptr);
  CHECK(space.input_width() == 16);
  CHECK(space.uses_se());
  CHECK(space.choice_counts() == std::vector<std::size_t>{220, 4, 4, 4});
  CHECK_FALSE(space.enumerate(2000).has_value());
  CHECK(space.enumerate(20000)->size() == 220 * 64);

  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Choice c = space.sample(rng);
    CHECK(space.choice_of(space.spec(c)) == c);
    const IdBatch ids = make_id_batch(data.schema, std::span(data.train).first(7), 1);
    const Tensor h = space.hidden(space.params(), c, embed_batch(space.params(), data.schema, ids), false);
    CHECK(h.shape() == std::vector<std::size_t>{7, 20});
  }

  // Inherited parameters are copied where names match.
  ParamStore donor = space.params().clone();
  donor.at("head.w").mutable_data()[0] = 42.0;
  MlpSpace heir(data.schema, config, false, ix, std::nullopt, &donor);
  CHECK(heir.params().at("head.w").value()[0] == 42.0);
}

TEST_CASE("popularity baseline") {
  DatasetSchema schema = generate_markov({.users = 2, .items = 6}).schema;
  Dataset data{schema, {}, {}, {}};
  const std::vector<ItemSequence> train{{1, 1, 1, 2}, {2, 3}};
  data.train = sequences_to_instances(train);
  IdBatch batch;
  batch.size = 2;
  batch.positives = {{1}, {3}};
  batch.negatives = {{2, 4}, {1, 2}};
  // Counts: 1 -> 3, 2 -> 2, 3 -> 1, 4 -> 0.
  const std::vector<IdBatch> batches{batch};
  const Metrics m = popularity_baseline(data, batches);
  CHECK(m.count == 2);
  CHECK(m.hr1 == doctest::Approx(0.5));
  CHECK(m.hr5 == doctest::Approx(1.0));
  CHECK(m.ndcg5 == doctest::Approx(0.5 + 0.5 / 2.0));
}

TEST_CASE("pipelines") {
  SUBCASE("CTR: interactions then MLP") {
    const Dataset data = tiny_ctr();
    SearchConfig config;
    config.width = 4;
    config.batch_size = 50;
    config.rounds = 2;
    config.beam = 4;
    config.keep = 2;
    config.interaction_hidden = {8};
    config.interaction_batch_size = 50;
    config.mlp_layers = 2;
    config.mlp_epochs = 1;
    config.num_samples = 10;
    config.top_n = 2;
    config.finetune_epochs = 1;
    const PipelineResult r = run_pipeline(data, config);
    CHECK_FALSE(r.blocks.has_value());
    CHECK(r.selected_interactions.size() == 2);
    REQUIRE(r.mlp.has_value());
    CHECK(r.mlp_input_width == (3 + 2) * 4);
    CHECK(r.test.auc >= 0.0);
    const auto j = r.to_json(data.schema, config.task);
    CHECK(j["interactions"].size() == 2);
    CHECK(j["metrics"]["test"].contains("auc"));
  }
  SUBCASE("next-item: blocks then MLP") {
    const Dataset data = tiny_sequences(5);
    SearchConfig config = tiny_next_item();
    config.mlp_uses_step1_blocks = true;
    const PipelineResult r = run_pipeline(data, config);
    REQUIRE(r.blocks.has_value());
    CHECK(r.block_candidates.size() == 2);
    CHECK(r.popularity.has_value());
    CHECK(r.selected_interactions.empty());
    const auto j = r.to_json(data.schema, config.task);
    CHECK(j["metrics"]["test"].contains("hr@1"));
    CHECK(j["blocks"]["describe"].size() == 1);
  }
}

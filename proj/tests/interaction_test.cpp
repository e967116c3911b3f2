// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "recnas/data.hpp"
#include "recnas/interaction.hpp"
#include "recnas/ops.hpp"
#include "support/gradcheck.hpp"

using namespace recnas;

namespace {

std::set<Interaction> all_subsets(std::size_t n, std::size_t max_order) {
  std::set<Interaction> out;
  for (std::size_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> fields;
    for (std::size_t f = 0; f < n; ++f)
      if (mask & (1u << f)) fields.push_back(f);
    if (fields.size() <= max_order) out.insert(Interaction(fields));
  }
  return out;
}

CtrSynthetic tiny_ctr(std::size_t fields, std::uint64_t seed) {
  CtrSyntheticSpec spec;
  spec.fields = fields;
  spec.cardinality = 4;
  spec.train_rows = 600;
  spec.validation_rows = 300;
  spec.test_rows = 10;
  spec.seed = seed;
  return generate_planted_ctr(spec);
}

InteractionSearchConfig tiny_config() {
  InteractionSearchConfig c;
  c.width = 4;
  c.hidden = {8};
  c.batch_size = 100;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("Hadamard products") {
  const std::vector<Tensor> e{Tensor::from({1, 2}, {9.0, 9.0}), Tensor::from({1, 2}, {1.0, 2.0}),
                              Tensor::from({1, 2}, {3.0, 4.0}), Tensor::from({1, 2}, {0.0, 1.0})};
  CHECK(hadamard(e, Interaction({1})).value() == std::vector<double>{1.0, 2.0});
  CHECK(hadamard(e, Interaction({1, 2})).value() == std::vector<double>{3.0, 8.0});
  CHECK(hadamard(e, Interaction({1, 2, 3})).value() == std::vector<double>{0.0, 8.0});
  CHECK(hadamard(e, Interaction({3, 1, 2})).value() == hadamard(e, Interaction({1, 2, 3})).value());
  CHECK(Interaction({2, 0}) == Interaction({0, 2}));
  CHECK_THROWS(hadamard(e, Interaction({1, 4})));
  CHECK_THROWS(Interaction({1, 1}));
  CHECK_THROWS(Interaction(std::vector<std::size_t>{}));
}

TEST_CASE("beam expansion") {
  const std::vector<Interaction> one{Interaction({1})};
  CHECK(expand_beam(one, 3) == std::vector<Interaction>{Interaction({1}), Interaction({0, 1}), Interaction({1, 2})});
  const std::vector<Interaction> full{Interaction({0, 1})};
  CHECK(expand_beam(full, 2) == full);
  const std::vector<Interaction> two{Interaction({1}), Interaction({2})};
  const auto pool = expand_beam(two, 3);
  CHECK(std::count(pool.begin(), pool.end(), Interaction({1, 2})) == 1);

  // Unlimited beam reaches every subset of size <= rounds + 1.
  for (std::size_t n = 2; n <= 4; ++n) {
    for (std::size_t rounds = 0; rounds <= 4; ++rounds) {
      std::vector<Interaction> beam = order_one(n);
      for (std::size_t r = 0; r < rounds; ++r) beam = expand_beam(beam, n);
      const std::set<Interaction> reached(beam.begin(), beam.end());
      CHECK(reached.size() == beam.size());
      CHECK(reached == all_subsets(n, rounds + 1));
    }
  }
}

TEST_CASE("linear projection of a concatenation splits into a sum") {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 3, ke = 12, kp = 4, h = 7;
    const Tensor e = testing::random_leaf({b, ke}, rng);
    const Tensor p = testing::random_leaf({b, kp}, rng);
    const Tensor we = testing::random_leaf({ke, h}, rng);
    const Tensor wp = testing::random_leaf({kp, h}, rng);
    const Tensor split = ops::add(ops::matmul(e, we), ops::matmul(p, wp));
    const std::vector<Tensor> xs{e, p}, ws{we, wp};
    const Tensor joint = ops::matmul(ops::concat(xs, 1), ops::concat(ws, 0));
    for (std::size_t i = 0; i < split.numel(); ++i)
      worst = std::max(worst, std::abs(split.value()[i] - joint.value()[i]));
  }
  CHECK(worst <= 1e-9);

  // The supernet's first layer equals a standalone layer on concat(e^a, p_i).
  const CtrSynthetic data = tiny_ctr(4, 1);
  InteractionSupernet net(data.schema, tiny_config());
  const Interaction cand({0, 2});
  const std::vector<Interaction> cands{cand};
  net.ensure(cands);
  const IdBatch ids = make_id_batch(data.schema, std::span(data.train).first(5), 1);
  const Batch batch = embed_batch(net.params(), data.schema, ids);
  const Tensor got = net.first_layer(batch, cand);
  std::vector<Tensor> parts = batch.non_seq;
  parts.push_back(hadamard(batch.non_seq, cand));
  const std::vector<Tensor> blocks{net.params().at("ix.We"), net.params().at(net.projection_name(cand))};
  const Tensor expected =
      ops::add(ops::matmul(ops::concat(parts, 1), ops::concat(blocks, 0)), net.params().at("ix.b0"));
  for (std::size_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got.value()[i] - expected.value()[i]) <= 1e-9);
}

TEST_CASE("interaction supernet training and scoring") {
  const CtrSynthetic data = tiny_ctr(4, 2);
  InteractionSearchConfig config = tiny_config();
  config.batch_size = 20;

  SUBCASE("fair candidate sampling") {
    InteractionSupernet net(data.schema, config);
    const auto pool = expand_beam(order_one(4), 4);  // 10 candidates, 30 steps per epoch
    net.train(pool, data.train, 2);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& c : pool) {
      lo = std::min(lo, net.steps_for(c));
      hi = std::max(hi, net.steps_for(c));
    }
    CHECK(hi - lo <= 1);
    CHECK(lo == 6);

    const std::vector<Interaction> single{Interaction({1, 3})};
    InteractionSupernet solo(data.schema, config);
    solo.train(single, data.train, 1);
    CHECK(solo.steps_for(single[0]) == 30);
  }

  SUBCASE("scores are deterministic and duplicates agree") {
    InteractionSupernet a(data.schema, config), b(data.schema, config);
    const std::vector<Interaction> pool{Interaction({0, 1}), Interaction({2, 3}), Interaction({0, 1})};
    a.train(pool, data.train, 1);
    b.train(pool, data.train, 1);
    const auto stream = validation_stream(data.schema, data.validation, config);
    const auto fa = a.score(pool, stream);
    CHECK(fa == b.score(pool, stream));
    CHECK(fa[0] == fa[2]);
    CHECK_THROWS(a.score(pool, {}));
  }
}

TEST_CASE("evolution") {
  const CtrSynthetic data = tiny_ctr(3, 3);
  InteractionSearchConfig config = tiny_config();
  config.epochs_per_round = 1;

  config.rounds = 0;
  CHECK(evolve(data.schema, data.train, data.validation, config).selected.empty());

  config.rounds = 4;
  config.beam = 100;
  config.keep = 100;
  const EvolutionResult result = evolve(data.schema, data.train, data.validation, config);
  std::set<Interaction> selected;
  for (const auto& s : result.selected) selected.insert(s.interaction);
  CHECK(selected == std::set<Interaction>{Interaction({0, 1}), Interaction({0, 2}), Interaction({1, 2}),
                                          Interaction({0, 1, 2})});
  CHECK(result.rounds.size() == 4);
  for (const auto& r : result.rounds) {
    for (std::size_t i = 1; i < r.beam.size(); ++i) CHECK(r.beam[i - 1].fitness >= r.beam[i].fitness);
  }
  // The best entry of a round is at least as fit as the re-scored survivors of
  // the previous round, since they compete in the same pool.
  for (std::size_t r = 1; r < result.rounds.size(); ++r) {
    const auto& round = result.rounds[r];
    for (const auto& prev : result.rounds[r - 1].beam) {
      const auto it = std::find(round.pool.begin(), round.pool.end(), prev.interaction);
      REQUIRE(it != round.pool.end());
      CHECK(round.beam[0].fitness >= round.fitness[static_cast<std::size_t>(it - round.pool.begin())]);
    }
  }

  config.beam = 2;
  config.keep = 1;
  const auto narrow = evolve(data.schema, data.train, data.validation, config);
  CHECK(narrow.selected.size() == 1);
  for (const auto& r : narrow.rounds) CHECK(r.beam.size() <= 2);
  CHECK(evolve(data.schema, data.train, data.validation, config).selected[0].interaction ==
        narrow.selected[0].interaction);
}

TEST_CASE("interaction list JSON uses field names") {
  const CtrSynthetic data = tiny_ctr(4, 4);
  const std::vector<Interaction> list{Interaction({0, 3}), Interaction({1, 2, 3})};
  const auto j = interactions_to_json(data.schema, list);
  CHECK(j.dump() == R"([["F00","F03"],["F01","F02","F03"]])");
  CHECK(interactions_from_json(data.schema, j) == list);
  CHECK(list[1].name(data.schema) == "F01*F02*F03");
  CHECK_THROWS(interactions_from_json(data.schema, nlohmann::json::parse(R"([["F00","F09"]])")));
}

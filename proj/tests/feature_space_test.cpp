// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "recnas/feature_space.hpp"
#include "recnas/ops.hpp"
#include "support/gradcheck.hpp"

using namespace recnas;

namespace {

DatasetSchema small_schema() {
  return DatasetSchema({{"user", 5, Valence::kUnivalent, FieldGroup::kNonSequential},
                        {"tags", 4, Valence::kMultivalent, FieldGroup::kNonSequential},
                        {"item", 6, Valence::kUnivalent, FieldGroup::kBehavior},
                        {"cat", 3, Valence::kUnivalent, FieldGroup::kBehavior}});
}

Instance make_instance(std::size_t length, std::int64_t user) {
  Instance inst;
  inst.non_seq = {{user}, {0, 2}};
  for (std::size_t t = 0; t < length; ++t)
    inst.behavior.push_back({{static_cast<std::int64_t>(t % 6)}, {static_cast<std::int64_t>(t % 3)}});
  inst.label = 1;
  return inst;
}

}  // namespace

TEST_CASE("schema validation and JSON round trip") {
  const DatasetSchema schema = small_schema();
  CHECK(schema.num_non_sequential() == 2);
  CHECK(schema.num_behavior() == 2);
  CHECK(DatasetSchema::from_json(schema.to_json()).to_json() == schema.to_json());
  CHECK_THROWS_AS(DatasetSchema({{"x", 0, Valence::kUnivalent, FieldGroup::kNonSequential}}),
                  SchemaError);
  CHECK_THROWS_AS(DatasetSchema({{"x", 2, Valence::kUnivalent, FieldGroup::kNonSequential},
                                 {"x", 2, Valence::kUnivalent, FieldGroup::kBehavior}}),
                  SchemaError);
  nlohmann::json extra = schema.to_json();
  extra[0]["colour"] = "red";
  CHECK_THROWS_AS(DatasetSchema::from_json(extra), SchemaError);
}

TEST_CASE("embed_field lookups and sums") {
  const FieldSchema uni{"u", 4, Valence::kUnivalent, FieldGroup::kNonSequential};
  const FieldSchema multi{"m", 4, Valence::kMultivalent, FieldGroup::kNonSequential};
  const Tensor table = Tensor::from({4, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(embed_field(table, uni, {3}).value() == std::vector<double>{6, 7});
  CHECK(embed_field(table, multi, {1, 2}).value() == std::vector<double>{6, 8});
  CHECK(embed_field(table, multi, {}).value() == std::vector<double>{0, 0});
  CHECK_THROWS(embed_field(table, uni, {4}));
  CHECK_THROWS(embed_field(table, uni, {0, 1}));
}

TEST_CASE("instance validation") {
  const DatasetSchema schema = small_schema();
  Instance inst = make_instance(2, 4);
  CHECK_NOTHROW(validate_instance(schema, inst));
  inst.non_seq[0] = {5};
  CHECK_THROWS_AS(validate_instance(schema, inst), SchemaError);
  inst = make_instance(2, 1);
  inst.behavior[0].pop_back();
  CHECK_THROWS_AS(validate_instance(schema, inst), SchemaError);
}

TEST_CASE("embed_instance concatenates behavior fields and masks padding") {
  const DatasetSchema schema = small_schema();
  ParamStore store;
  Rng rng(1);
  add_embedding_tables(store, schema, 3, rng);
  for (const auto& [name, t] : store.entries())
    for (double v : t.value()) CHECK(std::abs(v) <= kEmbeddingInitBound);

  const Instance inst = make_instance(2, 3);
  const InstanceEmbedding e = embed_instance(store, schema, inst, 4);
  REQUIRE(e.non_seq.size() == 2);
  CHECK(e.behavior.shape() == Shape{4, 6});
  CHECK(e.mask == std::vector<bool>{true, true, false, false});
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(e.behavior.at({2, j}) == 0.0);
    CHECK(e.behavior.at({3, j}) == 0.0);
  }
  // Position 1: item 1 then cat 1.
  CHECK(e.behavior.at({1, 0}) == store.at("emb.item").at({1, 0}));
  CHECK(e.behavior.at({1, 3}) == store.at("emb.cat").at({1, 0}));

  const InstanceEmbedding again = embed_instance(store, schema, inst, 4);
  CHECK(again.behavior.value() == e.behavior.value());

  const InstanceEmbedding empty = embed_instance(store, schema, make_instance(0, 3), 4);
  for (double v : empty.behavior.value()) CHECK(v == 0.0);
  CHECK(empty.mask == std::vector<bool>(4, false));
}

TEST_CASE("long sequences keep the most recent elements") {
  Instance inst = make_instance(7, 0);
  truncate_behavior(inst, 3);
  REQUIRE(inst.behavior.size() == 3);
  CHECK(inst.behavior.front()[0] == ValueSet{4});
  CHECK(inst.behavior.back()[0] == ValueSet{0});
}

TEST_CASE("pad_batch") {
  const DatasetSchema schema = small_schema();
  ParamStore store;
  Rng rng(2);
  add_embedding_tables(store, schema, 3, rng);
  const std::vector<Instance> two{make_instance(2, 0), make_instance(5, 4)};

  SUBCASE("masks follow sequence lengths") {
    const Batch b = pad_batch(store, schema, two, 5);
    CHECK(b.mask == std::vector<double>{1, 1, 0, 0, 0, 1, 1, 1, 1, 1});
    CHECK(b.behavior.shape() == Shape{2, 5, 6});
    CHECK(b.stacked_non_seq().shape() == Shape{2, 2, 3});
  }
  SUBCASE("a batch of one equals the unbatched embedding") {
    const Batch b = pad_batch(store, schema, std::span(two).subspan(1, 1), 5);
    const InstanceEmbedding e = embed_instance(store, schema, two[1], 5);
    CHECK(b.behavior.value() == e.behavior.value());
    CHECK(b.non_seq[1].value() == e.non_seq[1].value());
  }
  SUBCASE("permuting the batch permutes the outputs") {
    const std::vector<Instance> swapped{two[1], two[0]};
    const Batch a = pad_batch(store, schema, two, 5);
    const Batch b = pad_batch(store, schema, swapped, 5);
    const std::size_t row = 5 * 6;
    CHECK(std::equal(a.behavior.value().begin(), a.behavior.value().begin() + row,
                     b.behavior.value().begin() + row));
    CHECK(std::equal(a.behavior.value().begin() + row, a.behavior.value().end(),
                     b.behavior.value().begin()));
  }
}

TEST_CASE("embedding gradients match finite differences") {
  const DatasetSchema schema = small_schema();
  ParamStore store;
  Rng rng(3);
  add_embedding_tables(store, schema, 3, rng);
  std::vector<Instance> batch{make_instance(3, 1), make_instance(1, 2)};
  batch[1].non_seq[1] = {1, 1, 3};
  const std::vector<std::string> names = embedding_names(schema);
  std::vector<Tensor> inputs;
  for (const auto& n : names) inputs.push_back(store.at(n));
  auto forward = [&] {
    const Batch b = pad_batch(store, schema, batch, 4);
    const Tensor parts[] = {ops::reshape(b.behavior, {2, 24}), ops::concat(b.non_seq, 1)};
    return ops::concat(parts, 1);
  };
  CHECK(testing::gradcheck(forward, inputs, rng) <= testing::kGradTolerance);
}

TEST_CASE("dataset file round trip") {
  const DatasetSchema schema = small_schema();
  const auto dir = std::filesystem::temp_directory_path() / "recnas_fs_test";
  std::filesystem::create_directories(dir);
  std::vector<Instance> data{make_instance(3, 1), make_instance(0, 2)};
  data[0].target = BehaviorElement{{5}, {2}};
  data[1].target = BehaviorElement{{0}, {0}};
  save_dataset(dir / "d.jsonl", schema, data);
  schema.save(dir / "schema.json");
  const DatasetSchema loaded_schema = DatasetSchema::load(dir / "schema.json");
  CHECK(load_dataset(dir / "d.jsonl", loaded_schema) == data);
  std::filesystem::remove_all(dir);
}

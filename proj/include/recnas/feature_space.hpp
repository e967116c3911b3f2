// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-field categorical instances and the embedding layer. Non-sequential
// fields embed to one K-vector each; every behavior element embeds to the
// concatenation of its behavior-field embeddings (width N_b * K).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/init.hpp"
#include "recnas/param_store.hpp"
#include "recnas/tensor.hpp"

namespace recnas {

enum class Valence { kUnivalent, kMultivalent };
enum class FieldGroup { kNonSequential, kBehavior };

struct FieldSchema {
  std::string name;
  std::size_t cardinality = 1;
  Valence valence = Valence::kUnivalent;
  FieldGroup group = FieldGroup::kNonSequential;
};

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DatasetSchema {
 public:
  DatasetSchema() = default;
  explicit DatasetSchema(std::vector<FieldSchema> fields);

  const std::vector<FieldSchema>& fields() const { return fields_; }
  // Fields of each group, in declaration order.
  const std::vector<FieldSchema>& non_sequential() const { return non_seq_; }
  const std::vector<FieldSchema>& behavior() const { return behavior_; }
  std::size_t num_non_sequential() const { return non_seq_.size(); }
  std::size_t num_behavior() const { return behavior_.size(); }
  std::size_t non_sequential_index(const std::string& name) const;

  nlohmann::json to_json() const;
  static DatasetSchema from_json(const nlohmann::json& j);
  static DatasetSchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<FieldSchema> fields_;
  std::vector<FieldSchema> non_seq_;
  std::vector<FieldSchema> behavior_;
};

using ValueSet = std::vector<std::int64_t>;
// One value set per behavior field, in schema order.
using BehaviorElement = std::vector<ValueSet>;

struct Instance {
  std::vector<ValueSet> non_seq;
  std::vector<BehaviorElement> behavior;  // oldest first
  std::optional<BehaviorElement> target;
  std::int64_t label = 0;  // click label, or next-item id

  bool operator==(const Instance&) const = default;
};

// Throws SchemaError on wrong field counts, out-of-range ids, or univalent
// fields without exactly one id.
void validate_instance(const DatasetSchema& schema, const Instance& instance);

// Keeps the most recent `max_len` behavior elements.
void truncate_behavior(Instance& instance, std::size_t max_len);

nlohmann::json instance_to_json(const DatasetSchema& schema, const Instance& instance);
Instance instance_from_json(const DatasetSchema& schema, const nlohmann::json& j);

// Newline-delimited JSON records.
std::vector<Instance> load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);
void save_dataset(const std::filesystem::path& path, const DatasetSchema& schema,
                  std::span<const Instance> instances);

inline constexpr double kEmbeddingInitBound = 0.05;

std::string embedding_name(const FieldSchema& field);
// Adds one (cardinality, K) table per field, uniform in +-0.05.
void add_embedding_tables(ParamStore& store, const DatasetSchema& schema, std::size_t width,
                          Rng& rng);
std::vector<std::string> embedding_names(const DatasetSchema& schema);

// Univalent: the row; multivalent: sum of rows (zero vector when empty).
Tensor embed_field(const Tensor& table, const FieldSchema& field, const ValueSet& values);

struct InstanceEmbedding {
  std::vector<Tensor> non_seq;  // N tensors of shape (K)
  Tensor behavior;              // (T, N_b*K); undefined when N_b == 0
  std::vector<bool> mask;       // length T
};

InstanceEmbedding embed_instance(const ParamStore& store, const DatasetSchema& schema,
                                 const Instance& instance, std::size_t max_len);

// Index-only form of a padded batch. Pure and shareable across threads.
struct Bag {
  std::vector<std::size_t> offsets{0};
  std::vector<std::int64_t> ids;
  void push(const ValueSet& values);
  void push_empty() { offsets.push_back(ids.size()); }
};

struct IdBatch {
  std::size_t size = 0;
  std::size_t steps = 0;                 // T
  std::vector<Bag> non_seq;              // per field, `size` rows
  std::vector<Bag> behavior;             // per behavior field, size*steps rows
  std::vector<Bag> target;               // per behavior field, `size` rows (empty if no target)
  std::vector<double> mask;              // size*steps flags
  std::vector<std::size_t> lengths;      // true sequence lengths
  std::vector<std::int64_t> labels;
  // Next-item training and evaluation candidates.
  std::vector<std::vector<std::int64_t>> positives;
  std::vector<std::vector<std::int64_t>> negatives;

  bool has_target() const { return !target.empty(); }
};

IdBatch make_id_batch(const DatasetSchema& schema, std::span<const Instance> instances,
                      std::size_t max_len);

struct Batch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::vector<Tensor> non_seq;  // N tensors of shape (B, K)
  Tensor behavior;              // (B, T, N_b*K), masked rows zero; undefined when N_b == 0
  Tensor target;                // (B, N_b*K); undefined without target items
  std::vector<double> mask;     // B*T flags
  std::vector<std::size_t> lengths;

  // (B, N, K) view of the non-sequential block.
  Tensor stacked_non_seq() const;
};

Batch embed_batch(const ParamStore& store, const DatasetSchema& schema, const IdBatch& ids);
Batch pad_batch(const ParamStore& store, const DatasetSchema& schema,
                std::span<const Instance> instances, std::size_t max_len);

}  // namespace recnas

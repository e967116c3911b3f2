// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/feature_space.hpp"

#include <fstream>
#include <set>

#include "recnas/ops.hpp"

namespace recnas {

using nlohmann::json;

DatasetSchema::DatasetSchema(std::vector<FieldSchema> fields) : fields_(std::move(fields)) {
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw SchemaError("field with empty name");
    if (!seen.insert(f.name).second) throw SchemaError("duplicate field '" + f.name + "'");
    if (f.cardinality < 1) throw SchemaError("field '" + f.name + "' needs cardinality >= 1");
    (f.group == FieldGroup::kBehavior ? behavior_ : non_seq_).push_back(f);
  }
}

std::size_t DatasetSchema::non_sequential_index(const std::string& name) const {
  for (std::size_t i = 0; i < non_seq_.size(); ++i)
    if (non_seq_[i].name == name) return i;
  throw SchemaError("no non-sequential field '" + name + "'");
}

json DatasetSchema::to_json() const {
  json out = json::array();
  for (const auto& f : fields_) {
    out.push_back({{"name", f.name},
                   {"cardinality", f.cardinality},
                   {"valence", f.valence == Valence::kUnivalent ? "univalent" : "multivalent"},
                   {"group", f.group == FieldGroup::kBehavior ? "behavior" : "non_sequential"}});
  }
  return out;
}

DatasetSchema DatasetSchema::from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("schema must be a JSON list of fields");
  std::vector<FieldSchema> fields;
  for (const auto& e : j) {
    for (const auto& [key, _] : e.items()) {
      if (key != "name" && key != "cardinality" && key != "valence" && key != "group")
        throw SchemaError("unknown schema key '" + key + "'");
    }
    FieldSchema f;
    f.name = e.at("name").get<std::string>();
    const auto card = e.at("cardinality").get<long long>();
    if (card < 1) throw SchemaError("field '" + f.name + "' needs cardinality >= 1");
    f.cardinality = static_cast<std::size_t>(card);
    const std::string valence = e.value("valence", "univalent");
    if (valence == "univalent") {
      f.valence = Valence::kUnivalent;
    } else if (valence == "multivalent") {
      f.valence = Valence::kMultivalent;
    } else {
      throw SchemaError("field '" + f.name + "': unknown valence '" + valence + "'");
    }
    const std::string group = e.value("group", "non_sequential");
    if (group == "non_sequential") {
      f.group = FieldGroup::kNonSequential;
    } else if (group == "behavior") {
      f.group = FieldGroup::kBehavior;
    } else {
      throw SchemaError("field '" + f.name + "': unknown group '" + group + "'");
    }
    fields.push_back(std::move(f));
  }
  return DatasetSchema(std::move(fields));
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read schema " + path.string());
  return from_json(json::parse(in));
}

void DatasetSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  out << to_json().dump(2) << '\n';
}

namespace {

void check_values(const FieldSchema& field, const ValueSet& values) {
  if (field.valence == Valence::kUnivalent && values.size() != 1) {
    throw SchemaError("univalent field '" + field.name + "' needs exactly one id");
  }
  for (auto id : values) {
    if (id < 0 || static_cast<std::size_t>(id) >= field.cardinality) {
      throw SchemaError("id " + std::to_string(id) + " out of range for field '" + field.name +
                        "' (cardinality " + std::to_string(field.cardinality) + ")");
    }
  }
}

void check_element(const DatasetSchema& schema, const BehaviorElement& element) {
  if (element.size() != schema.num_behavior()) {
    throw SchemaError("behavior element has " + std::to_string(element.size()) +
                      " fields, schema has " + std::to_string(schema.num_behavior()));
  }
  for (std::size_t f = 0; f < element.size(); ++f) check_values(schema.behavior()[f], element[f]);
}

json element_to_json(const DatasetSchema& schema, const BehaviorElement& element) {
  json out = json::object();
  for (std::size_t f = 0; f < element.size(); ++f) out[schema.behavior()[f].name] = element[f];
  return out;
}

BehaviorElement element_from_json(const DatasetSchema& schema, const json& j) {
  // An element is an object {field: [ids]}; a list of such objects is merged.
  json merged = json::object();
  if (j.is_array()) {
    for (const auto& part : j) merged.update(part);
  } else {
    merged = j;
  }
  BehaviorElement element(schema.num_behavior());
  for (const auto& [key, _] : merged.items()) {
    bool known = false;
    for (const auto& f : schema.behavior()) known = known || f.name == key;
    if (!known) throw SchemaError("unknown behavior field '" + key + "'");
  }
  for (std::size_t f = 0; f < schema.num_behavior(); ++f) {
    const auto& name = schema.behavior()[f].name;
    if (merged.contains(name)) element[f] = merged.at(name).get<ValueSet>();
  }
  return element;
}

}  // namespace

void validate_instance(const DatasetSchema& schema, const Instance& instance) {
  if (instance.non_seq.size() != schema.num_non_sequential()) {
    throw SchemaError("instance has " + std::to_string(instance.non_seq.size()) +
                      " non-sequential fields, schema has " +
                      std::to_string(schema.num_non_sequential()));
  }
  for (std::size_t f = 0; f < instance.non_seq.size(); ++f)
    check_values(schema.non_sequential()[f], instance.non_seq[f]);
  for (const auto& element : instance.behavior) check_element(schema, element);
  if (instance.target) check_element(schema, *instance.target);
}

void truncate_behavior(Instance& instance, std::size_t max_len) {
  if (instance.behavior.size() > max_len) {
    instance.behavior.erase(instance.behavior.begin(),
                            instance.behavior.end() - static_cast<std::ptrdiff_t>(max_len));
  }
}

json instance_to_json(const DatasetSchema& schema, const Instance& instance) {
  json non_seq = json::object();
  for (std::size_t f = 0; f < instance.non_seq.size(); ++f)
    non_seq[schema.non_sequential()[f].name] = instance.non_seq[f];
  json behavior = json::array();
  for (const auto& e : instance.behavior) behavior.push_back(element_to_json(schema, e));
  json out = {{"non_seq", non_seq}, {"behavior", behavior}, {"label", instance.label}};
  if (instance.target) out["target"] = element_to_json(schema, *instance.target);
  return out;
}

Instance instance_from_json(const DatasetSchema& schema, const json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "non_seq" && key != "behavior" && key != "target" && key != "label")
      throw SchemaError("unknown record key '" + key + "'");
  }
  Instance inst;
  inst.non_seq.resize(schema.num_non_sequential());
  if (j.contains("non_seq")) {
    const auto& ns = j.at("non_seq");
    for (const auto& [key, _] : ns.items()) schema.non_sequential_index(key);
    for (std::size_t f = 0; f < schema.num_non_sequential(); ++f) {
      const auto& name = schema.non_sequential()[f].name;
      if (ns.contains(name)) inst.non_seq[f] = ns.at(name).get<ValueSet>();
    }
  }
  if (j.contains("behavior")) {
    for (const auto& e : j.at("behavior")) inst.behavior.push_back(element_from_json(schema, e));
  }
  if (j.contains("target") && !j.at("target").is_null())
    inst.target = element_from_json(schema, j.at("target"));
  inst.label = j.value("label", std::int64_t{0});
  validate_instance(schema, inst);
  return inst;
}

std::vector<Instance> load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read dataset " + path.string());
  std::vector<Instance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(instance_from_json(schema, json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const DatasetSchema& schema,
                  std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw SchemaError("cannot write dataset " + path.string());
  for (const auto& inst : instances) out << instance_to_json(schema, inst).dump() << '\n';
}

std::string embedding_name(const FieldSchema& field) { return "emb." + field.name; }

void add_embedding_tables(ParamStore& store, const DatasetSchema& schema, std::size_t width,
                          Rng& rng) {
  for (const auto& f : schema.fields())
    store.add(embedding_name(f), uniform_param({f.cardinality, width}, kEmbeddingInitBound, rng));
}

std::vector<std::string> embedding_names(const DatasetSchema& schema) {
  std::vector<std::string> out;
  for (const auto& f : schema.fields()) out.push_back(embedding_name(f));
  return out;
}

Tensor embed_field(const Tensor& table, const FieldSchema& field, const ValueSet& values) {
  check_values(field, values);
  const std::vector<std::size_t> offsets{0, values.size()};
  return ops::reshape(ops::embedding_bag(table, offsets, values), {table.dim(1)});
}

void Bag::push(const ValueSet& values) {
  ids.insert(ids.end(), values.begin(), values.end());
  offsets.push_back(ids.size());
}

InstanceEmbedding embed_instance(const ParamStore& store, const DatasetSchema& schema,
                                 const Instance& instance, std::size_t max_len) {
  validate_instance(schema, instance);
  const Instance one[] = {instance};
  const Batch batch = pad_batch(store, schema, one, max_len);
  InstanceEmbedding out;
  for (const auto& t : batch.non_seq) out.non_seq.push_back(ops::reshape(t, {t.dim(1)}));
  if (batch.behavior.defined())
    out.behavior = ops::reshape(batch.behavior, {batch.steps, batch.behavior.dim(2)});
  for (double m : batch.mask) out.mask.push_back(m != 0.0);
  return out;
}

IdBatch make_id_batch(const DatasetSchema& schema, std::span<const Instance> instances,
                      std::size_t max_len) {
  IdBatch b;
  b.size = instances.size();
  b.steps = max_len;
  b.non_seq.resize(schema.num_non_sequential());
  b.behavior.resize(schema.num_behavior());
  const bool has_target = !instances.empty() && instances.front().target.has_value();
  if (has_target) b.target.resize(schema.num_behavior());
  for (const auto& inst : instances) {
    if (inst.non_seq.size() != schema.num_non_sequential())
      throw SchemaError("instance does not match schema");
    for (std::size_t f = 0; f < b.non_seq.size(); ++f) b.non_seq[f].push(inst.non_seq[f]);
    const std::size_t len = std::min(inst.behavior.size(), max_len);
    const std::size_t first = inst.behavior.size() - len;  // most recent elements
    for (std::size_t t = 0; t < max_len; ++t) {
      const bool valid = t < len;
      b.mask.push_back(valid ? 1.0 : 0.0);
      for (std::size_t f = 0; f < b.behavior.size(); ++f) {
        if (valid) {
          b.behavior[f].push(inst.behavior[first + t].at(f));
        } else {
          b.behavior[f].push_empty();
        }
      }
    }
    b.lengths.push_back(len);
    if (has_target) {
      if (!inst.target) throw SchemaError("batch mixes instances with and without target");
      for (std::size_t f = 0; f < b.target.size(); ++f) b.target[f].push(inst.target->at(f));
    }
    b.labels.push_back(inst.label);
  }
  return b;
}

Tensor Batch::stacked_non_seq() const {
  std::vector<Tensor> parts;
  for (const auto& t : non_seq) parts.push_back(ops::reshape(t, {size, 1, t.dim(1)}));
  return ops::concat(parts, 1);
}

Batch embed_batch(const ParamStore& store, const DatasetSchema& schema, const IdBatch& ids) {
  Batch out;
  out.size = ids.size;
  out.steps = ids.steps;
  out.mask = ids.mask;
  out.lengths = ids.lengths;
  for (std::size_t f = 0; f < schema.num_non_sequential(); ++f) {
    const Tensor& table = store.at(embedding_name(schema.non_sequential()[f]));
    out.non_seq.push_back(ops::embedding_bag(table, ids.non_seq[f].offsets, ids.non_seq[f].ids));
  }
  if (schema.num_behavior() > 0 && ids.steps > 0 && ids.size > 0) {
    std::vector<Tensor> parts, target_parts;
    for (std::size_t f = 0; f < schema.num_behavior(); ++f) {
      const Tensor& table = store.at(embedding_name(schema.behavior()[f]));
      parts.push_back(ops::embedding_bag(table, ids.behavior[f].offsets, ids.behavior[f].ids));
      if (ids.has_target())
        target_parts.push_back(ops::embedding_bag(table, ids.target[f].offsets, ids.target[f].ids));
    }
    const Tensor flat = parts.size() == 1 ? parts[0] : ops::concat(parts, 1);
    out.behavior = ops::reshape(flat, {ids.size, ids.steps, flat.dim(1)});
    if (ids.has_target()) out.target = target_parts.size() == 1 ? target_parts[0] : ops::concat(target_parts, 1);
  }
  return out;
}

Batch pad_batch(const ParamStore& store, const DatasetSchema& schema,
                std::span<const Instance> instances, std::size_t max_len) {
  return embed_batch(store, schema, make_id_batch(schema, instances, max_len));
}

}  // namespace recnas

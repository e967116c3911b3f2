// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "recnas/param_store.hpp"

namespace recnas {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds parse through the size_t reader");

// Reads the keys of one JSON object, remembering which were consumed so the
// rest can be reported as unknown.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, fs::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }
  void get(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of non-negative integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned()) fail(key, "expected an array of non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void get(const std::string& key, Activation& out) {
    if (const json* v = find(key)) {
      try {
        out = parse_activation(v->get<std::string>());
      } catch (const std::exception&) {
        fail(key, "expected an activation name");
      }
    }
  }
  void get(const std::string& key, Task& out) {
    if (const json* v = find(key)) {
      try {
        out = parse_task(v->get<std::string>());
      } catch (const std::exception&) {
        fail(key, "expected \"ctr\" or \"next-item\"");
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) fail(key, "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string field = where_;
    if (!key.empty()) field += field.empty() ? key : "." + key;
    throw ConfigError((field.empty() ? std::string("config") : field) + ": " + what);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json data_json(const DataPaths& d) {
  return {{"schema", d.schema.generic_string()},
          {"train", d.train.generic_string()},
          {"validation", d.validation.generic_string()},
          {"test", d.test.generic_string()}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

fs::path RunConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

json RunConfig::to_json() const {
  const SearchConfig& s = search;
  return {
      {"data", data_json(data)},
      {"out", out.generic_string()},
      {"seed", s.seed},
      {"task", task_name(s.task)},
      {"stages", {{"blocks", s.run_blocks}, {"interactions", s.run_interactions}, {"mlp", s.run_mlp}}},
      {"search",
       {{"width", s.width},
        {"batch_size", s.batch_size},
        {"max_len", s.max_len},
        {"validation_batches", s.validation_batches},
        {"eval_negatives", s.eval_negatives},
        {"train_negatives", s.train_negatives},
        {"exclude_history", s.exclude_history},
        {"num_blocks", s.num_blocks},
        {"layer_set", s.layer_set},
        {"base_hidden", s.base_hidden},
        {"oneshot_epochs", s.oneshot_epochs},
        {"patience", s.patience},
        {"curve_architectures", s.curve_architectures},
        {"lr_oneshot", s.lr_oneshot},
        {"num_samples", s.num_samples},
        {"top_n", s.top_n},
        {"finetune_epochs", s.finetune_epochs},
        {"lr_finetune", s.lr_finetune},
        {"rounds", s.rounds},
        {"beam", s.beam},
        {"keep", s.keep},
        {"interaction_epochs", s.interaction_epochs},
        {"interaction_batch_size", s.interaction_batch_size},
        {"interaction_hidden", s.interaction_hidden},
        {"interaction_activation", activation_name(s.interaction_activation)},
        {"lr_interaction", s.lr_interaction},
        {"mlp_layers", s.mlp_layers},
        {"mlp_epochs", s.mlp_epochs},
        {"mlp_uses_step1_blocks", s.mlp_uses_step1_blocks}}},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  SearchConfig& s = c.search;
  StrictObject top(j, "");
  if (const json* d = top.find("data")) {
    StrictObject o(*d, "data");
    o.get("schema", c.data.schema);
    o.get("train", c.data.train);
    o.get("validation", c.data.validation);
    o.get("test", c.data.test);
    o.finish();
  }
  top.get("out", c.out);
  top.get("seed", s.seed);
  top.get("task", s.task);
  if (const json* st = top.find("stages")) {
    StrictObject o(*st, "stages");
    o.get("blocks", s.run_blocks);
    o.get("interactions", s.run_interactions);
    o.get("mlp", s.run_mlp);
    o.finish();
  }
  if (const json* se = top.find("search")) {
    StrictObject o(*se, "search");
    o.get("width", s.width);
    o.get("batch_size", s.batch_size);
    o.get("max_len", s.max_len);
    o.get("validation_batches", s.validation_batches);
    o.get("eval_negatives", s.eval_negatives);
    o.get("train_negatives", s.train_negatives);
    o.get("exclude_history", s.exclude_history);
    o.get("num_blocks", s.num_blocks);
    o.get("layer_set", s.layer_set);
    o.get("base_hidden", s.base_hidden);
    o.get("oneshot_epochs", s.oneshot_epochs);
    o.get("patience", s.patience);
    o.get("curve_architectures", s.curve_architectures);
    o.get("lr_oneshot", s.lr_oneshot);
    o.get("num_samples", s.num_samples);
    o.get("top_n", s.top_n);
    o.get("finetune_epochs", s.finetune_epochs);
    o.get("lr_finetune", s.lr_finetune);
    o.get("rounds", s.rounds);
    o.get("beam", s.beam);
    o.get("keep", s.keep);
    o.get("interaction_epochs", s.interaction_epochs);
    o.get("interaction_batch_size", s.interaction_batch_size);
    o.get("interaction_hidden", s.interaction_hidden);
    o.get("interaction_activation", s.interaction_activation);
    o.get("lr_interaction", s.lr_interaction);
    o.get("mlp_layers", s.mlp_layers);
    o.get("mlp_epochs", s.mlp_epochs);
    o.get("mlp_uses_step1_blocks", s.mlp_uses_step1_blocks);
    o.finish();
  }
  top.finish();
  return c;
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> errors;
  const SearchConfig& s = c.search;
  const auto need = [&](bool ok, const std::string& field, const std::string& what) {
    if (!ok) errors.push_back(field + ": " + what);
  };
  const std::pair<const char*, const fs::path*> paths[] = {
      {"data.schema", &c.data.schema}, {"data.train", &c.data.train},
      {"data.validation", &c.data.validation}, {"data.test", &c.data.test}};
  for (const auto& [field, p] : paths) {
    if (p->empty()) {
      errors.push_back(std::string(field) + ": required");
    } else if (!fs::is_regular_file(c.resolve(*p))) {
      errors.push_back(std::string(field) + ": no such file " + c.resolve(*p).string());
    }
  }
  need(!c.out.empty(), "out", "must not be empty");

  const std::pair<const char*, std::size_t> positive[] = {
      {"search.width", s.width},
      {"search.batch_size", s.batch_size},
      {"search.max_len", s.max_len},
      {"search.eval_negatives", s.eval_negatives},
      {"search.train_negatives", s.train_negatives},
      {"search.num_blocks", s.num_blocks},
      {"search.patience", s.patience},
      {"search.curve_architectures", s.curve_architectures},
      {"search.num_samples", s.num_samples},
      {"search.top_n", s.top_n},
      {"search.beam", s.beam},
      {"search.keep", s.keep},
      {"search.interaction_epochs", s.interaction_epochs},
      {"search.interaction_batch_size", s.interaction_batch_size},
      {"search.mlp_layers", s.mlp_layers},
  };
  for (const auto& [field, v] : positive) need(v > 0, field, "must be at least 1");
  need(s.top_n <= s.num_samples, "search.top_n", "must not exceed num_samples");
  need(s.keep <= s.beam, "search.keep", "must not exceed beam");

  const std::pair<const char*, double> rates[] = {
      {"search.lr_oneshot", s.lr_oneshot}, {"search.lr_finetune", s.lr_finetune},
      {"search.lr_interaction", s.lr_interaction}};
  for (const auto& [field, v] : rates) need(std::isfinite(v) && v > 0.0, field, "must be a positive number");

  for (auto w : s.base_hidden) need(w > 0, "search.base_hidden", "widths must be at least 1");
  need(!s.interaction_hidden.empty(), "search.interaction_hidden", "needs at least one layer");
  for (auto w : s.interaction_hidden) need(w > 0, "search.interaction_hidden", "widths must be at least 1");
  need(s.interaction_activation != Activation::kDice, "search.interaction_activation", "Dice is not supported here");
  for (const auto& name : s.layer_set) {
    try {
      parse_layer_choice(name);
    } catch (const std::exception&) {
      errors.push_back("search.layer_set: unknown layer '" + name + "'");
    }
  }
  need(s.run_blocks || s.run_mlp, "stages", "blocks or mlp must run to produce a model");
  need(!s.mlp_uses_step1_blocks || s.run_blocks, "search.mlp_uses_step1_blocks", "needs the blocks stage");
  return errors;
}

std::vector<std::string> validate_against_schema(const RunConfig& c, const DatasetSchema& schema) {
  std::vector<std::string> errors;
  const SearchConfig& s = c.search;
  if (s.task == Task::kNextItem && schema.num_behavior() == 0)
    errors.push_back("task: next-item needs a behavior field");
  if (s.run_blocks && schema.num_behavior() == 0) errors.push_back("stages.blocks: the schema has no behavior fields");
  if (s.run_interactions && s.task != Task::kCtr) errors.push_back("stages.interactions: only runs for ctr tasks");
  if (s.run_interactions && schema.num_non_sequential() < 2)
    errors.push_back("stages.interactions: needs at least two non-sequential fields");
  return errors;
}

RunConfig parse_config(const fs::path& path) {
  const std::string text = read_file(path);
  json j = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  RunConfig c = config_from_json(j);
  c.base_dir = path.parent_path();
  const auto errors = validate_config(c);
  if (!errors.empty()) {
    std::string message = "invalid config " + path.string();
    for (const auto& e : errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  return c;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

json RunConfig::identity_json() const {
  json j = to_json();
  j.erase("out");
  return j;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a(config.identity_json().dump())); }

std::string file_digest(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

Dataset load_run_data(const RunConfig& config) {
  Dataset data;
  data.schema = DatasetSchema::load(config.resolve(config.data.schema));
  data.train = load_dataset(config.resolve(config.data.train), data.schema);
  data.validation = load_dataset(config.resolve(config.data.validation), data.schema);
  data.test = load_dataset(config.resolve(config.data.test), data.schema);
  const auto errors = validate_against_schema(config, data.schema);
  if (!errors.empty()) {
    std::string message = "config does not fit the dataset";
    for (const auto& e : errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  return data;
}

json ArtifactManifest::to_json() const {
  return {{"tool_version", tool_version}, {"config_hash", config_hash}, {"seed", seed},
          {"config", config},             {"data", data},               {"winners", winners},
          {"metrics", metrics},           {"checkpoints", checkpoints}, {"files", files}};
}

ArtifactManifest ArtifactManifest::from_json(const json& j) {
  ArtifactManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.data = j.at("data");
    m.winners = j.at("winners");
    m.metrics = j.at("metrics");
    m.checkpoints = j.at("checkpoints").get<std::map<std::string, std::string>>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

namespace {

void check_references(const fs::path& dir, const ArtifactManifest& m) {
  for (const auto& [name, rel] : m.checkpoints)
    if (!fs::is_regular_file(dir / rel / "manifest.json"))
      throw IntegrityError("checkpoint '" + name + "' is missing: " + (dir / rel).string());
  for (const auto& [name, rel] : m.files)
    if (!fs::is_regular_file(dir / rel)) throw IntegrityError("file '" + name + "' is missing: " + (dir / rel).string());
}

}  // namespace

void save_manifest(const fs::path& dir, const ArtifactManifest& manifest) {
  check_references(dir, manifest);
  const fs::path tmp = dir / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << manifest.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, dir / kManifestFile);
}

ArtifactManifest load_manifest(const fs::path& dir) {
  const fs::path file = dir / kManifestFile;
  if (!fs::is_regular_file(file)) throw IntegrityError("no manifest in " + dir.string());
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("malformed manifest: ") + e.what());
  }
  ArtifactManifest m = ArtifactManifest::from_json(j);
  check_references(dir, m);
  return m;
}

}  // namespace recnas

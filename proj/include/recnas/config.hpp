// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration (strict JSON) and the artifact manifest written next to
// search outputs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/search.hpp"

namespace recnas {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataPaths {
  std::filesystem::path schema, train, validation, test;
};

struct RunConfig {
  DataPaths data;
  std::filesystem::path out = "out";
  SearchConfig search;
  // Relative data paths resolve against this; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  nlohmann::json to_json() const;
  // to_json() without the output directory, which does not affect results.
  nlohmann::json identity_json() const;
};

// Strict: unknown keys and ill-typed values throw ConfigError naming the
// field. Missing keys keep their defaults. Does not validate values.
RunConfig config_from_json(const nlohmann::json& j);
// Field-level problems, empty when the config is usable.
std::vector<std::string> validate_config(const RunConfig& config);
// Checks the stage toggles and task against the dataset's fields.
std::vector<std::string> validate_against_schema(const RunConfig& config, const DatasetSchema& schema);
// Reads, parses and validates; an empty file means every default.
RunConfig parse_config(const std::filesystem::path& path);

// FNV-1a over the canonical identity_json() dump, 16 hex digits.
std::string config_hash(const RunConfig& config);
std::uint64_t fnv1a(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

Dataset load_run_data(const RunConfig& config);

struct ArtifactManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config;
  nlohmann::json data;     // split name -> {path, digest}
  nlohmann::json winners;  // blocks, interactions, mlp; null when a step did not run
  nlohmann::json metrics;
  // Name -> path relative to the manifest directory.
  std::map<std::string, std::string> checkpoints;
  std::map<std::string, std::string> files;

  nlohmann::json to_json() const;
  static ArtifactManifest from_json(const nlohmann::json& j);
  bool operator==(const ArtifactManifest& other) const = default;
};

inline constexpr const char* kManifestFile = "manifest.json";

// Every referenced file must already exist; the manifest is written last,
// through a temporary file and a rename.
void save_manifest(const std::filesystem::path& dir, const ArtifactManifest& manifest);
// Throws IntegrityError when a referenced file or checkpoint is missing.
ArtifactManifest load_manifest(const std::filesystem::path& dir);

}  // namespace recnas

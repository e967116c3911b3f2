// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "recnas/tensor.hpp"

namespace recnas {

// Ordered, named collection of leaf tensors. Trainable entries require
// gradients; buffers (running statistics) do not.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor tensor);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::string> names() const;
  std::vector<Tensor> trainable() const;
  std::vector<Tensor> trainable(const std::vector<std::string>& names) const;

  // Deep copy of every entry.
  ParamStore clone() const;
  // Deep copy of the named entries, in the order given.
  ParamStore subset(const std::vector<std::string>& names) const;
  // Overwrites values of entries present in both stores with equal shapes;
  // returns how many were copied.
  std::size_t copy_matching(const ParamStore& source);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes one raw little-endian f64 file per tensor, then manifest.json listing
// {name, shape, dtype: "f64", file, trainable}. The manifest is written last.
void save_checkpoint(const ParamStore& store, const std::filesystem::path& dir);
// Throws IntegrityError when a listed file is missing or has the wrong size.
ParamStore load_checkpoint(const std::filesystem::path& dir);

}  // namespace recnas

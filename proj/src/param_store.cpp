// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/param_store.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace recnas {

Tensor& ParamStore::add(const std::string& name, Tensor tensor) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(tensor));
  return entries_.back().second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return entries_[it->second].second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return entries_[it->second].second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<Tensor> ParamStore::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [_, t] : entries_)
    if (t.requires_grad()) out.push_back(t);
  return out;
}

std::vector<Tensor> ParamStore::trainable(const std::vector<std::string>& names) const {
  std::vector<Tensor> out;
  for (const auto& n : names) {
    const Tensor& t = at(n);
    if (t.requires_grad()) out.push_back(t);
  }
  return out;
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const auto& [name, t] : entries_) copy.add(name, t.clone());
  return copy;
}

ParamStore ParamStore::subset(const std::vector<std::string>& names) const {
  ParamStore copy;
  for (const auto& n : names) copy.add(n, at(n).clone());
  return copy;
}

std::size_t ParamStore::copy_matching(const ParamStore& source) {
  std::size_t copied = 0;
  for (auto& [name, t] : entries_) {
    if (!source.contains(name)) continue;
    const Tensor& src = source.at(name);
    if (src.shape() != t.shape()) continue;
    auto dst = t.mutable_data();
    std::copy(src.value().begin(), src.value().end(), dst.begin());
    ++copied;
  }
  return copied;
}

namespace {

std::string file_name_for(std::size_t index) { return "t" + std::to_string(index) + ".f64"; }

void write_le(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

std::vector<double> read_le(std::ifstream& in, std::size_t count) {
  std::vector<double> values(count);
  for (auto& v : values) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json listing = nlohmann::json::array();
  std::size_t i = 0;
  for (const auto& [name, t] : store.entries()) {
    const std::string file = file_name_for(i++);
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    write_le(out, t.value());
    listing.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"dtype", "f64"},
                       {"file", file},
                       {"trainable", t.requires_grad()}});
  }
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << nlohmann::json{{"tensors", listing}}.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir / "manifest.json");
}

ParamStore load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IntegrityError("missing checkpoint manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  ParamStore store;
  for (const auto& entry : manifest.at("tensors")) {
    if (entry.at("dtype") != "f64") throw IntegrityError("unsupported dtype in checkpoint");
    const auto path = dir / entry.at("file").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    const std::size_t count = shape_numel(shape);
    if (!std::filesystem::exists(path)) throw IntegrityError("missing tensor file " + path.string());
    if (std::filesystem::file_size(path) != count * 8) {
      throw IntegrityError("tensor file " + path.string() + " has the wrong size");
    }
    std::ifstream data(path, std::ios::binary);
    auto values = read_le(data, count);
    Tensor t = entry.value("trainable", true) ? Tensor::parameter(std::move(shape), std::move(values))
                                              : Tensor::from(std::move(shape), std::move(values));
    store.add(entry.at("name").get<std::string>(), std::move(t));
  }
  return store;
}

}  // namespace recnas

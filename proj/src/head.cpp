// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/head.hpp"

#include <cmath>
#include <stdexcept>

#include "recnas/ops.hpp"

namespace recnas {

using nlohmann::json;

std::size_t realized_width(std::size_t tenths, std::size_t input_width) {
  const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(tenths * input_width) / 10.0));
  return std::max<std::size_t>(1, w);
}

std::vector<std::size_t> realized_widths(const MlpSpec& spec, std::size_t input_width) {
  std::vector<std::size_t> out;
  for (const auto& l : spec.layers) out.push_back(realized_width(l.tenths, input_width));
  return out;
}

void validate_mlp_spec(const MlpSpec& spec) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.tenths < 1 || l.tenths > 10)
      throw std::invalid_argument("layer " + std::to_string(i) + ": width fraction out of range");
    if (l.act == Activation::kGeLU)
      throw std::invalid_argument("layer " + std::to_string(i) + ": GeLU is not an MLP candidate");
    if (i > 0 && l.tenths > spec.layers[i - 1].tenths)
      throw std::invalid_argument("layer " + std::to_string(i) + " is wider than its input layer");
  }
}

std::vector<std::vector<std::size_t>> monotone_width_tuples(std::size_t layers) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  auto recurse = [&](auto&& self, std::size_t cap) -> void {
    if (current.size() == layers) {
      out.push_back(current);
      return;
    }
    for (std::size_t t = cap; t >= 1; --t) {
      current.push_back(t);
      self(self, t);
      current.pop_back();
    }
  };
  recurse(recurse, 10);
  return out;
}

std::vector<Activation> mlp_activations() {
  return {Activation::kReLU, Activation::kSwish, Activation::kIdentity, Activation::kDice};
}

MlpSpec sample_mlp_spec(std::size_t layers, std::span<const Activation> acts, Rng& rng) {
  const auto tuples = monotone_width_tuples(layers);
  std::uniform_int_distribution<std::size_t> pick_tuple(0, tuples.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_act(0, acts.size() - 1);
  const auto& widths = tuples[pick_tuple(rng)];
  MlpSpec spec;
  for (std::size_t l = 0; l < layers; ++l) spec.layers.push_back({widths[l], acts[pick_act(rng)]});
  return spec;
}

json mlp_spec_to_json(const MlpSpec& spec, std::size_t input_width) {
  json out = json::array();
  for (const auto& l : spec.layers)
    out.push_back({{"width", realized_width(l.tenths, input_width)}, {"activation", activation_name(l.act)}});
  return out;
}

MlpSpec mlp_spec_from_json(const json& j, std::size_t input_width) {
  if (!j.is_array()) throw std::invalid_argument("MLP spec must be a JSON array");
  MlpSpec spec;
  for (const auto& layer : j) {
    for (const auto& [key, _] : layer.items())
      if (key != "width" && key != "activation")
        throw std::invalid_argument("unknown MLP layer key '" + key + "'");
    const std::size_t width = layer.at("width").get<std::size_t>();
    std::size_t tenths = 0;
    for (std::size_t t = 1; t <= 10 && tenths == 0; ++t)
      if (realized_width(t, input_width) == width) tenths = t;
    if (tenths == 0)
      throw std::invalid_argument("width " + std::to_string(width) + " is not a tenth of " +
                                  std::to_string(input_width));
    spec.layers.push_back({tenths, parse_activation(layer.at("activation").get<std::string>())});
  }
  validate_mlp_spec(spec);
  return spec;
}

std::string describe_mlp_layer(const MlpLayer& layer, std::size_t input_width) {
  return "(" + std::to_string(realized_width(layer.tenths, input_width)) + ", " +
         activation_name(layer.act) + ")";
}

void add_mlp_bank(ParamStore& store, const std::string& prefix, std::size_t layers,
                  std::size_t input_width, Rng& rng) {
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = prefix + std::to_string(l);
    store.add(p + ".W", xavier_param(input_width, input_width, rng));
    store.add(p + ".b", zeros_param({input_width}));
    store.add(p + ".alpha", zeros_param({input_width}));
    store.add(p + ".mean", Tensor::zeros({input_width}));
    store.add(p + ".var", Tensor::full({input_width}, 1.0));
  }
}

std::vector<std::string> mlp_bank_names(const std::string& prefix, const MlpSpec& spec) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const std::string p = prefix + std::to_string(l);
    out.push_back(p + ".W");
    out.push_back(p + ".b");
    if (spec.layers[l].act == Activation::kDice) {
      out.push_back(p + ".alpha");
      out.push_back(p + ".mean");
      out.push_back(p + ".var");
    }
  }
  return out;
}

Tensor mlp_forward(const ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                   const Tensor& input, bool training) {
  validate_mlp_spec(spec);
  Tensor h = input;
  const std::size_t k0 = input.dim(1);
  std::size_t h_in = k0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const std::string p = prefix + std::to_string(l);
    const Tensor& w = store.at(p + ".W");
    if (w.dim(0) != k0) throw ShapeError("MLP bank width " + std::to_string(w.dim(0)) + " != K_0 " + std::to_string(k0));
    const std::size_t h_out = realized_width(spec.layers[l].tenths, k0);
    const Tensor w_slice = h_in == k0 && h_out == k0 ? w : ops::slice(ops::slice(w, 0, 0, h_in), 1, 0, h_out);
    const Tensor& bias = store.at(p + ".b");
    const Tensor b_slice = h_out == k0 ? bias : ops::slice(bias, 0, 0, h_out);
    h = ops::add(ops::matmul(h, w_slice), b_slice);
    if (spec.layers[l].act == Activation::kDice) {
      const Tensor& alpha = store.at(p + ".alpha");
      h = dice(h, h_out == k0 ? alpha : ops::slice(alpha, 0, 0, h_out), store.at(p + ".mean"),
               store.at(p + ".var"), training);
    } else {
      h = activation_apply(spec.layers[l].act, h);
    }
    h_in = h_out;
  }
  return h;
}

void add_dense_mlp(ParamStore& store, const std::string& prefix, std::size_t input_width,
                   std::span<const std::size_t> widths, Rng& rng) {
  std::size_t in = input_width;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    store.add(prefix + std::to_string(l) + ".W", xavier_param(in, widths[l], rng));
    store.add(prefix + std::to_string(l) + ".b", zeros_param({widths[l]}));
    in = widths[l];
  }
}

std::vector<std::string> dense_mlp_names(const std::string& prefix, std::size_t layers) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < layers; ++l) {
    out.push_back(prefix + std::to_string(l) + ".W");
    out.push_back(prefix + std::to_string(l) + ".b");
  }
  return out;
}

Tensor dense_mlp_forward(const ParamStore& store, const std::string& prefix, std::size_t layers,
                         Activation act, const Tensor& input) {
  Tensor h = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = prefix + std::to_string(l);
    h = activation_apply(act, ops::add(ops::matmul(h, store.at(p + ".W")), store.at(p + ".b")));
  }
  return h;
}

Tensor assemble_input(std::span<const Tensor> non_seq, std::span<const Tensor> interactions,
                      const Tensor& behavior) {
  std::vector<Tensor> parts(non_seq.begin(), non_seq.end());
  parts.insert(parts.end(), interactions.begin(), interactions.end());
  if (behavior.defined()) parts.push_back(behavior);
  if (parts.empty()) throw ShapeError("assemble_input: no features");
  return parts.size() == 1 ? parts[0] : ops::concat(parts, 1);
}

void add_se_params(ParamStore& store, const std::string& prefix, std::size_t rows,
                   std::size_t width, Rng& rng) {
  store.add(prefix + ".v", xavier_param(width, 1, rng));
  store.add(prefix + ".W1", xavier_param(rows, rows, rng));
  store.add(prefix + ".W2", xavier_param(rows, rows, rng));
}

std::vector<std::string> se_names(const std::string& prefix) {
  return {prefix + ".v", prefix + ".W1", prefix + ".W2"};
}

Tensor se_gates(const ParamStore& store, const std::string& prefix, const Tensor& rows) {
  const std::size_t batch = rows.dim(0), r = rows.dim(1), k = rows.dim(2);
  const Tensor z = ops::reshape(ops::matmul(ops::reshape(rows, {batch * r, k}), store.at(prefix + ".v")),
                                {batch, r});
  const Tensor hidden = ops::relu(ops::matmul(z, store.at(prefix + ".W1")));
  return ops::sigmoid(ops::matmul(hidden, store.at(prefix + ".W2")));
}

Tensor se_compress(const ParamStore& store, const std::string& prefix, const Tensor& rows) {
  const std::size_t batch = rows.dim(0), r = rows.dim(1);
  const Tensor gates = ops::reshape(se_gates(store, prefix, rows), {batch, r, 1});
  return ops::sum_axis(ops::mul(rows, gates), 1);
}

std::string task_name(Task task) { return task == Task::kCtr ? "ctr" : "next-item"; }

Task parse_task(const std::string& name) {
  if (name == "ctr") return Task::kCtr;
  if (name == "next-item") return Task::kNextItem;
  throw std::invalid_argument("unknown task '" + name + "'");
}

void add_ctr_head(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng) {
  store.add(prefix + ".w", xavier_param(width, 1, rng));
}

Tensor ctr_logits(const ParamStore& store, const std::string& prefix, const Tensor& hidden) {
  return ops::reshape(ops::matmul(hidden, store.at(prefix + ".w")), {hidden.dim(0)});
}

void add_retrieval_head(ParamStore& store, const std::string& prefix, std::size_t width,
                        std::size_t item_width, Rng& rng) {
  store.add(prefix + ".W", xavier_param(width, item_width, rng));
}

Tensor retrieval_scores(const ParamStore& store, const std::string& prefix, const Tensor& item_table,
                        const Tensor& hidden, std::span<const std::int64_t> candidates,
                        std::size_t per_row) {
  const std::size_t batch = hidden.dim(0);
  if (candidates.size() != batch * per_row) throw ShapeError("retrieval_scores: candidate count");
  const Tensor query = ops::matmul(hidden, store.at(prefix + ".W"));  // (B, K)
  const std::size_t k = query.dim(1);
  std::vector<std::size_t> offsets(candidates.size() + 1);
  for (std::size_t i = 0; i <= candidates.size(); ++i) offsets[i] = i;
  const Tensor items = ops::reshape(ops::embedding_bag(item_table, offsets, candidates), {batch, per_row, k});
  return ops::reshape(ops::bmm(items, ops::reshape(query, {batch, k, 1})), {batch, per_row});
}

Tensor loss_ctr(const Tensor& logits, std::span<const std::int64_t> labels) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("CTR labels must be 0 or 1");
    y[i] = static_cast<double>(labels[i]);
  }
  const std::size_t n = y.size();
  return ops::bce_with_logits(logits, Tensor::from({n}, std::move(y)));
}

Tensor loss_nextitem(const Tensor& scores, std::span<const double> roles) {
  if (scores.rank() != 2 || roles.size() != scores.numel()) throw ShapeError("loss_nextitem: roles size");
  std::vector<double> sign(roles.size()), weight(roles.size());
  for (std::size_t i = 0; i < roles.size(); ++i) {
    sign[i] = -roles[i];
    weight[i] = roles[i] != 0.0 ? 1.0 : 0.0;
  }
  const Tensor terms = ops::softplus(ops::mul(scores, Tensor::from(scores.shape(), std::move(sign))));
  const Tensor total = ops::sum(ops::mul(terms, Tensor::from(scores.shape(), std::move(weight))));
  return ops::scale(total, 1.0 / static_cast<double>(scores.dim(0)));
}

}  // namespace recnas

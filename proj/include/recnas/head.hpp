// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Aggregation stage: searchable MLP over h_0 = [e^a, p^a, h^b] with weight
// slicing, the SE shortcut over embeddings and interactions, prediction
// heads and losses.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/activation.hpp"
#include "recnas/init.hpp"
#include "recnas/param_store.hpp"

namespace recnas {

struct MlpLayer {
  std::size_t tenths = 10;  // width fraction of K_0, in tenths (1..10)
  Activation act = Activation::kReLU;
  bool operator==(const MlpLayer&) const = default;
};

struct MlpSpec {
  std::vector<MlpLayer> layers;
  bool operator==(const MlpSpec&) const = default;
};

// max(1, round(tenths / 10 * input_width)).
std::size_t realized_width(std::size_t tenths, std::size_t input_width);
std::vector<std::size_t> realized_widths(const MlpSpec& spec, std::size_t input_width);
// Throws std::invalid_argument on an out-of-range fraction or a widening layer.
void validate_mlp_spec(const MlpSpec& spec);

// Every non-increasing tuple of tenths of length `layers`, lexicographic.
std::vector<std::vector<std::size_t>> monotone_width_tuples(std::size_t layers);
MlpSpec sample_mlp_spec(std::size_t layers, std::span<const Activation> acts, Rng& rng);
std::vector<Activation> mlp_activations();  // ReLU, Swish, Identity, Dice

// [{width, activation}, ...] with realized widths.
nlohmann::json mlp_spec_to_json(const MlpSpec& spec, std::size_t input_width);
MlpSpec mlp_spec_from_json(const nlohmann::json& j, std::size_t input_width);
std::string describe_mlp_layer(const MlpLayer& layer, std::size_t input_width);

// Bank of L_c layers, each a (K_0, K_0) matrix, a K_0 bias and Dice state.
void add_mlp_bank(ParamStore& store, const std::string& prefix, std::size_t layers,
                  std::size_t input_width, Rng& rng);
// Names the spec reads (the full matrices; slicing happens in the forward).
std::vector<std::string> mlp_bank_names(const std::string& prefix, const MlpSpec& spec);
// h_l = Act(h_{l-1} W[:h_in, :h_out] + b[:h_out]).
Tensor mlp_forward(const ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                   const Tensor& input, bool training);

// Fixed-width MLP: prefix{l}.W (in, out) and prefix{l}.b, Xavier init.
void add_dense_mlp(ParamStore& store, const std::string& prefix, std::size_t input_width,
                   std::span<const std::size_t> widths, Rng& rng);
std::vector<std::string> dense_mlp_names(const std::string& prefix, std::size_t layers);
Tensor dense_mlp_forward(const ParamStore& store, const std::string& prefix, std::size_t layers,
                         Activation act, const Tensor& input);

// Concatenation [e^a_1..e^a_N, p_1..p_M, h^b] along the feature axis;
// `behavior` may be undefined.
Tensor assemble_input(std::span<const Tensor> non_seq, std::span<const Tensor> interactions,
                      const Tensor& behavior);

// SE over R = M + N rows: z = Q v, a = sigmoid(W2 relu(W1 z)),
// h^se = sum_i a_i q_i. `rows` is (B, R, K).
void add_se_params(ParamStore& store, const std::string& prefix, std::size_t rows,
                   std::size_t width, Rng& rng);
std::vector<std::string> se_names(const std::string& prefix);
Tensor se_gates(const ParamStore& store, const std::string& prefix, const Tensor& rows);
Tensor se_compress(const ParamStore& store, const std::string& prefix, const Tensor& rows);

enum class Task { kCtr, kNextItem };
std::string task_name(Task task);
Task parse_task(const std::string& name);

// CTR head: logit = h^c w, no bias. Returns (B).
void add_ctr_head(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng);
Tensor ctr_logits(const ParamStore& store, const std::string& prefix, const Tensor& hidden);

// Retrieval head: s_ij = e_j . (W h^c_i) for candidate ids laid out row-major
// as (B, C). Returns (B, C).
void add_retrieval_head(ParamStore& store, const std::string& prefix, std::size_t width,
                        std::size_t item_width, Rng& rng);
Tensor retrieval_scores(const ParamStore& store, const std::string& prefix, const Tensor& item_table,
                        const Tensor& hidden, std::span<const std::int64_t> candidates,
                        std::size_t per_row);

Tensor loss_ctr(const Tensor& logits, std::span<const std::int64_t> labels);
// roles (B*C): +1 positive, -1 negative, 0 padding. Mean over rows of
// sum softplus(-s_pos) + sum softplus(s_neg).
Tensor loss_nextitem(const Tensor& scores, std::span<const double> roles);

}  // namespace recnas

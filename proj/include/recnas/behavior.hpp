// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Block-wise search space over behavior sequences and its weight-sharing
// supernet. A child network stacks L_b residual blocks
//
//   H_l = Act(Layer(Norm(H_{l-1}))) + H_{l-1}
//
// at width d = N_b * K and compresses the final states into h^b.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "recnas/activation.hpp"
#include "recnas/feature_space.hpp"
#include "recnas/init.hpp"
#include "recnas/param_store.hpp"

namespace recnas {

class ArchitectureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerKind { kConv, kDilatedConv, kAvgPool, kMaxPool, kBiGRU, kSelfAttn, kTargetAttn, kZero };

inline constexpr std::size_t kDilation = 2;
inline constexpr std::size_t kPoolWindow = 3;
inline constexpr std::size_t kAttentionHidden = 32;
inline constexpr double kLayerNormEps = 1e-6;
inline constexpr double kMaskBias = -1e9;

struct LayerChoice {
  LayerKind kind = LayerKind::kZero;
  std::size_t k = 0;      // kernel or window size
  std::size_t heads = 0;  // self-attention only

  static LayerChoice conv(std::size_t k) { return {LayerKind::kConv, k, 0}; }
  static LayerChoice dilated_conv(std::size_t k) { return {LayerKind::kDilatedConv, k, 0}; }
  static LayerChoice avg_pool() { return {LayerKind::kAvgPool, kPoolWindow, 0}; }
  static LayerChoice max_pool() { return {LayerKind::kMaxPool, kPoolWindow, 0}; }
  static LayerChoice bigru() { return {LayerKind::kBiGRU, 0, 0}; }
  static LayerChoice self_attn(std::size_t heads) { return {LayerKind::kSelfAttn, 0, heads}; }
  static LayerChoice target_attn() { return {LayerKind::kTargetAttn, 0, 0}; }
  static LayerChoice zero() { return {}; }

  // Short identifier used in parameter names: "Conv3", "DConv5", "Attn2", ...
  std::string name() const;
  bool operator==(const LayerChoice&) const = default;
};

LayerChoice parse_layer_choice(const std::string& name);

// Full candidate list in a fixed order, Zero last.
std::vector<LayerChoice> enumerate_layer_choices(bool has_target);

enum class Norm { kLayerNorm, kNone };
std::string norm_name(Norm norm);
Norm parse_norm(const std::string& name);

struct BlockSpec {
  Norm norm = Norm::kNone;
  LayerChoice layer;
  Activation act = Activation::kIdentity;

  bool is_zero() const { return layer.kind == LayerKind::kZero; }
  // Zero blocks compare equal regardless of the ignored norm/act.
  bool operator==(const BlockSpec& other) const;
};

struct BlockArchitecture {
  std::vector<BlockSpec> blocks;
  bool operator==(const BlockArchitecture&) const = default;
};

nlohmann::json block_to_json(const BlockSpec& spec);
BlockSpec block_from_json(const nlohmann::json& j);
nlohmann::json architecture_to_json(const BlockArchitecture& arch);
BlockArchitecture architecture_from_json(const nlohmann::json& j);
// Human-readable form, e.g. "(1x5 Dconv, GeLU, LayerNorm)" or "Zero".
std::string describe_block(const BlockSpec& spec);

// Candidate sets of every block. Each block independently takes one of
// |norms| * |layers| * |acts| non-Zero configurations, or Zero.
struct BehaviorSpace {
  std::size_t num_blocks = 3;
  std::vector<Norm> norms{Norm::kLayerNorm, Norm::kNone};
  std::vector<LayerChoice> layers;  // non-Zero candidates
  std::vector<Activation> acts{Activation::kReLU, Activation::kGeLU, Activation::kSwish,
                               Activation::kIdentity};
  bool allow_zero = true;

  static BehaviorSpace standard(std::size_t num_blocks, bool has_target);

  std::size_t choices_per_block() const;
  // Index in [0, choices_per_block()); the last index is Zero when allowed.
  BlockSpec block_choice(std::size_t index) const;
  std::size_t block_index(const BlockSpec& spec) const;
  // choices_per_block()^num_blocks; throws std::overflow_error past 2^64.
  std::uint64_t size() const;
  BlockArchitecture decode(std::uint64_t index) const;
  std::uint64_t encode(const BlockArchitecture& arch) const;
  // Every architecture, in index order. Throws when size() exceeds `limit`.
  std::vector<BlockArchitecture> enumerate(std::uint64_t limit = 1'000'000) const;
  BlockArchitecture sample(Rng& rng) const;
  bool has_layer(LayerKind kind) const;
  void validate(const BlockArchitecture& arch) const;

  nlohmann::json to_json() const;
  static BehaviorSpace from_json(const nlohmann::json& j);
};

struct BehaviorConfig {
  BehaviorSpace space;
  std::size_t width = 0;    // d = N_b * K
  bool has_target = false;  // enables TargetAttn and the attention summary
};

// Adds every candidate's parameters for every block position, plus the
// compression attention network when a target is present.
void add_supernet_params(ParamStore& store, const BehaviorConfig& config, Rng& rng);
// Parameter names a single child reads, in a stable order.
std::vector<std::string> behavior_param_names(const BehaviorConfig& config,
                                              const BlockArchitecture& arch);
std::size_t compressed_width(const BehaviorConfig& config);

// Local activation unit: a scalar score per position from [h, t', h * t'],
// t' = target * P, through a Dice hidden layer. Scores are raw weights.
Tensor attention_scores(const ParamStore& store, const std::string& prefix, const Tensor& states,
                        const Tensor& target, bool training);

// `states` is (B, T, d); `mask` holds B*T flags; `target` is (B, d) or
// undefined. Masked positions are zero on output.
Tensor block_forward(const ParamStore& store, std::size_t position, const BlockSpec& spec,
                     const Tensor& states, std::span<const double> mask, const Tensor& target,
                     bool training);

// h^b = [h_pool, h_last] plus h_att when `target` is defined. Throws
// ArchitectureError for an all-masked sequence.
Tensor compress_sequence(const ParamStore& store, const Tensor& states,
                         std::span<const double> mask, std::span<const std::size_t> lengths,
                         const Tensor& target, bool training);

// Block stack plus compression over an embedded batch: (B, compressed width).
Tensor behavior_forward(const ParamStore& store, const BehaviorConfig& config,
                        const BlockArchitecture& arch, const Batch& batch, bool training);

// Shared-weight store for one-shot training.
class SupernetBank {
 public:
  SupernetBank(BehaviorConfig config, Rng& rng);

  const BehaviorConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Tensor forward(const BlockArchitecture& arch, const Batch& batch, bool training) const;
  // Deep copy of exactly the parameters `arch` uses.
  ParamStore child_params(const BlockArchitecture& arch) const;

 private:
  BehaviorConfig config_;
  ParamStore params_;
};

}  // namespace recnas

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/behavior.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "recnas/ops.hpp"

namespace recnas {

using nlohmann::json;

std::string LayerChoice::name() const {
  switch (kind) {
    case LayerKind::kConv: return "Conv" + std::to_string(k);
    case LayerKind::kDilatedConv: return "DConv" + std::to_string(k);
    case LayerKind::kAvgPool: return "AvgPool" + std::to_string(k);
    case LayerKind::kMaxPool: return "MaxPool" + std::to_string(k);
    case LayerKind::kBiGRU: return "BiGRU";
    case LayerKind::kSelfAttn: return "Attn" + std::to_string(heads);
    case LayerKind::kTargetAttn: return "TargetAttn";
    case LayerKind::kZero: return "Zero";
  }
  return "?";
}

std::vector<LayerChoice> enumerate_layer_choices(bool has_target) {
  std::vector<LayerChoice> out{LayerChoice::conv(1),         LayerChoice::conv(3),
                               LayerChoice::dilated_conv(3), LayerChoice::dilated_conv(5),
                               LayerChoice::dilated_conv(7), LayerChoice::avg_pool(),
                               LayerChoice::max_pool(),      LayerChoice::bigru(),
                               LayerChoice::self_attn(2),    LayerChoice::self_attn(4)};
  if (has_target) out.push_back(LayerChoice::target_attn());
  out.push_back(LayerChoice::zero());
  return out;
}

LayerChoice parse_layer_choice(const std::string& name) {
  for (const auto& c : enumerate_layer_choices(true))
    if (c.name() == name) return c;
  throw ArchitectureError("unknown layer choice '" + name + "'");
}

std::string norm_name(Norm norm) { return norm == Norm::kLayerNorm ? "LayerNorm" : "None"; }

Norm parse_norm(const std::string& name) {
  if (name == "LayerNorm") return Norm::kLayerNorm;
  if (name == "None") return Norm::kNone;
  throw ArchitectureError("unknown normalization '" + name + "'");
}

bool BlockSpec::operator==(const BlockSpec& other) const {
  if (is_zero() || other.is_zero()) return is_zero() && other.is_zero();
  return norm == other.norm && layer == other.layer && act == other.act;
}

namespace {

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "Conv";
    case LayerKind::kDilatedConv: return "DilatedConv";
    case LayerKind::kAvgPool: return "AvgPool";
    case LayerKind::kMaxPool: return "MaxPool";
    case LayerKind::kBiGRU: return "BiGRU";
    case LayerKind::kSelfAttn: return "SelfAttn";
    case LayerKind::kTargetAttn: return "TargetAttn";
    case LayerKind::kZero: return "Zero";
  }
  return "?";
}

constexpr const char* kZeroSentinel = "ZERO";

}  // namespace

json block_to_json(const BlockSpec& spec) {
  if (spec.is_zero()) return kZeroSentinel;
  json layer{{"kind", kind_name(spec.layer.kind)}};
  if (spec.layer.k) layer["k"] = spec.layer.k;
  if (spec.layer.heads) layer["heads"] = spec.layer.heads;
  return {{"norm", norm_name(spec.norm)}, {"layer", layer}, {"act", activation_name(spec.act)}};
}

BlockSpec block_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != kZeroSentinel)
      throw ArchitectureError("block must be an object or \"ZERO\"");
    return {};
  }
  if (!j.is_object() || !j.contains("layer") || !j.contains("norm") || !j.contains("act"))
    throw ArchitectureError("block needs norm, layer and act");
  for (const auto& [key, _] : j.items())
    if (key != "norm" && key != "layer" && key != "act")
      throw ArchitectureError("unknown block key '" + key + "'");
  const json& layer = j.at("layer");
  const std::string kind = layer.at("kind").get<std::string>();
  LayerChoice choice;
  bool found = false;
  for (const auto& c : enumerate_layer_choices(true)) {
    if (kind_name(c.kind) != kind) continue;
    const std::size_t k = layer.value("k", std::size_t{0});
    const std::size_t heads = layer.value("heads", std::size_t{0});
    if (c.k == k && c.heads == heads) {
      choice = c;
      found = true;
    }
  }
  if (!found) throw ArchitectureError("unknown layer " + layer.dump());
  BlockSpec spec{parse_norm(j.at("norm").get<std::string>()), choice, Activation::kIdentity};
  try {
    spec.act = parse_activation(j.at("act").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ArchitectureError(e.what());
  }
  return spec;
}

json architecture_to_json(const BlockArchitecture& arch) {
  json out = json::array();
  for (const auto& b : arch.blocks) out.push_back(block_to_json(b));
  return out;
}

BlockArchitecture architecture_from_json(const json& j) {
  if (!j.is_array()) throw ArchitectureError("block architecture must be a JSON array");
  BlockArchitecture arch;
  for (const auto& b : j) arch.blocks.push_back(block_from_json(b));
  return arch;
}

std::string describe_block(const BlockSpec& spec) {
  if (spec.is_zero()) return "Zero";
  std::string layer;
  switch (spec.layer.kind) {
    case LayerKind::kConv: layer = "1x" + std::to_string(spec.layer.k) + " Conv"; break;
    case LayerKind::kDilatedConv: layer = "1x" + std::to_string(spec.layer.k) + " Dconv"; break;
    case LayerKind::kAvgPool: layer = "1x" + std::to_string(spec.layer.k) + " AvgPool"; break;
    case LayerKind::kMaxPool: layer = "1x" + std::to_string(spec.layer.k) + " MaxPool"; break;
    case LayerKind::kBiGRU: layer = "Bi-GRU"; break;
    case LayerKind::kSelfAttn: layer = std::to_string(spec.layer.heads) + "-Head Attention"; break;
    case LayerKind::kTargetAttn: layer = "Target Attention"; break;
    case LayerKind::kZero: break;
  }
  return "(" + layer + ", " + activation_name(spec.act) + ", " + norm_name(spec.norm) + ")";
}

// ---------------------------------------------------------------------------
// Search space.

BehaviorSpace BehaviorSpace::standard(std::size_t num_blocks, bool has_target) {
  BehaviorSpace space;
  space.num_blocks = num_blocks;
  for (const auto& c : enumerate_layer_choices(has_target))
    if (c.kind != LayerKind::kZero) space.layers.push_back(c);
  return space;
}

std::size_t BehaviorSpace::choices_per_block() const {
  return norms.size() * layers.size() * acts.size() + (allow_zero ? 1 : 0);
}

BlockSpec BehaviorSpace::block_choice(std::size_t index) const {
  const std::size_t regular = norms.size() * layers.size() * acts.size();
  if (index >= choices_per_block()) throw ArchitectureError("block choice index out of range");
  if (index == regular) return {};
  const std::size_t act = index % acts.size();
  const std::size_t layer = (index / acts.size()) % layers.size();
  const std::size_t norm = index / (acts.size() * layers.size());
  return {norms[norm], layers[layer], acts[act]};
}

std::size_t BehaviorSpace::block_index(const BlockSpec& spec) const {
  if (spec.is_zero()) {
    if (!allow_zero) throw ArchitectureError("Zero block not in this space");
    return norms.size() * layers.size() * acts.size();
  }
  auto find = [](const auto& list, const auto& value, const char* what) {
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i] == value) return i;
    throw ArchitectureError(std::string(what) + " not in this space");
  };
  const std::size_t n = find(norms, spec.norm, "normalization");
  const std::size_t l = find(layers, spec.layer, "layer");
  const std::size_t a = find(acts, spec.act, "activation");
  return (n * layers.size() + l) * acts.size() + a;
}

std::uint64_t BehaviorSpace::size() const {
  const std::uint64_t per = choices_per_block();
  std::uint64_t total = 1;
  for (std::size_t l = 0; l < num_blocks; ++l) {
    if (per != 0 && total > std::numeric_limits<std::uint64_t>::max() / per)
      throw std::overflow_error("search space size exceeds 64 bits");
    total *= per;
  }
  return total;
}

BlockArchitecture BehaviorSpace::decode(std::uint64_t index) const {
  if (index >= size()) throw ArchitectureError("architecture index out of range");
  const std::uint64_t per = choices_per_block();
  BlockArchitecture arch;
  for (std::size_t l = 0; l < num_blocks; ++l) {
    arch.blocks.push_back(block_choice(static_cast<std::size_t>(index % per)));
    index /= per;
  }
  return arch;
}

std::uint64_t BehaviorSpace::encode(const BlockArchitecture& arch) const {
  validate(arch);
  const std::uint64_t per = choices_per_block();
  std::uint64_t index = 0;
  for (std::size_t l = num_blocks; l-- > 0;) index = index * per + block_index(arch.blocks[l]);
  return index;
}

std::vector<BlockArchitecture> BehaviorSpace::enumerate(std::uint64_t limit) const {
  const std::uint64_t n = size();
  if (n > limit) throw ArchitectureError("space too large to enumerate: " + std::to_string(n));
  std::vector<BlockArchitecture> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(decode(i));
  return out;
}

BlockArchitecture BehaviorSpace::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, choices_per_block() - 1);
  BlockArchitecture arch;
  for (std::size_t l = 0; l < num_blocks; ++l) arch.blocks.push_back(block_choice(pick(rng)));
  return arch;
}

bool BehaviorSpace::has_layer(LayerKind kind) const {
  for (const auto& c : layers)
    if (c.kind == kind) return true;
  return false;
}

void BehaviorSpace::validate(const BlockArchitecture& arch) const {
  if (arch.blocks.size() != num_blocks)
    throw ArchitectureError("expected " + std::to_string(num_blocks) + " blocks, got " +
                            std::to_string(arch.blocks.size()));
  for (const auto& b : arch.blocks) block_index(b);
}

json BehaviorSpace::to_json() const {
  json j{{"num_blocks", num_blocks}, {"allow_zero", allow_zero}};
  for (auto n : norms) j["norms"].push_back(norm_name(n));
  for (const auto& l : layers) j["layers"].push_back(l.name());
  for (auto a : acts) j["acts"].push_back(activation_name(a));
  return j;
}

BehaviorSpace BehaviorSpace::from_json(const json& j) {
  BehaviorSpace s;
  s.num_blocks = j.at("num_blocks").get<std::size_t>();
  s.allow_zero = j.value("allow_zero", true);
  s.norms.clear();
  s.acts.clear();
  for (const auto& n : j.at("norms")) s.norms.push_back(parse_norm(n.get<std::string>()));
  for (const auto& l : j.at("layers")) s.layers.push_back(parse_layer_choice(l.get<std::string>()));
  for (const auto& a : j.at("acts")) s.acts.push_back(parse_activation(a.get<std::string>()));
  return s;
}

// ---------------------------------------------------------------------------
// Parameters.

namespace {

std::string block_prefix(std::size_t position, const LayerChoice& layer) {
  return "blk" + std::to_string(position) + "." + layer.name();
}

constexpr const char* kCompressPrefix = "att";

void add_attention_unit(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
  store.add(prefix + ".P", uniform_param({d, d}, 0.05, rng));
  store.add(prefix + ".W1", uniform_param({3 * d, kAttentionHidden}, 0.05, rng));
  store.add(prefix + ".b1", zeros_param({kAttentionHidden}));
  store.add(prefix + ".alpha", zeros_param({kAttentionHidden}));
  store.add(prefix + ".mean", Tensor::zeros({kAttentionHidden}));
  store.add(prefix + ".var", Tensor::full({kAttentionHidden}, 1.0));
  store.add(prefix + ".w2", uniform_param({kAttentionHidden, 1}, 0.05, rng));
  store.add(prefix + ".b2", zeros_param({1}));
}

std::vector<std::string> attention_unit_names(const std::string& prefix) {
  std::vector<std::string> out;
  for (const char* s : {".P", ".W1", ".b1", ".alpha", ".mean", ".var", ".w2", ".b2"})
    out.push_back(prefix + s);
  return out;
}

Tensor orthogonal_gates(std::size_t h, Rng& rng) {
  std::vector<double> values(h * 3 * h);
  for (std::size_t g = 0; g < 3; ++g) {
    const Tensor q = orthogonal_param(h, h, rng);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < h; ++c) values[r * 3 * h + g * h + c] = q.value()[r * h + c];
  }
  return Tensor::parameter({h, 3 * h}, std::move(values));
}

std::vector<std::string> layer_param_suffixes(const LayerChoice& layer) {
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kDilatedConv: return {".w", ".b"};
    case LayerKind::kBiGRU: return {".f.wx", ".f.wh", ".f.b", ".b.wx", ".b.wh", ".b.b"};
    case LayerKind::kSelfAttn: return {".wq", ".wk", ".wv", ".wo"};
    case LayerKind::kTargetAttn: return {".P", ".W1", ".b1", ".alpha", ".mean", ".var", ".w2", ".b2"};
    default: return {};
  }
}

}  // namespace

void add_supernet_params(ParamStore& store, const BehaviorConfig& config, Rng& rng) {
  const std::size_t d = config.width;
  if (d == 0) throw ArchitectureError("behavior width must be positive");
  for (const auto& layer : config.space.layers) {
    if (layer.kind == LayerKind::kBiGRU && d % 2 != 0)
      throw ArchitectureError("BiGRU needs an even width, got " + std::to_string(d));
    if (layer.kind == LayerKind::kSelfAttn && d % layer.heads != 0)
      throw ArchitectureError(layer.name() + " needs width divisible by heads");
    if (layer.kind == LayerKind::kTargetAttn && !config.has_target)
      throw ArchitectureError("TargetAttn requires a target item");
  }
  for (std::size_t l = 0; l < config.space.num_blocks; ++l) {
    for (const auto& layer : config.space.layers) {
      const std::string p = block_prefix(l, layer);
      store.add(p + ".ln_g", constant_param({d}, 1.0));
      store.add(p + ".ln_b", zeros_param({d}));
      switch (layer.kind) {
        case LayerKind::kConv:
        case LayerKind::kDilatedConv:
          store.add(p + ".w", he_param({layer.k, d, d}, layer.k * d, rng));
          store.add(p + ".b", zeros_param({d}));
          break;
        case LayerKind::kBiGRU: {
          const std::size_t h = d / 2;
          for (const char* dir : {".f", ".b"}) {
            store.add(p + dir + ".wx", xavier_param(d, 3 * h, rng));
            store.add(p + dir + ".wh", orthogonal_gates(h, rng));
            store.add(p + dir + ".b", zeros_param({3 * h}));
          }
          break;
        }
        case LayerKind::kSelfAttn:
          for (const char* w : {".wq", ".wk", ".wv", ".wo"})
            store.add(p + w, uniform_param({d, d}, 0.05 * std::sqrt(64.0 / static_cast<double>(d)), rng));
          break;
        case LayerKind::kTargetAttn: add_attention_unit(store, p, d, rng); break;
        default: break;
      }
    }
  }
  if (config.has_target) add_attention_unit(store, kCompressPrefix, d, rng);
}

std::vector<std::string> behavior_param_names(const BehaviorConfig& config,
                                              const BlockArchitecture& arch) {
  config.space.validate(arch);
  std::vector<std::string> out;
  for (std::size_t l = 0; l < arch.blocks.size(); ++l) {
    const BlockSpec& b = arch.blocks[l];
    if (b.is_zero()) continue;
    const std::string p = block_prefix(l, b.layer);
    if (b.norm == Norm::kLayerNorm) {
      out.push_back(p + ".ln_g");
      out.push_back(p + ".ln_b");
    }
    for (const auto& s : layer_param_suffixes(b.layer)) out.push_back(p + s);
  }
  if (config.has_target)
    for (auto& n : attention_unit_names(kCompressPrefix)) out.push_back(std::move(n));
  return out;
}

std::size_t compressed_width(const BehaviorConfig& config) {
  return (config.has_target ? 3 : 2) * config.width;
}

// ---------------------------------------------------------------------------
// Forward passes.

namespace {

Tensor mask_tensor(std::span<const double> mask, std::size_t batch, std::size_t steps) {
  return Tensor::from({batch, steps, 1}, std::vector<double>(mask.begin(), mask.end()));
}

Tensor linear3(const Tensor& x, const Tensor& w) {
  const std::size_t b = x.dim(0), t = x.dim(1);
  return ops::reshape(ops::matmul(ops::reshape(x, {b * t, x.dim(2)}), w), {b, t, w.dim(1)});
}

Tensor gru_direction(const ParamStore& store, const std::string& prefix, const Tensor& x,
                     std::span<const double> mask, bool reverse) {
  const std::size_t batch = x.dim(0), steps = x.dim(1);
  const Tensor& wh = store.at(prefix + ".wh");
  const std::size_t h = wh.dim(0);
  const Tensor gx = ops::add(linear3(x, store.at(prefix + ".wx")), store.at(prefix + ".b"));
  Tensor state = Tensor::zeros({batch, h});
  std::vector<Tensor> outputs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    const Tensor gxt = ops::reshape(ops::slice(gx, 1, t, 1), {batch, 3 * h});
    const Tensor gh = ops::matmul(state, wh);
    const Tensor z = ops::sigmoid(ops::add(ops::slice(gxt, 1, 0, h), ops::slice(gh, 1, 0, h)));
    const Tensor r = ops::sigmoid(ops::add(ops::slice(gxt, 1, h, h), ops::slice(gh, 1, h, h)));
    const Tensor n = ops::tanh(
        ops::add(ops::slice(gxt, 1, 2 * h, h), ops::mul(r, ops::slice(gh, 1, 2 * h, h))));
    // (1 - z) * n + z * h_prev, reset to zero at padded steps.
    const Tensor fresh = ops::add(n, ops::mul(z, ops::sub(state, n)));
    std::vector<double> m(batch);
    for (std::size_t b = 0; b < batch; ++b) m[b] = mask[b * steps + t];
    state = ops::mul(fresh, Tensor::from({batch, 1}, std::move(m)));
    outputs[t] = ops::reshape(state, {batch, 1, h});
  }
  return ops::concat(outputs, 1);
}

Tensor self_attention(const ParamStore& store, const std::string& prefix, const Tensor& x,
                      std::span<const double> mask, std::size_t heads) {
  const std::size_t batch = x.dim(0), steps = x.dim(1), d = x.dim(2);
  const std::size_t dh = d / heads;
  const Tensor q = linear3(x, store.at(prefix + ".wq"));
  const Tensor k = linear3(x, store.at(prefix + ".wk"));
  const Tensor v = linear3(x, store.at(prefix + ".wv"));
  std::vector<double> bias(batch * steps);
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = mask[i] != 0.0 ? 0.0 : kMaskBias;
  const Tensor key_bias = Tensor::from({batch, 1, steps}, std::move(bias));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const Tensor qh = ops::slice(q, 2, hd * dh, dh);
    const Tensor kh = ops::slice(k, 2, hd * dh, dh);
    const Tensor vh = ops::slice(v, 2, hd * dh, dh);
    const Tensor scores = ops::add(ops::scale(ops::bmm(qh, kh, true), inv_sqrt), key_bias);
    outs.push_back(ops::bmm(ops::softmax(scores), vh));
  }
  return linear3(heads == 1 ? outs[0] : ops::concat(outs, 2), store.at(prefix + ".wo"));
}

}  // namespace

Tensor attention_scores(const ParamStore& store, const std::string& prefix, const Tensor& states,
                        const Tensor& target, bool training) {
  if (!target.defined()) throw ArchitectureError("target attention without a target item");
  const std::size_t batch = states.dim(0), steps = states.dim(1), d = states.dim(2);
  const Tensor projected = ops::reshape(ops::matmul(target, store.at(prefix + ".P")), {batch, 1, d});
  const Tensor tiled = ops::add(Tensor::zeros({batch, steps, d}), projected);
  const Tensor parts[] = {states, tiled, ops::mul(states, projected)};
  const Tensor features = ops::reshape(ops::concat(parts, 2), {batch * steps, 3 * d});
  const Tensor hidden =
      ops::add(ops::matmul(features, store.at(prefix + ".W1")), store.at(prefix + ".b1"));
  const DiceState dice_state{store.at(prefix + ".alpha"), store.at(prefix + ".mean"),
                             store.at(prefix + ".var")};
  const Tensor gated = activation_apply(Activation::kDice, hidden, &dice_state, training);
  const Tensor score =
      ops::add(ops::matmul(gated, store.at(prefix + ".w2")), store.at(prefix + ".b2"));
  return ops::reshape(score, {batch, steps, 1});
}

Tensor block_forward(const ParamStore& store, std::size_t position, const BlockSpec& spec,
                     const Tensor& states, std::span<const double> mask, const Tensor& target,
                     bool training) {
  if (spec.is_zero()) return states;
  const std::size_t batch = states.dim(0), steps = states.dim(1);
  if (mask.size() != batch * steps) throw ShapeError("block_forward: mask size");
  const std::string p = block_prefix(position, spec.layer);
  const Tensor m = mask_tensor(mask, batch, steps);
  const Tensor x = ops::mul(states, m);
  Tensor y = x;
  if (spec.norm == Norm::kLayerNorm)
    y = ops::mul(ops::layer_norm(x, store.at(p + ".ln_g"), store.at(p + ".ln_b"), kLayerNormEps), m);
  switch (spec.layer.kind) {
    case LayerKind::kConv:
      y = ops::conv1d_same(y, store.at(p + ".w"), store.at(p + ".b"), 1);
      break;
    case LayerKind::kDilatedConv:
      y = ops::conv1d_same(y, store.at(p + ".w"), store.at(p + ".b"), kDilation);
      break;
    case LayerKind::kAvgPool:
      y = ops::pool1d_same(y, mask, ops::PoolKind::kAverage, spec.layer.k);
      break;
    case LayerKind::kMaxPool:
      y = ops::pool1d_same(y, mask, ops::PoolKind::kMax, spec.layer.k);
      break;
    case LayerKind::kBiGRU: {
      const Tensor parts[] = {gru_direction(store, p + ".f", y, mask, false),
                              gru_direction(store, p + ".b", y, mask, true)};
      y = ops::concat(parts, 2);
      break;
    }
    case LayerKind::kSelfAttn:
      y = self_attention(store, p, y, mask, spec.layer.heads);
      break;
    case LayerKind::kTargetAttn:
      y = ops::mul(y, attention_scores(store, p, y, target, training));
      break;
    case LayerKind::kZero: break;
  }
  y = ops::mul(activation_apply(spec.act, ops::mul(y, m)), m);
  return ops::add(y, x);
}

Tensor compress_sequence(const ParamStore& store, const Tensor& states,
                         std::span<const double> mask, std::span<const std::size_t> lengths,
                         const Tensor& target, bool training) {
  const std::size_t batch = states.dim(0), steps = states.dim(1);
  if (lengths.size() != batch || mask.size() != batch * steps)
    throw ShapeError("compress_sequence: lengths/mask size");
  std::vector<double> last(batch * steps, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    if (lengths[b] == 0 || lengths[b] > steps)
      throw ArchitectureError("compress_sequence: sequence " + std::to_string(b) +
                              " has no unmasked position");
    last[b * steps + lengths[b] - 1] = 1.0;
  }
  const Tensor m = mask_tensor(mask, batch, steps);
  std::vector<Tensor> parts{ops::sum_axis(ops::mul(states, m), 1),
                            ops::sum_axis(ops::mul(states, Tensor::from({batch, steps, 1}, last)), 1)};
  if (target.defined()) {
    const Tensor weights = ops::mul(attention_scores(store, kCompressPrefix, states, target, training), m);
    parts.push_back(ops::sum_axis(ops::mul(states, weights), 1));
  }
  return ops::concat(parts, 1);
}

Tensor behavior_forward(const ParamStore& store, const BehaviorConfig& config,
                        const BlockArchitecture& arch, const Batch& batch, bool training) {
  for (const auto& name : behavior_param_names(config, arch))
    if (!store.contains(name)) throw ArchitectureError("parameter '" + name + "' missing");
  if (!batch.behavior.defined()) throw ArchitectureError("batch has no behavior sequence");
  if (batch.behavior.dim(2) != config.width)
    throw ShapeError("behavior width " + std::to_string(batch.behavior.dim(2)) + " != " +
                     std::to_string(config.width));
  const Tensor target = config.has_target ? batch.target : Tensor();
  if (config.has_target && !target.defined())
    throw ArchitectureError("configuration expects target items");
  Tensor h = batch.behavior;
  for (std::size_t l = 0; l < arch.blocks.size(); ++l)
    h = block_forward(store, l, arch.blocks[l], h, batch.mask, target, training);
  return compress_sequence(store, h, batch.mask, batch.lengths, target, training);
}

SupernetBank::SupernetBank(BehaviorConfig config, Rng& rng) : config_(std::move(config)) {
  add_supernet_params(params_, config_, rng);
}

Tensor SupernetBank::forward(const BlockArchitecture& arch, const Batch& batch, bool training) const {
  return behavior_forward(params_, config_, arch, batch, training);
}

ParamStore SupernetBank::child_params(const BlockArchitecture& arch) const {
  return params_.subset(behavior_param_names(config_, arch));
}

}  // namespace recnas

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random small block_forward instances, one generator per layer candidate.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "primitive_cases.hpp"
#include "recnas/behavior.hpp"

namespace recnas::testing {

// Left-aligned mask with random lengths in [1, steps].
inline std::vector<double> random_mask(std::size_t batch, std::size_t steps, std::mt19937_64& rng,
                                       std::vector<std::size_t>* lengths = nullptr) {
  std::vector<double> mask(batch * steps, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = extent(rng, 1, steps);
    if (lengths) lengths->push_back(len);
    for (std::size_t t = 0; t < len; ++t) mask[b * steps + t] = 1.0;
  }
  return mask;
}

// Block store holding one position with the single candidate `layer`.
inline std::shared_ptr<ParamStore> single_layer_store(const LayerChoice& layer, std::size_t width,
                                                      std::mt19937_64& rng) {
  BehaviorConfig config;
  config.space = BehaviorSpace::standard(1, true);
  config.space.layers = {layer};
  config.width = width;
  config.has_target = true;
  auto store = std::make_shared<ParamStore>();
  add_supernet_params(*store, config, rng);
  // Nudge zero-initialized entries so every parameter's gradient is exercised.
  for (auto& [name, t] : store->entries()) {
    if (!t.requires_grad()) continue;
    Tensor leaf = t;
    for (auto& v : leaf.mutable_data()) v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
  }
  return store;
}

inline std::vector<PrimitiveCase> block_cases() {
  std::vector<PrimitiveCase> cases;
  for (const auto& layer : enumerate_layer_choices(true)) {
    cases.push_back({"block_" + layer.name(), [layer](std::mt19937_64& rng) {
                       const std::size_t d = 4;
                       auto store = single_layer_store(layer, d, rng);
                       const std::size_t batch = extent(rng, 1, 2), steps = extent(rng, 1, 5);
                       const auto mask = random_mask(batch, steps, rng);
                       Tensor states = random_leaf({batch, steps, d}, rng);
                       Tensor target = random_leaf({batch, d}, rng);
                       const Activation smooth[] = {Activation::kGeLU, Activation::kSwish,
                                                    Activation::kIdentity};
                       const BlockSpec spec{extent(rng, 0, 1) ? Norm::kLayerNorm : Norm::kNone, layer,
                                            smooth[extent(rng, 0, 2)]};
                       std::vector<Tensor> inputs{states, target};
                       for (const auto& [name, t] : store->entries())
                         if (t.requires_grad() && name.rfind("blk0.", 0) == 0) inputs.push_back(t);
                       return GradCase{[store, spec, states, mask, target] {
                                         return block_forward(*store, 0, spec, states, mask, target,
                                                              false);
                                       },
                                       inputs};
                     }});
  }
  return cases;
}

}  // namespace recnas::testing

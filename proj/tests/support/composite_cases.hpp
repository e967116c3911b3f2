// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random small instances of the composite forward functions: compression,
// SE, sliced MLP, heads and both losses.

#pragma once

#include <memory>

#include "block_cases.hpp"
#include "recnas/head.hpp"
#include "recnas/interaction.hpp"

namespace recnas::testing {

inline std::vector<PrimitiveCase> composite_cases() {
  std::vector<PrimitiveCase> cases;

  cases.push_back({"compress_sequence", [](std::mt19937_64& rng) {
                     const std::size_t d = 4, batch = extent(rng, 1, 3), steps = extent(rng, 1, 5);
                     BehaviorConfig config;
                     config.space = BehaviorSpace::standard(1, true);
                     config.width = d;
                     config.has_target = true;
                     auto store = std::make_shared<ParamStore>();
                     add_supernet_params(*store, config, rng);
                     std::vector<std::size_t> lengths;
                     const auto mask = random_mask(batch, steps, rng, &lengths);
                     Tensor states = random_leaf({batch, steps, d}, rng);
                     Tensor target = random_leaf({batch, d}, rng);
                     std::vector<Tensor> inputs{states, target};
                     for (const auto& [name, t] : store->entries())
                       if (t.requires_grad() && name.rfind("att.", 0) == 0) inputs.push_back(t);
                     return GradCase{[store, states, mask, lengths, target] {
                                       return compress_sequence(*store, states, mask, lengths, target, false);
                                     },
                                     inputs};
                   }});

  cases.push_back({"se_compress", [](std::mt19937_64& rng) {
                     const std::size_t rows = extent(rng, 1, 4), k = extent(rng, 1, 4), batch = extent(rng, 1, 3);
                     auto store = std::make_shared<ParamStore>();
                     add_se_params(*store, "se", rows, k, rng);
                     Tensor q = random_leaf({batch, rows, k}, rng);
                     return GradCase{[store, q] { return se_compress(*store, "se", q); },
                                     {q, store->at("se.v"), store->at("se.W1"), store->at("se.W2")}};
                   }});

  cases.push_back({"mlp_forward_sliced", [](std::mt19937_64& rng) {
                     const std::size_t k0 = extent(rng, 2, 8), depth = extent(rng, 1, 3);
                     auto store = std::make_shared<ParamStore>();
                     add_mlp_bank(*store, "mlp", depth, k0, rng);
                     const Activation smooth[] = {Activation::kSwish, Activation::kIdentity, Activation::kDice};
                     MlpSpec spec;
                     std::size_t tenths = 10;
                     for (std::size_t l = 0; l < depth; ++l) {
                       tenths = extent(rng, 1, tenths);
                       spec.layers.push_back({tenths, smooth[extent(rng, 0, 2)]});
                     }
                     Tensor x = random_leaf({extent(rng, 1, 3), k0}, rng);
                     std::vector<Tensor> inputs{x};
                     for (const auto& name : mlp_bank_names("mlp", spec))
                       if (store->at(name).requires_grad()) inputs.push_back(store->at(name));
                     return GradCase{[store, spec, x] { return mlp_forward(*store, "mlp", spec, x, false); }, inputs};
                   }});

  cases.push_back({"hadamard", [](std::mt19937_64& rng) {
                     const std::size_t n = extent(rng, 2, 4), b = extent(rng, 1, 3), k = extent(rng, 1, 4);
                     std::vector<Tensor> e;
                     for (std::size_t i = 0; i < n; ++i) e.push_back(random_leaf({b, k}, rng));
                     std::vector<std::size_t> fields;
                     for (std::size_t i = 0; i < n; ++i)
                       if (extent(rng, 0, 1) || fields.empty()) fields.push_back(i);
                     const Interaction ix(fields);
                     return GradCase{[e, ix] { return hadamard(e, ix); }, e};
                   }});

  cases.push_back({"ctr_head_loss", [](std::mt19937_64& rng) {
                     const std::size_t b = extent(rng, 1, 5), w = extent(rng, 1, 5);
                     auto store = std::make_shared<ParamStore>();
                     add_ctr_head(*store, "ctr", w, rng);
                     Tensor h = random_leaf({b, w}, rng);
                     std::vector<std::int64_t> labels(b);
                     for (auto& y : labels) y = static_cast<std::int64_t>(extent(rng, 0, 1));
                     return GradCase{[store, h, labels] { return loss_ctr(ctr_logits(*store, "ctr", h), labels); },
                                     {h, store->at("ctr.w")}};
                   }});

  cases.push_back({"retrieval_head_loss", [](std::mt19937_64& rng) {
                     const std::size_t b = extent(rng, 1, 3), w = extent(rng, 1, 4), kw = extent(rng, 1, 4);
                     const std::size_t items = 6, per_row = extent(rng, 2, 4);
                     auto store = std::make_shared<ParamStore>();
                     add_retrieval_head(*store, "ret", w, kw, rng);
                     Tensor table = random_leaf({items, kw}, rng);
                     Tensor h = random_leaf({b, w}, rng);
                     std::vector<std::int64_t> ids(b * per_row);
                     std::vector<double> roles(b * per_row);
                     for (std::size_t i = 0; i < ids.size(); ++i) {
                       ids[i] = static_cast<std::int64_t>(extent(rng, 0, items - 1));
                       roles[i] = i % per_row == 0 ? 1.0 : (extent(rng, 0, 3) == 0 ? 0.0 : -1.0);
                     }
                     return GradCase{[store, table, h, ids, roles, per_row] {
                                       return loss_nextitem(retrieval_scores(*store, "ret", table, h, ids, per_row), roles);
                                     },
                                     {h, table, store->at("ret.W")}};
                   }});
  return cases;
}

}  // namespace recnas::testing

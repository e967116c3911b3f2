// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "recnas/tensor.hpp"

namespace recnas {

enum class Activation { kReLU, kGeLU, kSwish, kIdentity, kDice };

std::string activation_name(Activation act);
// Accepts the canonical names ("ReLU", "GeLU", "Swish", "Identity", "Dice"),
// case-insensitively. Throws std::invalid_argument otherwise.
Activation parse_activation(std::string_view name);

// Data-adaptive gate. `alpha` is the learnable leak (one per feature);
// `running_mean`/`running_var` are leaf buffers at least as wide as x's last
// axis, of which the leading entries are used. With `update_stats`, the
// buffers absorb this batch's moments after the output is computed.
struct DiceState {
  Tensor alpha;
  Tensor running_mean;
  Tensor running_var;
};

inline constexpr double kDiceMomentum = 0.99;
inline constexpr double kDiceEps = 1e-8;

Tensor dice(const Tensor& x, const Tensor& alpha, Tensor running_mean, Tensor running_var,
            bool update_stats);

// Dice requires `state`; every other activation ignores it.
Tensor activation_apply(Activation act, const Tensor& x, const DiceState* state = nullptr,
                        bool update_stats = false);

}  // namespace recnas

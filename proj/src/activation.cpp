// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/activation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "recnas/ops.hpp"

namespace recnas {

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::kReLU: return "ReLU";
    case Activation::kGeLU: return "GeLU";
    case Activation::kSwish: return "Swish";
    case Activation::kIdentity: return "Identity";
    case Activation::kDice: return "Dice";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "relu") return Activation::kReLU;
  if (lower == "gelu") return Activation::kGeLU;
  if (lower == "swish") return Activation::kSwish;
  if (lower == "identity") return Activation::kIdentity;
  if (lower == "dice") return Activation::kDice;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Tensor dice(const Tensor& x, const Tensor& alpha, Tensor running_mean, Tensor running_var,
            bool update_stats) {
  const std::size_t width = x.shape().back();
  if (alpha.shape() != Shape{width} || running_mean.numel() < width ||
      running_var.numel() < width) {
    throw ShapeError("dice: state narrower than input width " + std::to_string(width));
  }
  const std::size_t rows = x.numel() / width;
  std::vector<double> centre(width), inv_std(width);
  {
    const auto& m = running_mean.value();
    const auto& v = running_var.value();
    for (std::size_t j = 0; j < width; ++j) {
      centre[j] = m[j];
      inv_std[j] = 1.0 / std::sqrt(v[j] + kDiceEps);
    }
  }
  const Tensor normalized = ops::mul(ops::sub(x, Tensor::from({width}, centre)),
                                     Tensor::from({width}, inv_std));
  const Tensor p = ops::sigmoid(normalized);
  // x * (p + alpha * (1 - p))
  const Tensor leak = ops::mul(alpha, ops::add_scalar(ops::scale(p, -1.0), 1.0));
  const Tensor out = ops::mul(x, ops::add(p, leak));

  if (update_stats) {
    const auto& xv = x.value();
    auto mean_buf = running_mean.mutable_data();
    auto var_buf = running_var.mutable_data();
    for (std::size_t j = 0; j < width; ++j) {
      double mu = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mu += xv[r * width + j];
      mu /= static_cast<double>(rows);
      double var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) var += (xv[r * width + j] - mu) * (xv[r * width + j] - mu);
      var /= static_cast<double>(rows);
      mean_buf[j] = kDiceMomentum * mean_buf[j] + (1.0 - kDiceMomentum) * mu;
      var_buf[j] = kDiceMomentum * var_buf[j] + (1.0 - kDiceMomentum) * var;
    }
  }
  return out;
}

Tensor activation_apply(Activation act, const Tensor& x, const DiceState* state,
                        bool update_stats) {
  switch (act) {
    case Activation::kReLU: return ops::relu(x);
    case Activation::kGeLU: return ops::gelu(x);
    case Activation::kSwish: return ops::swish(x);
    case Activation::kIdentity: return x;
    case Activation::kDice:
      if (!state) throw std::invalid_argument("Dice activation needs running statistics");
      return dice(x, state->alpha, state->running_mean, state->running_var, update_stats);
  }
  throw std::invalid_argument("unknown activation");
}

}  // namespace recnas

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/optim.hpp"

#include <cmath>

namespace recnas {

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: params/grads count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw ShapeError("adam: gradient shape " + shape_str(grads[i].shape()) +
                       " does not match parameter " + shape_str(params[i].shape()));
    }
  }
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state_[params[i].id()];
    auto values = params[i].mutable_data();
    const auto& g = grads[i].value();
    if (m.first.empty()) {
      m.first.assign(values.size(), 0.0);
      m.second.assign(values.size(), 0.0);
    }
    ++m.steps;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(m.steps));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(m.steps));
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double gj = g[j] + config_.weight_decay * values[j];
      m.first[j] = config_.beta1 * m.first[j] + (1.0 - config_.beta1) * gj;
      m.second[j] = config_.beta2 * m.second[j] + (1.0 - config_.beta2) * gj * gj;
      const double mhat = m.first[j] / c1;
      const double vhat = m.second[j] / c2;
      values[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

const Adam::Moments* Adam::moments(const Tensor& param) const {
  auto it = state_.find(param.id());
  return it == state_.end() ? nullptr : &it->second;
}

}  // namespace recnas

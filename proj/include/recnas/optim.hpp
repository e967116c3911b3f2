// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "recnas/tensor.hpp"

namespace recnas {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2 added to the gradient
};

// Adam with bias correction. Moments and the bias-correction step are kept per
// parameter, so parameters absent from a step (inactive single-path
// candidates) are left untouched rather than decayed.
class Adam {
 public:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
    std::size_t steps = 0;
  };

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<Tensor> params, std::span<const Tensor> grads);

  std::size_t steps() const { return steps_; }
  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }
  const Moments* moments(const Tensor& param) const;

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::unordered_map<const void*, Moments> state_;
};

}  // namespace recnas

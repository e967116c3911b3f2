// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for gradient tests. Independent of the
// backward passes it checks: it only calls forward code and perturbs leaves.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "recnas/ops.hpp"
#include "recnas/tensor.hpp"

namespace recnas::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;

// Elementwise |a - n| / max(|a|, |n|, floor). The floor keeps gradients that
// are zero up to rounding from dominating the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline Tensor random_leaf(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::parameter(std::move(shape), std::move(v));
}

using Forward = std::function<Tensor()>;

// Scalarises the output of `forward` with a fixed random projection, then
// compares reverse-mode gradients against central differences for every
// element of every input. Returns the worst relative error.
inline double gradcheck(const Forward& forward, std::vector<Tensor> inputs, std::mt19937_64& rng,
                        double step = kFdStep) {
  const Tensor probe_out = forward();
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> weights(probe_out.numel());
  for (auto& w : weights) w = dist(rng);
  const Tensor projection = Tensor::from(probe_out.shape(), weights);

  auto scalar = [&]() {
    const Tensor out = forward();
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) acc += out.value()[i] * weights[i];
    return acc;
  };

  const Tensor loss = ops::sum(ops::mul(forward(), projection));
  const auto analytic = grad(loss, inputs);

  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = scalar();
      data[i] = saved - step;
      const double down = scalar();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, relative_error(analytic[k].value()[i], numeric));
    }
  }
  return worst;
}

}  // namespace recnas::testing

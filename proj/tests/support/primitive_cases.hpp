// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random small instances of every differentiable primitive, shared by the unit
// and acceptance gradient suites.

#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "recnas/activation.hpp"

namespace recnas::testing {

struct GradCase {
  Forward forward;
  std::vector<Tensor> inputs;
};

struct PrimitiveCase {
  std::string name;
  std::function<GradCase(std::mt19937_64&)> make;
};

inline std::size_t extent(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 5) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Values kept away from the kink at zero for piecewise-linear maps.
inline Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = random_leaf(std::move(shape), rng);
  for (auto& v : t.mutable_data())
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - std::abs(v) : 0.05 + v;
  return t;
}

inline std::vector<PrimitiveCase> primitive_cases() {
  std::vector<PrimitiveCase> cases;
  auto unary = [&cases](std::string name, Tensor (*op)(const Tensor&), bool kinked = false) {
    cases.push_back({name, [op, kinked](std::mt19937_64& rng) {
                       Shape s{extent(rng), extent(rng)};
                       Tensor x = kinked ? away_from_zero(s, rng) : random_leaf(s, rng);
                       return GradCase{[op, x] { return op(x); }, {x}};
                     }});
  };
  unary("sigmoid", ops::sigmoid);
  unary("tanh", ops::tanh);
  unary("relu", ops::relu, true);
  unary("gelu", ops::gelu);
  unary("swish", ops::swish);
  unary("softplus", ops::softplus);
  unary("softmax", ops::softmax);

  cases.push_back({"add_broadcast", [](std::mt19937_64& rng) {
                     const std::size_t m = extent(rng), n = extent(rng);
                     Tensor a = random_leaf({m, n}, rng), b = random_leaf({n}, rng);
                     return GradCase{[a, b] { return ops::add(a, b); }, {a, b}};
                   }});
  cases.push_back({"sub_broadcast", [](std::mt19937_64& rng) {
                     const std::size_t m = extent(rng), n = extent(rng);
                     Tensor a = random_leaf({m, 1}, rng), b = random_leaf({m, n}, rng);
                     return GradCase{[a, b] { return ops::sub(a, b); }, {a, b}};
                   }});
  cases.push_back({"mul", [](std::mt19937_64& rng) {
                     Shape s{extent(rng), extent(rng), extent(rng)};
                     Tensor a = random_leaf(s, rng), b = random_leaf(s, rng);
                     return GradCase{[a, b] { return ops::mul(a, b); }, {a, b}};
                   }});
  cases.push_back({"mul_broadcast", [](std::mt19937_64& rng) {
                     const std::size_t b0 = extent(rng), t = extent(rng), d = extent(rng);
                     Tensor a = random_leaf({b0, t, d}, rng), w = random_leaf({b0, t, 1}, rng);
                     return GradCase{[a, w] { return ops::mul(a, w); }, {a, w}};
                   }});
  cases.push_back({"scale_add_scalar", [](std::mt19937_64& rng) {
                     Tensor a = random_leaf({extent(rng), extent(rng)}, rng);
                     return GradCase{[a] { return ops::add_scalar(ops::scale(a, -1.7), 0.3); }, {a}};
                   }});
  cases.push_back({"matmul", [](std::mt19937_64& rng) {
                     const std::size_t m = extent(rng), k = extent(rng), n = extent(rng);
                     Tensor a = random_leaf({m, k}, rng), b = random_leaf({k, n}, rng);
                     return GradCase{[a, b] { return ops::matmul(a, b); }, {a, b}};
                   }});
  cases.push_back({"bmm", [](std::mt19937_64& rng) {
                     const std::size_t b0 = extent(rng), m = extent(rng), k = extent(rng),
                                       n = extent(rng);
                     Tensor a = random_leaf({b0, m, k}, rng), b = random_leaf({b0, k, n}, rng);
                     return GradCase{[a, b] { return ops::bmm(a, b); }, {a, b}};
                   }});
  cases.push_back({"bmm_transposed", [](std::mt19937_64& rng) {
                     const std::size_t b0 = extent(rng), m = extent(rng), k = extent(rng),
                                       n = extent(rng);
                     Tensor a = random_leaf({b0, m, k}, rng), b = random_leaf({b0, n, k}, rng);
                     return GradCase{[a, b] { return ops::bmm(a, b, true); }, {a, b}};
                   }});
  cases.push_back({"layer_norm", [](std::mt19937_64& rng) {
                     const std::size_t d = extent(rng, 2, 8);
                     Tensor x = random_leaf({extent(rng), d}, rng);
                     Tensor g = random_leaf({d}, rng), b = random_leaf({d}, rng);
                     return GradCase{[x, g, b] { return ops::layer_norm(x, g, b, 1e-6); }, {x, g, b}};
                   }});
  cases.push_back({"sum_mean", [](std::mt19937_64& rng) {
                     Tensor a = random_leaf({extent(rng), extent(rng)}, rng);
                     return GradCase{[a] { return ops::add(ops::sum(a), ops::mean(a)); }, {a}};
                   }});
  cases.push_back({"sum_axis", [](std::mt19937_64& rng) {
                     Tensor a = random_leaf({extent(rng), extent(rng), extent(rng)}, rng);
                     const std::size_t axis = extent(rng, 0, 2);
                     return GradCase{[a, axis] { return ops::sum_axis(a, axis); }, {a}};
                   }});
  cases.push_back({"concat", [](std::mt19937_64& rng) {
                     const std::size_t m = extent(rng);
                     Tensor a = random_leaf({m, extent(rng)}, rng), b = random_leaf({m, extent(rng)}, rng);
                     return GradCase{[a, b] {
                                       const Tensor parts[] = {a, b};
                                       return ops::concat(parts, 1);
                                     },
                                     {a, b}};
                   }});
  cases.push_back({"slice", [](std::mt19937_64& rng) {
                     const std::size_t n = extent(rng, 2, 8);
                     Tensor a = random_leaf({extent(rng), n, extent(rng)}, rng);
                     const std::size_t start = extent(rng, 0, n - 1);
                     const std::size_t len = extent(rng, 1, n - start);
                     return GradCase{[a, start, len] { return ops::slice(a, 1, start, len); }, {a}};
                   }});
  cases.push_back({"reshape", [](std::mt19937_64& rng) {
                     const std::size_t m = extent(rng), n = extent(rng);
                     Tensor a = random_leaf({m, n}, rng);
                     return GradCase{[a, m, n] { return ops::reshape(a, {n, m}); }, {a}};
                   }});
  cases.push_back({"embedding_bag", [](std::mt19937_64& rng) {
                     const std::size_t vocab = extent(rng, 2, 8), width = extent(rng);
                     Tensor table = random_leaf({vocab, width}, rng);
                     std::vector<std::size_t> offsets{0};
                     std::vector<std::int64_t> ids;
                     const std::size_t rows = extent(rng);
                     for (std::size_t r = 0; r < rows; ++r) {
                       const std::size_t bag = extent(rng, 0, 3);
                       for (std::size_t i = 0; i < bag; ++i)
                         ids.push_back(static_cast<std::int64_t>(extent(rng, 0, vocab - 1)));
                       offsets.push_back(ids.size());
                     }
                     return GradCase{[table, offsets, ids] {
                                       return ops::embedding_bag(table, offsets, ids);
                                     },
                                     {table}};
                   }});
  cases.push_back({"conv1d_same", [](std::mt19937_64& rng) {
                     const std::size_t b0 = extent(rng, 1, 3), t = extent(rng, 1, 8),
                                       cin = extent(rng), cout = extent(rng);
                     const std::size_t k = 2 * extent(rng, 0, 3) + 1;
                     const std::size_t dil = extent(rng, 1, 2);
                     Tensor x = random_leaf({b0, t, cin}, rng), w = random_leaf({k, cin, cout}, rng),
                            bias = random_leaf({cout}, rng);
                     return GradCase{[x, w, bias, dil] { return ops::conv1d_same(x, w, bias, dil); },
                                     {x, w, bias}};
                   }});
  for (auto kind : {ops::PoolKind::kAverage, ops::PoolKind::kMax}) {
    cases.push_back({kind == ops::PoolKind::kMax ? "max_pool" : "avg_pool",
                     [kind](std::mt19937_64& rng) {
                       const std::size_t b0 = extent(rng, 1, 3), t = extent(rng, 1, 8), c = extent(rng);
                       Tensor x = random_leaf({b0, t, c}, rng);
                       std::vector<double> mask(b0 * t);
                       for (std::size_t b = 0; b < b0; ++b) {
                         const std::size_t len = extent(rng, 1, t);
                         for (std::size_t s = 0; s < t; ++s) mask[b * t + s] = s < len ? 1.0 : 0.0;
                       }
                       return GradCase{[x, mask, kind] { return ops::pool1d_same(x, mask, kind, 3); },
                                       {x}};
                     }});
  }
  cases.push_back({"bce_with_logits", [](std::mt19937_64& rng) {
                     const std::size_t n = extent(rng, 1, 8);
                     Tensor z = random_leaf({n}, rng, -4.0, 4.0);
                     std::vector<double> y(n);
                     for (auto& v : y) v = static_cast<double>(extent(rng, 0, 1));
                     const Tensor labels = Tensor::from({n}, y);
                     return GradCase{[z, labels] { return ops::bce_with_logits(z, labels); }, {z}};
                   }});
  cases.push_back({"dice", [](std::mt19937_64& rng) {
                     const std::size_t w = extent(rng);
                     Tensor x = random_leaf({extent(rng), w}, rng), alpha = random_leaf({w}, rng);
                     const Tensor mean = random_leaf({w}, rng).detach();
                     const Tensor var = random_leaf({w}, rng, 0.5, 2.0).detach();
                     return GradCase{[x, alpha, mean, var] { return dice(x, alpha, mean, var, false); },
                                     {x, alpha}};
                   }});
  return cases;
}

}  // namespace recnas::testing

// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace recnas::ops {

namespace {

using detail::GradSlots;

// Flat input offsets for every output element under broadcasting.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
};

Broadcast plan_broadcast(const Shape& sa, const Shape& sb, const char* op) {
  const std::size_t rank = std::max(sa.size(), sb.size());
  Shape out(rank);
  auto extent = [rank](const Shape& s, std::size_t axis) -> std::size_t {
    const std::size_t pad = rank - s.size();
    return axis < pad ? 1 : s[axis - pad];
  };
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = extent(sa, i);
    const std::size_t eb = extent(sb, i);
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(sa) + " with " +
                       shape_str(sb));
    }
    out[i] = std::max(ea, eb);
  }
  Broadcast plan;
  plan.out = out;
  const std::size_t n = shape_numel(out);
  plan.a_index.resize(n);
  plan.b_index.resize(n);
  std::vector<std::size_t> stride_a(rank), stride_b(rank);
  std::size_t acc_a = 1, acc_b = 1;
  for (std::size_t i = rank; i-- > 0;) {
    const std::size_t ea = extent(sa, i);
    const std::size_t eb = extent(sb, i);
    stride_a[i] = ea == 1 ? 0 : acc_a;
    stride_b[i] = eb == 1 ? 0 : acc_b;
    acc_a *= ea;
    acc_b *= eb;
  }
  std::vector<std::size_t> counter(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    plan.a_index[flat] = ia;
    plan.b_index[flat] = ib;
    for (std::size_t axis = rank; axis-- > 0;) {
      if (++counter[axis] < out[axis]) {
        ia += stride_a[axis];
        ib += stride_b[axis];
        break;
      }
      ia -= stride_a[axis] * (out[axis] - 1);
      ib -= stride_b[axis] * (out[axis] - 1);
      counter[axis] = 0;
    }
  }
  return plan;
}

enum class Binary { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, Binary kind, const char* op) {
  const auto& va = a.value();
  const auto& vb = b.value();
  if (a.shape() == b.shape()) {
    const std::size_t n = va.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      switch (kind) {
        case Binary::kAdd: out[i] = va[i] + vb[i]; break;
        case Binary::kSub: out[i] = va[i] - vb[i]; break;
        case Binary::kMul: out[i] = va[i] * vb[i]; break;
      }
    }
    return make_result(op, a.shape(), std::move(out), {a, b},
                       [kind, a, b](std::span<const double> g, GradSlots& gin) {
                         const auto& xa = a.value();
                         const auto& xb = b.value();
                         if (gin[0]) {
                           auto& ga = *gin[0];
                           for (std::size_t i = 0; i < g.size(); ++i)
                             ga[i] += kind == Binary::kMul ? g[i] * xb[i] : g[i];
                         }
                         if (gin[1]) {
                           auto& gb = *gin[1];
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             switch (kind) {
                               case Binary::kAdd: gb[i] += g[i]; break;
                               case Binary::kSub: gb[i] -= g[i]; break;
                               case Binary::kMul: gb[i] += g[i] * xa[i]; break;
                             }
                           }
                         }
                       });
  }
  auto plan = std::make_shared<Broadcast>(plan_broadcast(a.shape(), b.shape(), op));
  const std::size_t n = plan->a_index.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = va[plan->a_index[i]];
    const double y = vb[plan->b_index[i]];
    switch (kind) {
      case Binary::kAdd: out[i] = x + y; break;
      case Binary::kSub: out[i] = x - y; break;
      case Binary::kMul: out[i] = x * y; break;
    }
  }
  Shape shape = plan->out;
  return make_result(op, std::move(shape), std::move(out), {a, b},
                     [kind, a, b, plan](std::span<const double> g, GradSlots& gin) {
                       const auto& xa = a.value();
                       const auto& xb = b.value();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const std::size_t ia = plan->a_index[i];
                         const std::size_t ib = plan->b_index[i];
                         if (gin[0]) (*gin[0])[ia] += kind == Binary::kMul ? g[i] * xb[ib] : g[i];
                         if (gin[1]) {
                           switch (kind) {
                             case Binary::kAdd: (*gin[1])[ib] += g[i]; break;
                             case Binary::kSub: (*gin[1])[ib] -= g[i]; break;
                             case Binary::kMul: (*gin[1])[ib] += g[i] * xa[ia]; break;
                           }
                         }
                       }
                     });
}

// Elementwise map whose derivative is expressed through input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  const auto& x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  auto out_shared = std::make_shared<std::vector<double>>(y);
  return make_result(op, a.shape(), std::move(y), {a},
                     [a, out_shared, deriv](std::span<const double> g, GradSlots& gin) {
                       if (!gin[0]) return;
                       const auto& xv = a.value();
                       auto& ga = *gin[0];
                       for (std::size_t i = 0; i < g.size(); ++i)
                         ga[i] += g[i] * deriv(xv[i], (*out_shared)[i]);
                     });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      a, "add_scalar", [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const auto& va = a.value();
  const auto& vb = b.value();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = va[i * k + p];
      if (s == 0.0) continue;
      const double* brow = vb.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {a, b},
                     [a, b, m, k, n](std::span<const double> g, GradSlots& gin) {
                       const auto& xa = a.value();
                       const auto& xb = b.value();
                       if (gin[0]) {
                         auto& ga = *gin[0];
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             const double* grow = g.data() + i * n;
                             const double* brow = xb.data() + p * n;
                             for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                             ga[i * k + p] += acc;
                           }
                       }
                       if (gin[1]) {
                         auto& gb = *gin[1];
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             const double s = xa[i * k + p];
                             if (s == 0.0) continue;
                             const double* grow = g.data() + i * n;
                             double* gbrow = gb.data() + p * n;
                             for (std::size_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
                           }
                       }
                     });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != batch || bk != k) {
    throw ShapeError("bmm: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  // Element (p,j) of the right operand for batch item `t`.
  auto b_at = [transpose_b, k, n](std::size_t t, std::size_t p, std::size_t j) {
    return transpose_b ? t * n * k + j * k + p : t * k * n + p * n + j;
  };
  const auto& va = a.value();
  const auto& vb = b.value();
  std::vector<double> out(batch * m * n, 0.0);
  for (std::size_t t = 0; t < batch; ++t)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += va[(t * m + i) * k + p] * vb[b_at(t, p, j)];
        out[(t * m + i) * n + j] = acc;
      }
  return make_result("bmm", {batch, m, n}, std::move(out), {a, b},
                     [a, b, batch, m, k, n, b_at](std::span<const double> g, GradSlots& gin) {
                       const auto& xa = a.value();
                       const auto& xb = b.value();
                       for (std::size_t t = 0; t < batch; ++t)
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) {
                             const double go = g[(t * m + i) * n + j];
                             if (go == 0.0) continue;
                             for (std::size_t p = 0; p < k; ++p) {
                               if (gin[0]) (*gin[0])[(t * m + i) * k + p] += go * xb[b_at(t, p, j)];
                               if (gin[1]) (*gin[1])[b_at(t, p, j)] += go * xa[(t * m + i) * k + p];
                             }
                           }
                     });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      a, "gelu", [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

Tensor swish(const Tensor& a) {
  return unary(
      a, "swish", [](double x) { return x * sigmoid_scalar(x); },
      [](double x, double) {
        const double s = sigmoid_scalar(x);
        return s + x * s * (1.0 - s);
      });
}

Tensor softplus(const Tensor& a) {
  return unary(a, "softplus", softplus_scalar, [](double x, double) { return sigmoid_scalar(x); });
}

Tensor softmax(const Tensor& a) {
  const std::size_t width = a.shape().back();
  const std::size_t rows = a.numel() / width;
  const auto& x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * width;
    double* yr = y.data() + r * width;
    const double peak = *std::max_element(xr, xr + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += yr[j] = std::exp(xr[j] - peak);
    for (std::size_t j = 0; j < width; ++j) yr[j] /= total;
  }
  auto saved = std::make_shared<std::vector<double>>(y);
  return make_result("softmax", a.shape(), std::move(y), {a},
                     [saved, rows, width](std::span<const double> g, GradSlots& gin) {
                       if (!gin[0]) return;
                       auto& ga = *gin[0];
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* yr = saved->data() + r * width;
                         const double* gr = g.data() + r * width;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < width; ++j) dot += gr[j] * yr[j];
                         for (std::size_t j = 0; j < width; ++j)
                           ga[r * width + j] += yr[j] * (gr[j] - dot);
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t width = x.shape().back();
  if (gamma.shape() != Shape{width} || beta.shape() != Shape{width}) {
    throw ShapeError("layer_norm: scale/shift must be (" + std::to_string(width) + ")");
  }
  const std::size_t rows = x.numel() / width;
  const auto& xv = x.value();
  const auto& gv = gamma.value();
  const auto& bv = beta.value();
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> y(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += xr[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < width; ++j) {
      const double h = (xr[j] - mu) * inv;
      (*xhat)[r * width + j] = h;
      y[r * width + j] = h * gv[j] + bv[j];
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(y), {x, gamma, beta},
      [gamma, xhat, inv_std, rows, width](std::span<const double> g, GradSlots& gin) {
        const auto& gv = gamma.value();
        const double w = static_cast<double>(width);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* hr = xhat->data() + r * width;
          const double* gr = g.data() + r * width;
          if (gin[1])
            for (std::size_t j = 0; j < width; ++j) (*gin[1])[j] += gr[j] * hr[j];
          if (gin[2])
            for (std::size_t j = 0; j < width; ++j) (*gin[2])[j] += gr[j];
          if (!gin[0]) continue;
          double sum_d = 0.0, sum_dh = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            const double d = gr[j] * gv[j];
            sum_d += d;
            sum_dh += d * hr[j];
          }
          const double inv = (*inv_std)[r];
          for (std::size_t j = 0; j < width; ++j) {
            const double d = gr[j] * gv[j];
            (*gin[0])[r * width + j] += inv / w * (w * d - sum_d - hr[j] * sum_dh);
          }
        }
      });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.value()) total += v;
  return make_result("sum", {1}, {total}, {a}, [](std::span<const double> g, GradSlots& gin) {
    if (!gin[0]) return;
    for (auto& v : *gin[0]) v += g[0];
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  return scale(sum(a), 1.0 / n);
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw ShapeError("sum_axis: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t extent = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  if (out_shape.empty()) out_shape.push_back(1);
  const auto& x = a.value();
  std::vector<double> y(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t e = 0; e < extent; ++e)
      for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] += x[(o * extent + e) * inner + i];
  return make_result("sum_axis", std::move(out_shape), std::move(y), {a},
                     [outer, extent, inner](std::span<const double> g, GradSlots& gin) {
                       if (!gin[0]) return;
                       auto& ga = *gin[0];
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t e = 0; e < extent; ++e)
                           for (std::size_t i = 0; i < inner; ++i)
                             ga[(o * extent + e) * inner + i] += g[o * inner + i];
                     });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i])
        throw ShapeError("concat: " + shape_str(s) + " vs " + shape_str(first));
    extents.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total;
  std::vector<double> y(outer * total * inner);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& x = parts[k].value();
    const std::size_t span_len = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.data() + o * span_len, span_len, y.data() + (o * total + offset) * inner);
    offset += extents[k];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat", std::move(out_shape), std::move(y), std::move(inputs),
                     [extents, outer, inner, total](std::span<const double> g, GradSlots& gin) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < extents.size(); ++k) {
                         const std::size_t span_len = extents[k] * inner;
                         if (gin[k]) {
                           auto& gk = *gin[k];
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t i = 0; i < span_len; ++i)
                               gk[o * span_len + i] += g[(o * total + offset) * inner + i];
                         }
                         offset += extents[k];
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  if (axis >= s.size() || length == 0 || start + length > s[axis]) {
    throw ShapeError("slice: [" + std::to_string(start) + ", +" + std::to_string(length) +
                     ") on axis " + std::to_string(axis) + " of " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t extent = s[axis];
  Shape out_shape = s;
  out_shape[axis] = length;
  const auto& x = a.value();
  std::vector<double> y(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(x.data() + (o * extent + start) * inner, length * inner,
                y.data() + o * length * inner);
  return make_result("slice", std::move(out_shape), std::move(y), {a},
                     [outer, extent, inner, start, length](std::span<const double> g,
                                                           GradSlots& gin) {
                       if (!gin[0]) return;
                       auto& ga = *gin[0];
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < length * inner; ++i)
                           ga[(o * extent + start) * inner + i] += g[o * length * inner + i];
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  return make_result("reshape", std::move(shape), a.value(), {a},
                     [](std::span<const double> g, GradSlots& gin) {
                       if (!gin[0]) return;
                       auto& ga = *gin[0];
                       for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                     });
}

Tensor embedding_bag(const Tensor& table, std::span<const std::size_t> offsets,
                     std::span<const std::int64_t> ids) {
  require_rank(table, 2, "embedding_bag");
  if (offsets.empty() || offsets.back() != ids.size()) {
    throw ShapeError("embedding_bag: offsets must end at ids.size()");
  }
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  const std::size_t rows = offsets.size() - 1;
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embedding_bag: id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(vocab));
    }
  }
  const auto& tv = table.value();
  std::vector<double> y(rows * width, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
      const double* src = tv.data() + static_cast<std::size_t>(ids[p]) * width;
      for (std::size_t j = 0; j < width; ++j) y[r * width + j] += src[j];
    }
  auto off = std::make_shared<std::vector<std::size_t>>(offsets.begin(), offsets.end());
  auto idv = std::make_shared<std::vector<std::int64_t>>(ids.begin(), ids.end());
  return make_result("embedding_bag", {rows, width}, std::move(y), {table},
                     [off, idv, rows, width](std::span<const double> g, GradSlots& gin) {
                       if (!gin[0]) return;
                       auto& gt = *gin[0];
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t p = (*off)[r]; p < (*off)[r + 1]; ++p) {
                           double* dst = gt.data() + static_cast<std::size_t>((*idv)[p]) * width;
                           for (std::size_t j = 0; j < width; ++j) dst[j] += g[r * width + j];
                         }
                     });
}

Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t dilation) {
  require_rank(x, 3, "conv1d_same");
  require_rank(w, 3, "conv1d_same");
  const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
  const std::size_t k = w.dim(0), cout = w.dim(2);
  if (w.dim(1) != cin || k % 2 == 0 || bias.shape() != Shape{cout} || dilation == 0) {
    throw ShapeError("conv1d_same: input " + shape_str(x.shape()) + ", kernel " +
                     shape_str(w.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const long half = static_cast<long>(k / 2);
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = bias.value();
  std::vector<double> y(batch * steps * cout);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t) {
      double* yr = y.data() + (b * steps + t) * cout;
      std::copy(bv.begin(), bv.end(), yr);
      for (std::size_t j = 0; j < k; ++j) {
        const long src = static_cast<long>(t) + (static_cast<long>(j) - half) * static_cast<long>(dilation);
        if (src < 0 || src >= static_cast<long>(steps)) continue;
        const double* xr = xv.data() + (b * steps + static_cast<std::size_t>(src)) * cin;
        for (std::size_t c = 0; c < cin; ++c) {
          const double s = xr[c];
          if (s == 0.0) continue;
          const double* wr = wv.data() + (j * cin + c) * cout;
          for (std::size_t o = 0; o < cout; ++o) yr[o] += s * wr[o];
        }
      }
    }
  return make_result(
      "conv1d_same", {batch, steps, cout}, std::move(y), {x, w, bias},
      [x, w, batch, steps, cin, cout, k, half, dilation](std::span<const double> g,
                                                         GradSlots& gin) {
        const auto& xv = x.value();
        const auto& wv = w.value();
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t t = 0; t < steps; ++t) {
            const double* gr = g.data() + (b * steps + t) * cout;
            if (gin[2])
              for (std::size_t o = 0; o < cout; ++o) (*gin[2])[o] += gr[o];
            for (std::size_t j = 0; j < k; ++j) {
              const long src = static_cast<long>(t) +
                               (static_cast<long>(j) - half) * static_cast<long>(dilation);
              if (src < 0 || src >= static_cast<long>(steps)) continue;
              const std::size_t xrow = (b * steps + static_cast<std::size_t>(src)) * cin;
              for (std::size_t c = 0; c < cin; ++c) {
                const std::size_t wrow = (j * cin + c) * cout;
                if (gin[0]) {
                  double acc = 0.0;
                  for (std::size_t o = 0; o < cout; ++o) acc += gr[o] * wv[wrow + o];
                  (*gin[0])[xrow + c] += acc;
                }
                if (gin[1]) {
                  const double s = xv[xrow + c];
                  for (std::size_t o = 0; o < cout; ++o) (*gin[1])[wrow + o] += s * gr[o];
                }
              }
            }
          }
      });
}

Tensor pool1d_same(const Tensor& x, std::span<const double> mask, PoolKind kind, std::size_t k) {
  require_rank(x, 3, "pool1d_same");
  const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
  if (mask.size() != batch * steps || k % 2 == 0) {
    throw ShapeError("pool1d_same: mask size or even window");
  }
  const long half = static_cast<long>(k / 2);
  const auto& xv = x.value();
  std::vector<double> y(xv.size(), 0.0);
  // For max: source row of the winner per output element; for average: the
  // divisor per output step.
  auto source = std::make_shared<std::vector<long>>(kind == PoolKind::kMax ? xv.size() : 0, -1);
  auto divisor = std::make_shared<std::vector<double>>(batch * steps, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t out_row = (b * steps + t) * width;
      int count = 0;
      for (long off = -half; off <= half; ++off) {
        const long s = static_cast<long>(t) + off;
        if (s < 0 || s >= static_cast<long>(steps)) continue;
        const std::size_t srow = b * steps + static_cast<std::size_t>(s);
        if (mask[srow] == 0.0) continue;
        const double* xr = xv.data() + srow * width;
        for (std::size_t c = 0; c < width; ++c) {
          if (kind == PoolKind::kAverage) {
            y[out_row + c] += xr[c];
          } else if (count == 0 || xr[c] > y[out_row + c]) {
            y[out_row + c] = xr[c];
            (*source)[out_row + c] = static_cast<long>(srow * width + c);
          }
        }
        ++count;
      }
      (*divisor)[b * steps + t] = count;
      if (kind == PoolKind::kAverage && count > 0)
        for (std::size_t c = 0; c < width; ++c) y[out_row + c] /= count;
    }
  auto maskv = std::make_shared<std::vector<double>>(mask.begin(), mask.end());
  return make_result(
      kind == PoolKind::kMax ? "max_pool" : "avg_pool", x.shape(), std::move(y), {x},
      [kind, source, divisor, maskv, batch, steps, width, half](std::span<const double> g,
                                                                GradSlots& gin) {
        if (!gin[0]) return;
        auto& gx = *gin[0];
        if (kind == PoolKind::kMax) {
          for (std::size_t i = 0; i < g.size(); ++i)
            if ((*source)[i] >= 0) gx[static_cast<std::size_t>((*source)[i])] += g[i];
          return;
        }
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t t = 0; t < steps; ++t) {
            const double count = (*divisor)[b * steps + t];
            if (count == 0.0) continue;
            const double* gr = g.data() + (b * steps + t) * width;
            for (long off = -half; off <= half; ++off) {
              const long s = static_cast<long>(t) + off;
              if (s < 0 || s >= static_cast<long>(steps)) continue;
              const std::size_t srow = b * steps + static_cast<std::size_t>(s);
              if ((*maskv)[srow] == 0.0) continue;
              for (std::size_t c = 0; c < width; ++c) gx[srow * width + c] += gr[c] / count;
            }
          }
      });
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& labels) {
  if (logits.numel() != labels.numel()) {
    throw ShapeError("bce_with_logits: " + shape_str(logits.shape()) + " vs " +
                     shape_str(labels.shape()));
  }
  const auto& z = logits.value();
  const auto& yv = labels.value();
  const double n = static_cast<double>(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += softplus_scalar(z[i]) - z[i] * yv[i];
  return make_result("bce_with_logits", {1}, {total / n}, {logits, labels},
                     [logits, labels, n](std::span<const double> g, GradSlots& gin) {
                       const auto& zv = logits.value();
                       const auto& lv = labels.value();
                       for (std::size_t i = 0; i < zv.size(); ++i) {
                         if (gin[0]) (*gin[0])[i] += g[0] * (sigmoid_scalar(zv[i]) - lv[i]) / n;
                         if (gin[1]) (*gin[1])[i] -= g[0] * zv[i] / n;
                       }
                     });
}

}  // namespace recnas::ops

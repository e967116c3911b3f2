// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace recnas {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

static std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                               bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive: " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> values(shape_numel(shape), value);
  return Tensor(make_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), true));
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis out of range for " + shape_str(s));
  return s[axis];
}

const std::vector<double>& Tensor::value() const {
  if (!node_) throw std::logic_error("undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar " + shape_str(shape()));
  return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= s[axis]) throw ShapeError("index out of range");
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node_->value[flat];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const char* Tensor::op() const { return node_ ? node_->op : "undefined"; }

std::span<double> Tensor::mutable_data() {
  if (!node_) throw std::logic_error("undefined tensor");
  if (node_->backward) throw std::logic_error("in-place write to a recorded tensor");
  return node_->value;
}

void Tensor::set_requires_grad(bool flag) {
  if (!node_) throw std::logic_error("undefined tensor");
  if (node_->backward) throw std::logic_error("requires_grad can only change on leaves");
  node_->requires_grad = flag;
}

Tensor Tensor::clone() const {
  return Tensor(make_leaf(shape(), value(), requires_grad()));
}

Tensor Tensor::detach() const { return Tensor(make_leaf(shape(), value(), false)); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, detail::BackwardFn backward) {
  for (double v : value) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite output from ") + op + " " + shape_str(shape));
    }
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (shape_numel(node->shape) != node->value.size()) {
    throw std::logic_error(std::string("primitive ") + op + " produced a mis-sized buffer");
  }
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.requires_grad()) return tape;
  std::vector<detail::Node*> post;
  std::unordered_set<detail::Node*> seen;
  // (node, next input index) explicit stack for post-order DFS.
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      post.push_back(node);
      stack.pop_back();
    }
  }
  tape.order_.assign(post.rbegin(), post.rend());
  return tape;
}

std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> params) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("grad() requires a scalar loss");
  }
  std::unordered_map<detail::Node*, std::vector<double>> grads;
  const Tape tape = Tape::record(loss);
  if (!tape.nodes().empty()) grads[tape.nodes().front()] = {1.0};

  for (detail::Node* node : tape.nodes()) {
    if (!node->backward) continue;
    auto it = grads.find(node);
    if (it == grads.end()) continue;
    const std::vector<double> grad_out = std::move(it->second);
    detail::GradSlots slots(node->inputs.size(), nullptr);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      detail::Node* in = node->inputs[i].get();
      if (!in->requires_grad) continue;
      auto& g = grads[in];
      if (g.empty()) g.assign(in->value.size(), 0.0);
      slots[i] = &g;
    }
    node->backward(grad_out, slots);
  }

  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto it = grads.find(p.node().get());
    if (it == grads.end() || it->second.empty()) {
      out.push_back(Tensor::zeros(p.shape()));
    } else {
      out.push_back(Tensor::from(p.shape(), it->second));
    }
  }
  return out;
}

}  // namespace recnas

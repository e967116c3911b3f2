// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense f64 tensors with a dynamically recorded tape for reverse-mode AD.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace recnas {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Accumulates gradient contributions for one input of a node. `target` is
// null when that input does not need a gradient.
using GradSlots = std::vector<std::vector<double>*>;
using BackwardFn = std::function<void(std::span<const double> grad_out, GradSlots& grad_in)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  // Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const { return value().size(); }
  const std::vector<double>& value() const;
  std::span<const double> data() const { return value(); }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;
  bool requires_grad() const;
  const char* op() const;

  // In-place access is reserved for leaves (parameters and buffers).
  std::span<double> mutable_data();
  void set_requires_grad(bool flag);

  // Deep copy of a leaf; the copy keeps requires_grad.
  Tensor clone() const;
  // Leaf sharing this tensor's values but cut from the tape.
  Tensor detach() const;

  // Identity of the underlying storage, used to key optimizer state.
  const void* id() const { return node_.get(); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Builds the output of a primitive. The node records `inputs` and `backward`
// only when recording is enabled and some input requires a gradient.
// Throws NumericError if any output value is not finite.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, detail::BackwardFn backward);

// Reverse topological order of every recorded node reachable from `root`.
class Tape {
 public:
  static Tape record(const Tensor& root);
  const std::vector<detail::Node*>& nodes() const { return order_; }

 private:
  std::vector<detail::Node*> order_;  // root first
};

// d loss / d param for every param. Params unreachable from loss get zeros.
std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> params);

}  // namespace recnas

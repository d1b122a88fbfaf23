// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#ifndef SURGDEPTH_SCALAR
#define SURGDEPTH_SCALAR float
#endif

namespace surgdepth {

// Storage type of every tensor. The default build uses float; a double build
// exists for finite-difference gradient checks.
using Scalar = SURGDEPTH_SCALAR;

using Shape = std::vector<std::int64_t>;

std::int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);
// Row-major strides for `shape`.
Shape strides_of(const Shape& shape);

class Tensor;
struct TensorImpl;

// Backward rule of a recorded operation. Reads out.grad and accumulates into
// the grads of the node's inputs.
using BackwardFn = std::function<void(const TensorImpl& out)>;

// One recorded operation: its inputs and how to push gradient back into them.
struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<Scalar> data;
  // Empty until something accumulates into it.
  std::vector<Scalar> grad;
  bool requires_grad = false;
  // Null for leaves.
  std::shared_ptr<Node> node;
};

// Dense row-major tensor of Scalar. Copies are shallow handles onto the same
// storage; use clone() or detach() for an independent buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = 0.0f);
  Tensor(Shape shape, std::vector<Scalar> data);

  static Tensor scalar(Scalar value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  // Negative axes count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<const Scalar> data() const { return impl_->data; }
  std::span<Scalar> mutable_data() { return impl_->data; }
  Scalar item() const;
  Scalar at(std::initializer_list<std::int64_t> index) const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !impl_->grad.empty(); }
  // Empty span when no gradient has been accumulated.
  std::span<const Scalar> grad() const { return impl_->grad; }
  // Allocates a zero gradient on first use.
  std::span<Scalar> grad_slot() const;
  void zero_grad() const;

  // Fresh leaf holding a copy of the data.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  const std::shared_ptr<Node>& node() const { return impl_->node; }
  TensorImpl* impl() const { return impl_.get(); }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Builds the result of an operation. A node is attached only when at least
// one input takes part in differentiation.
Tensor make_result(std::string_view op, Shape shape, std::vector<Scalar> data, std::vector<Tensor> inputs,
                   BackwardFn backward);

// Throws NumericError naming `what` if any element is NaN or Inf.
void check_finite(std::span<const Scalar> values, std::string_view what);

}  // namespace surgdepth

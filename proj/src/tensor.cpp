// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "surgdepth/errors.hpp"

namespace surgdepth {

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Shape strides_of(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) strides[i] = strides[i + 1] * shape[i + 1];
  return strides;
}

namespace {

void validate_shape(const Shape& shape) {
  for (auto d : shape)
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, Scalar fill) : impl_(std::make_shared<TensorImpl>()) {
  validate_shape(shape);
  impl_->data.assign(static_cast<std::size_t>(numel_of(shape)), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<Scalar> data) : impl_(std::make_shared<TensorImpl>()) {
  validate_shape(shape);
  if (numel_of(shape) != static_cast<std::int64_t>(data.size()))
    throw DimensionError("shape " + shape_str(shape) + " does not hold " + std::to_string(data.size()) + " values");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::scalar(Scalar value) { return Tensor(Shape{}, std::vector<Scalar>{value}); }

std::int64_t Tensor::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return impl_->shape[a];
}

Scalar Tensor::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

Scalar Tensor::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) throw DimensionError("index rank does not match " + shape_str(shape()));
  const Shape strides = strides_of(shape());
  std::int64_t flat = 0;
  int k = 0;
  for (auto i : index) {
    if (i < 0 || i >= impl_->shape[k]) throw DimensionError("index out of range");
    flat += i * strides[k++];
  }
  return impl_->data[flat];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

std::span<Scalar> Tensor::grad_slot() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() const { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f); }

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor make_result(std::string_view op, Shape shape, std::vector<Scalar> data, std::vector<Tensor> inputs,
                   BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (needs_grad) {
    out.set_requires_grad(true);
    out.impl()->node = std::make_shared<Node>(Node{std::string(op), std::move(inputs), std::move(backward)});
  }
  return out;
}

void check_finite(std::span<const Scalar> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw NumericError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
}

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "surgdepth/tensor.hpp"

namespace surgdepth {

// Recorded operations reachable from a root, in topological order: every
// entry's inputs appear before it.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::span<const Tensor> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Tensor> entries_;
};

// Populates d(loss)/d(t) for every requires_grad leaf reachable from `loss`.
// Leaf gradients accumulate across calls; intermediate gradients are reset.
void backward(const Tensor& loss);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void zero_grads(std::span<const NamedTensor> params);

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  // Entries checked per tensor; 0 checks all of them.
  std::int64_t samples_per_tensor = 0;
  std::uint64_t seed = 0;
  // Lower bound on the denominator of the relative error so that entries
  // with vanishing gradient are compared in absolute terms.
  double min_scale = 1e-8;
};

struct TensorGradError {
  std::string name;
  std::int64_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorGradError> tensors;
  std::int64_t checked = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compares backward() against central differences of `f`, which must rebuild
// its graph on every call and return a scalar.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<const NamedTensor> params,
                           const GradCheckOptions& options = {});

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_set>

#include "surgdepth/errors.hpp"
#include "surgdepth/rng.hpp"

namespace surgdepth {

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined() || !root.node()) return tape;
  std::unordered_set<const TensorImpl*> visited;
  // Iterative post-order DFS; graphs from deep models overflow recursion.
  struct Frame {
    Tensor t;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root.impl());
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& inputs = top.t.node()->inputs;
    if (top.next < inputs.size()) {
      const Tensor& in = inputs[top.next++];
      if (in.defined() && in.node() && visited.insert(in.impl()).second) stack.push_back({in, 0});
    } else {
      tape.entries_.push_back(top.t);
      stack.pop_back();
    }
  }
  return tape;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) throw UsageError("backward() needs a scalar loss");
  if (!loss.requires_grad()) {
    std::cerr << "warning: backward() on a loss detached from every parameter; no gradients\n";
    return;
  }
  Tensor root = loss;
  if (!root.node()) {
    root.grad_slot()[0] += 1.0f;
    return;
  }
  const Tape tape = Tape::record(root);
  for (const Tensor& t : tape.entries()) {
    auto& g = t.impl()->grad;
    g.assign(t.impl()->data.size(), 0.0f);
  }
  root.impl()->grad[0] = 1.0f;
  const auto entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    const TensorImpl& out = *it->impl();
    out.node->backward(out);
  }
}

void zero_grads(std::span<const NamedTensor> params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<const NamedTensor> params,
                           const GradCheckOptions& options) {
  if (options.step <= 0.0) throw UsageError("grad_check step must be positive");
  GradCheckReport report;

  // Snapshot existing grads so the check leaves accumulation state untouched.
  std::vector<std::vector<Scalar>> saved;
  for (const auto& p : params) {
    saved.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    Tensor t = p.tensor;
    t.zero_grad();
  }

  const Tensor loss = f();
  const double base = loss.item();
  if (static_cast<double>(f().item()) != base)
    throw DeterminismError("grad_check: two forward passes returned different losses");
  backward(loss);

  Rng rng(options.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].tensor;
    const std::vector<Scalar> analytic(t.grad().begin(), t.grad().end());
    const std::int64_t n = t.numel();
    std::vector<std::int64_t> indices;
    if (options.samples_per_tensor <= 0 || options.samples_per_tensor >= n) {
      indices.resize(n);
      for (std::int64_t i = 0; i < n; ++i) indices[i] = i;
    } else {
      for (std::int64_t i = 0; i < options.samples_per_tensor; ++i)
        indices.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
    }

    TensorGradError err;
    err.name = params[pi].name;
    auto data = t.mutable_data();
    for (auto i : indices) {
      const Scalar orig = data[i];
      const Scalar plus = static_cast<Scalar>(orig + options.step);
      const Scalar minus = static_cast<Scalar>(orig - options.step);
      data[i] = plus;
      const double fp = f().item();
      data[i] = minus;
      const double fm = f().item();
      data[i] = orig;
      const double numeric = (fp - fm) / (static_cast<double>(plus) - static_cast<double>(minus));
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max({std::abs(a), std::abs(numeric), options.min_scale});
      err.max_abs_error = std::max(err.max_abs_error, abs_err);
      err.max_rel_error = std::max(err.max_rel_error, abs_err / scale);
      ++err.checked;
    }
    report.checked += err.checked;
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.tensors.push_back(std::move(err));
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].tensor;
    if (saved[pi].empty()) {
      t.zero_grad();
    } else {
      auto g = t.grad_slot();
      std::copy(saved[pi].begin(), saved[pi].end(), g.begin());
    }
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace surgdepth

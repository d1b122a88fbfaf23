// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surgdepth/tensor.hpp"

// Differentiable primitives. Reductions accumulate in double; storage is
// Scalar. Every op records a backward rule when an input requires grad.
namespace surgdepth::ops {

// a: (m, k), b: (k, n) -> (m, n)
Tensor matmul(const Tensor& a, const Tensor& b);
// x: (N, in), weight: (out, in), bias: (out) or undefined -> (N, out)
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Scalar factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor softmax(const Tensor& x, int axis = -1);
// Normalizes over the last axis. eps must be positive.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps = 1e-6f);
// Tanh approximation of x * Phi(x).
Tensor gelu(const Tensor& x);

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};
// x: (C_in, H, W), weight: (C_out, C_in / groups, kh, kw), bias: (C_out) or
// undefined. Zero padding, cross-correlation.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& options = {});

// x: (C, h, w) -> (C, k, k). Cell i spans rows [floor(i h / k), ceil((i+1) h / k)).
Tensor adaptive_avg_pool2d(const Tensor& x, int k);
// x: (C, h, w) -> (C, out_h, out_w) with half-pixel centers (align_corners = false).
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

Tensor concat(const std::vector<Tensor>& tensors, int axis);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length);
Tensor reshape(const Tensor& x, Shape shape);
// out.shape[i] = x.shape[perm[i]]
Tensor permute(const Tensor& x, const std::vector<int>& perm);
// 2-D transpose.
Tensor transpose(const Tensor& x);

namespace testing {

// Deliberate kernel faults, used to show that the verification suite catches
// broken kernels. Never enabled outside tests.
enum class Fault { none, matmul, softmax, conv2d, adaptive_pool, bilinear };

void inject_fault(Fault fault);
Fault injected_fault();
Fault parse_fault(const std::string& name);

}  // namespace testing

}  // namespace surgdepth::ops

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "surgdepth/autograd.hpp"
#include "surgdepth/ops.hpp"
#include "surgdepth/rng.hpp"
#include "surgdepth/tensor.hpp"

namespace surgdepth {

// Default weight init std for linear / conv layers.
inline constexpr double kInitStd = 0.02;

using ParamList = std::vector<NamedTensor>;

// Leaf parameter filled from trunc_normal(std); std == 0 gives zeros.
Tensor make_param(Shape shape, Rng& rng, double std);
Tensor make_param_filled(Shape shape, Scalar value);

struct Linear {
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)

  static Linear make(std::int64_t in, std::int64_t out, Rng& rng, double std = kInitStd);
  Tensor operator()(const Tensor& x) const { return ops::linear(x, weight, bias); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  Scalar eps = 1e-6f;

  static LayerNorm make(std::int64_t width);
  Tensor operator()(const Tensor& x) const { return ops::layer_norm(x, gamma, beta, eps); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Conv2d {
  Tensor weight;  // (out, in / groups, kh, kw)
  Tensor bias;    // (out)
  ops::Conv2dOptions options;

  static Conv2d make(std::int64_t in, std::int64_t out, int kernel, const ops::Conv2dOptions& options, Rng& rng,
                     double std = kInitStd);
  Tensor operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias, options); }
  void collect(const std::string& prefix, ParamList& out) const;
};

std::int64_t count_scalars(const ParamList& params);

}  // namespace surgdepth

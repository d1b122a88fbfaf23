// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/nn.hpp"

namespace surgdepth {

Tensor make_param(Shape shape, Rng& rng, double std) {
  Tensor t(std::move(shape));
  if (std > 0.0)
    for (auto& v : t.mutable_data()) v = static_cast<Scalar>(rng.trunc_normal(std));
  t.set_requires_grad(true);
  return t;
}

Tensor make_param_filled(Shape shape, Scalar value) {
  Tensor t(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

Linear Linear::make(std::int64_t in, std::int64_t out, Rng& rng, double std) {
  return {make_param({out, in}, rng, std), make_param_filled({out}, 0.0f)};
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNorm LayerNorm::make(std::int64_t width) {
  return {make_param_filled({width}, 1.0f), make_param_filled({width}, 0.0f)};
}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

Conv2d Conv2d::make(std::int64_t in, std::int64_t out, int kernel, const ops::Conv2dOptions& options, Rng& rng,
                    double std) {
  return {make_param({out, in / options.groups, kernel, kernel}, rng, std), make_param_filled({out}, 0.0f), options};
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

std::int64_t count_scalars(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

}  // namespace surgdepth

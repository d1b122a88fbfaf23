// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/optim.hpp"

#include <cmath>

#include "surgdepth/errors.hpp"

namespace surgdepth {

AdamW::AdamW(ParamList params, AdamWOptions options) : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0f);
    state_.second_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0f);
  }
}

void AdamW::step() {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  const double decay = 1.0 - options_.lr * options_.weight_decay;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor p = params_[i].tensor;
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    auto data = p.mutable_data();
    if (m.size() != data.size()) throw Error("AdamW: moment buffer no longer matches " + params_[i].name);
    const auto grad = p.grad();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<Scalar>(mj);
      v[j] = static_cast<Scalar>(vj);
      double x = static_cast<double>(data[j]) * decay;
      x -= options_.lr * (mj / c1) / (std::sqrt(vj / c2) + options_.eps);
      data[j] = static_cast<Scalar>(x);
    }
  }
}

void AdamW::zero_grad() { zero_grads(params_); }

}  // namespace surgdepth

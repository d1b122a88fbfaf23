// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "surgdepth/nn.hpp"

namespace surgdepth {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

struct OptimizerState {
  std::vector<std::vector<Scalar>> first_moment;
  std::vector<std::vector<Scalar>> second_moment;
  std::int64_t step = 0;
};

// Adam with decoupled weight decay: each step first shrinks the parameter by
// lr * weight_decay * p, then applies the bias-corrected Adam update.
class AdamW {
 public:
  AdamW(ParamList params, AdamWOptions options);

  // Consumes the parameters' accumulated grads; parameters without a grad
  // are treated as having a zero gradient.
  void step();
  void zero_grad();

  const OptimizerState& state() const { return state_; }
  const AdamWOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }

 private:
  ParamList params_;
  AdamWOptions options_;
  OptimizerState state_;
};

}  // namespace surgdepth

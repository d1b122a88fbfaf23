// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "surgdepth/autograd.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/ops.hpp"

namespace surgdepth {
namespace {

Tensor leaf(Shape shape, std::vector<Scalar> values) {
  Tensor t(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

TEST(Tensor, ShapeAndFill) {
  const Tensor t({2, 3}, 1.5f);
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.dim(-1), 3);
  EXPECT_EQ(t.at({1, 2}), 1.5f);
  EXPECT_THROW(Tensor({2, 2}, std::vector<Scalar>{1, 2, 3}), DimensionError);
}

TEST(Autograd, ProductRule) {
  Tensor a = leaf({2}, {2, 3}), b = leaf({2}, {5, 7});
  backward(ops::sum(ops::mul(a, b)));
  EXPECT_EQ(a.grad()[0], 5);
  EXPECT_EQ(a.grad()[1], 7);
  EXPECT_EQ(b.grad()[0], 2);
  EXPECT_EQ(b.grad()[1], 3);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Tensor x = leaf({1}, {3});
  const Tensor y = ops::mul(x, x);
  backward(ops::sum(ops::add(y, y)));
  EXPECT_EQ(x.grad()[0], 12);
}

TEST(Autograd, LeafGradientsAccumulateAcrossCalls) {
  Tensor x = leaf({1}, {2});
  backward(ops::sum(ops::scale(x, 3)));
  backward(ops::sum(ops::scale(x, 3)));
  EXPECT_EQ(x.grad()[0], 6);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0);
}

TEST(Autograd, NonScalarLossRejected) {
  Tensor x = leaf({2}, {1, 2});
  EXPECT_THROW(backward(x), UsageError);
}

TEST(Autograd, TapeIsTopological) {
  Tensor x = leaf({2}, {1, 2});
  const Tensor loss = ops::sum(ops::gelu(ops::scale(x, 2)));
  const Tape tape = Tape::record(loss);
  ASSERT_GE(tape.size(), 3u);
  EXPECT_TRUE(tape.entries().back().same_storage(loss));
}

TEST(Autograd, DetachCutsGraph) {
  Tensor x = leaf({1}, {2});
  const Tensor y = ops::scale(x, 2).detach();
  EXPECT_FALSE(y.requires_grad());
  EXPECT_EQ(y.node(), nullptr);
}

TEST(GradCheck, SmoothFunctionPasses) {
  Tensor x = leaf({3}, {0.3f, -0.2f, 0.5f});
  GradCheckOptions o;
  o.step = 1e-2;
  o.tolerance = 1e-2;
  const auto r = grad_check([&] { return ops::sum(ops::softmax(ops::mul(x, x))); }, {{{"x", x}}}, o);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_EQ(r.checked, 3);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A detached branch hides part of the function from backward.
  Tensor x = leaf({2}, {0.5f, 1.0f});
  GradCheckOptions o;
  o.step = 1e-2;
  const auto r = grad_check(
      [&] { return ops::add(ops::sum(ops::mul(x, x)), ops::sum(ops::mul(x.detach(), x.detach()))); }, {{{"x", x}}}, o);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_rel_error, 0.5, 1e-2);
}

TEST(GradCheck, RejectsNonPositiveStep) {
  Tensor x = leaf({1}, {1});
  GradCheckOptions o;
  o.step = 0;
  EXPECT_THROW(grad_check([&] { return ops::sum(x); }, {{{"x", x}}}, o), UsageError);
}

TEST(Numerics, NonFiniteDetected) {
  const std::vector<Scalar> v = {1.0f, std::nanf("")};
  EXPECT_THROW(check_finite(v, "test"), NumericError);
}

}  // namespace
}  // namespace surgdepth

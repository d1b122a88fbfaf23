// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "surgdepth/errors.hpp"
#include "surgdepth/ops.hpp"

namespace surgdepth {
namespace {

void expect_values(const Tensor& t, const std::vector<double>& want, double tol = 1e-6) {
  ASSERT_EQ(t.numel(), static_cast<std::int64_t>(want.size()));
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t.data()[i], want[i], tol) << "index " << i;
}

Tensor iota(Shape shape, double start = 0.0) {
  Tensor t(std::move(shape));
  double v = start;
  for (auto& x : t.mutable_data()) x = static_cast<Scalar>(v++);
  return t;
}

TEST(Ops, Matmul2x2) {
  const Tensor a({2, 2}, {1, 2, 3, 4}), b({2, 2}, {5, 6, 7, 8});
  expect_values(ops::matmul(a, b), {19, 22, 43, 50});
  EXPECT_THROW(ops::matmul(a, Tensor({3, 2})), DimensionError);
}

TEST(Ops, LinearAddsBias) {
  const Tensor x({1, 2}, {1, 1}), w({2, 2}, {1, 2, 3, 4}), b({2}, {10, 20});
  expect_values(ops::linear(x, w, b), {13, 27});
}

TEST(Ops, SoftmaxKnownValues) {
  const Tensor x({1, 2}, {0.0f, static_cast<Scalar>(std::log(3.0))});
  expect_values(ops::softmax(x), {0.25, 0.75});
}

TEST(Ops, SoftmaxLargeLogitsStable) {
  const Tensor y = ops::softmax(Tensor({1, 3}, {1000, 1000, 1000}));
  expect_values(y, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST(Ops, LayerNormZeroMeanUnitVariance) {
  const Tensor y = ops::layer_norm(Tensor({1, 4}, {1, 2, 3, 4}), Tensor({4}, 1.0f), Tensor({4}, 0.0f));
  const double s = std::sqrt(1.25 + 1e-6);
  expect_values(y, {-1.5 / s, -0.5 / s, 0.5 / s, 1.5 / s}, 1e-5);
}

TEST(Ops, GeluAnchors) { expect_values(ops::gelu(Tensor({3}, {0, 100, -100})), {0, 100, 0}, 1e-4); }

TEST(Ops, Conv2dSumKernel) {
  // 3x3 input, 2x2 ones kernel, stride 1, no padding: window sums.
  const Tensor y = ops::conv2d(iota({1, 3, 3}), Tensor({1, 1, 2, 2}, 1.0f), Tensor({1}, 0.5f));
  expect_values(y, {8.5, 12.5, 20.5, 24.5});
}

TEST(Ops, Conv2dPaddingAndStride) {
  ops::Conv2dOptions o;
  o.stride = 2;
  o.padding = 1;
  const Tensor y = ops::conv2d(Tensor({1, 3, 3}, 1.0f), Tensor({1, 1, 3, 3}, 1.0f), Tensor(), o);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 2}));
  expect_values(y, {4, 4, 4, 4});
}

TEST(Ops, Conv2dRejectsRaggedStride) {
  ops::Conv2dOptions o;
  o.stride = 2;
  EXPECT_THROW(ops::conv2d(Tensor({1, 4, 4}), Tensor({1, 1, 1, 1}), Tensor(), o), DimensionError);
}

TEST(Ops, AdaptivePoolOverlappingWindows) {
  // 5 -> 3 uses windows [0,2), [1,4), [3,5).
  const Tensor y = ops::adaptive_avg_pool2d(iota({1, 1, 5}), 1);
  expect_values(y, {2});
  const Tensor x({1, 5, 1}, {0, 1, 2, 3, 4});
  EXPECT_THROW(ops::adaptive_avg_pool2d(x, 3), DimensionError);
  const Tensor z = ops::adaptive_avg_pool2d(iota({1, 5, 5}), 3);
  // Row windows as above; columns the same. Top-left averages rows 0-1, cols 0-1.
  EXPECT_NEAR(z.at({0, 0, 0}), (0 + 1 + 5 + 6) / 4.0, 1e-6);
  EXPECT_NEAR(z.at({0, 1, 1}), (6 + 7 + 8 + 11 + 12 + 13 + 16 + 17 + 18) / 9.0, 1e-6);
}

TEST(Ops, BilinearHalfPixelUpsample) {
  // Half-pixel centers: 2 -> 4 samples at 0.25, 0.75 of each input pixel.
  const Tensor y = ops::bilinear_resize(Tensor({1, 1, 2}, {0, 1}), 1, 4);
  expect_values(y, {0, 0.25, 0.75, 1});
}

TEST(Ops, ConcatSliceReshapePermute) {
  const Tensor a = iota({2, 2}), b = iota({2, 1}, 10);
  const Tensor c = ops::concat({a, b}, 1);
  expect_values(c, {0, 1, 10, 2, 3, 11});
  expect_values(ops::slice(c, 1, 2, 1), {10, 11});
  expect_values(ops::transpose(ops::reshape(c, {3, 2})), {0, 10, 3, 1, 2, 11});
  EXPECT_EQ(ops::permute(iota({2, 3, 4}), {2, 0, 1}).shape(), (Shape{4, 2, 3}));
  EXPECT_THROW(ops::reshape(c, {4, 2}), DimensionError);
}

TEST(Ops, FaultNamesParse) {
  EXPECT_EQ(ops::testing::parse_fault("conv2d"), ops::testing::Fault::conv2d);
  EXPECT_THROW(ops::testing::parse_fault("nope"), UsageError);
}

}  // namespace
}  // namespace surgdepth

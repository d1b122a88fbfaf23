// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surgdepth/errors.hpp"

namespace surgdepth::ops {
namespace {

using I = std::int64_t;

testing::Fault g_fault = testing::Fault::none;

bool faulty(testing::Fault f) { return g_fault == f; }

double dot(const Scalar* a, const Scalar* b, I n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  I t = 0;
  for (; t + 4 <= n; t += 4) {
    s0 += static_cast<double>(a[t]) * b[t];
    s1 += static_cast<double>(a[t + 1]) * b[t + 1];
    s2 += static_cast<double>(a[t + 2]) * b[t + 2];
    s3 += static_cast<double>(a[t + 3]) * b[t + 3];
  }
  for (; t < n; ++t) s0 += static_cast<double>(a[t]) * b[t];
  return (s0 + s1) + (s2 + s3);
}

// c[i, j] (+)= sum_t a[i, t] * b[j, t]; a: (m, k), b: (n, k).
void gemm_nt(const Scalar* a, const Scalar* b, I m, I n, I k, Scalar* c, bool accumulate) {
  for (I i = 0; i < m; ++i) {
    const Scalar* ar = a + i * k;
    Scalar* cr = c + i * n;
    for (I j = 0; j < n; ++j) {
      const Scalar v = static_cast<Scalar>(dot(ar, b + j * k, k));
      cr[j] = accumulate ? cr[j] + v : v;
    }
  }
}

std::vector<Scalar> transposed(const Scalar* x, I rows, I cols) {
  std::vector<Scalar> out(static_cast<std::size_t>(rows * cols));
  for (I r = 0; r < rows; ++r)
    for (I c = 0; c < cols; ++c) out[c * rows + r] = x[r * cols + c];
  return out;
}

int normalize_axis(int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank)
    throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  return a;
}

void require_rank(const Tensor& x, int rank, const char* op) {
  if (x.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(x.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  I outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const I m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw DimensionError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::vector<Scalar> bt = transposed(b.data().data(), k, n);
  std::vector<Scalar> out(static_cast<std::size_t>(m * n));
  gemm_nt(a.data().data(), bt.data(), m, n, k, out.data(), false);
  if (faulty(testing::Fault::matmul))
    for (I i = 0; i < m; ++i)
      for (I j = 0; j < n; ++j) out[i * n + j] -= a.data()[i * k + k - 1] * b.data()[(k - 1) * n + j];
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [a, b, m, n, k](const TensorImpl& o) mutable {
    const Scalar* g = o.grad.data();
    if (a.requires_grad()) gemm_nt(g, b.data().data(), m, k, n, a.grad_slot().data(), true);
    if (b.requires_grad()) {
      const auto at = transposed(a.data().data(), m, k);
      const auto gt = transposed(g, m, n);
      gemm_nt(at.data(), gt.data(), k, n, m, b.grad_slot().data(), true);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const I rows = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in)
    throw DimensionError("linear: input width " + std::to_string(in) + " vs weight " + shape_str(weight.shape()));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_dim))
    throw DimensionError("linear: bias shape " + shape_str(bias.shape()));
  std::vector<Scalar> out(static_cast<std::size_t>(rows * out_dim));
  gemm_nt(x.data().data(), weight.data().data(), rows, out_dim, in, out.data(), false);
  if (bias.defined()) {
    const auto bv = bias.data();
    for (I r = 0; r < rows; ++r)
      for (I o = 0; o < out_dim; ++o) out[r * out_dim + o] += bv[o];
  }
  return make_result("linear", {rows, out_dim}, std::move(out), {x, weight, bias},
                     [x, weight, bias, rows, in, out_dim](const TensorImpl& o) mutable {
                       const Scalar* g = o.grad.data();
                       if (x.requires_grad()) {
                         const auto wt = transposed(weight.data().data(), out_dim, in);
                         gemm_nt(g, wt.data(), rows, in, out_dim, x.grad_slot().data(), true);
                       }
                       if (weight.requires_grad()) {
                         const auto gt = transposed(g, rows, out_dim);
                         const auto xt = transposed(x.data().data(), rows, in);
                         gemm_nt(gt.data(), xt.data(), out_dim, in, rows, weight.grad_slot().data(), true);
                       }
                       if (bias.defined() && bias.requires_grad()) {
                         auto gb = bias.grad_slot();
                         for (I c = 0; c < out_dim; ++c) {
                           double s = 0.0;
                           for (I r = 0; r < rows; ++r) s += g[r * out_dim + c];
                           gb[c] += static_cast<Scalar>(s);
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<Scalar> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [a, b](const TensorImpl& o) mutable {
    for (const Tensor* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto g = t->grad_slot();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<Scalar> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [a, b](const TensorImpl& o) mutable {
    if (a.requires_grad()) {
      auto g = a.grad_slot();
      const auto bv = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto g = b.grad_slot();
      const auto av = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& x, Scalar factor) {
  std::vector<Scalar> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return make_result("scale", x.shape(), std::move(out), {x}, [x, factor](const TensorImpl& o) mutable {
    auto g = x.grad_slot();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (Scalar v : x.data()) s += v;
  return make_result("sum", {}, {static_cast<Scalar>(s)}, {x}, [x](const TensorImpl& o) mutable {
    auto g = x.grad_slot();
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (Scalar v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  return make_result("mean", {}, {static_cast<Scalar>(s / n)}, {x}, [x, n](const TensorImpl& o) mutable {
    auto g = x.grad_slot();
    const Scalar share = static_cast<Scalar>(o.grad[0] / n);
    for (auto& v : g) v += share;
  });
}

Tensor softmax(const Tensor& x, int axis) {
  const int ax = normalize_axis(axis, x.rank());
  check_finite(x.data(), "softmax input");
  const AxisSplit s = split_at(x.shape(), ax);
  const auto xv = x.data();
  std::vector<Scalar> out(xv.size());
  for (I o = 0; o < s.outer; ++o)
    for (I in = 0; in < s.inner; ++in) {
      const I base = o * s.extent * s.inner + in;
      Scalar mx = xv[base];
      for (I e = 1; e < s.extent; ++e) mx = std::max(mx, xv[base + e * s.inner]);
      double total = 0.0;
      for (I e = 0; e < s.extent; ++e) total += std::exp(static_cast<double>(xv[base + e * s.inner]) - mx);
      if (faulty(testing::Fault::softmax)) total *= 1.001;
      for (I e = 0; e < s.extent; ++e) {
        const I idx = base + e * s.inner;
        out[idx] = static_cast<Scalar>(std::exp(static_cast<double>(xv[idx]) - mx) / total);
      }
    }
  return make_result("softmax", x.shape(), std::move(out), {x}, [x, s](const TensorImpl& o) mutable {
    auto gx = x.grad_slot();
    const auto& y = o.data;
    const auto& g = o.grad;
    for (I ou = 0; ou < s.outer; ++ou)
      for (I in = 0; in < s.inner; ++in) {
        const I base = ou * s.extent * s.inner + in;
        double d = 0.0;
        for (I e = 0; e < s.extent; ++e) d += static_cast<double>(g[base + e * s.inner]) * y[base + e * s.inner];
        for (I e = 0; e < s.extent; ++e) {
          const I idx = base + e * s.inner;
          gx[idx] += static_cast<Scalar>(y[idx] * (g[idx] - d));
        }
      }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps) {
  if (!(eps > 0.0f)) throw UsageError("layer_norm: eps must be positive");
  if (x.rank() < 1) throw DimensionError("layer_norm: scalar input");
  const I c = x.dim(-1);
  if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c)
    throw DimensionError("layer_norm: affine parameters do not match width " + std::to_string(c));
  const I rows = x.numel() / c;
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<Scalar> out(xv.size());
  std::vector<Scalar> xhat(xv.size());
  std::vector<double> rstd(static_cast<std::size_t>(rows));
  for (I r = 0; r < rows; ++r) {
    const Scalar* row = xv.data() + r * c;
    double mu = 0.0;
    for (I j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (I j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = rs;
    for (I j = 0; j < c; ++j) {
      const double h = (row[j] - mu) * rs;
      xhat[r * c + j] = static_cast<Scalar>(h);
      out[r * c + j] = static_cast<Scalar>(h * gv[j] + bv[j]);
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, c, rows, xhat = std::move(xhat), rstd = std::move(rstd)](const TensorImpl& o) mutable {
        const auto& g = o.grad;
        const auto gv = gamma.data();
        if (gamma.requires_grad() || beta.requires_grad()) {
          std::vector<double> dg(c, 0.0), db(c, 0.0);
          for (I r = 0; r < rows; ++r)
            for (I j = 0; j < c; ++j) {
              dg[j] += static_cast<double>(g[r * c + j]) * xhat[r * c + j];
              db[j] += g[r * c + j];
            }
          if (gamma.requires_grad()) {
            auto s = gamma.grad_slot();
            for (I j = 0; j < c; ++j) s[j] += static_cast<Scalar>(dg[j]);
          }
          if (beta.requires_grad()) {
            auto s = beta.grad_slot();
            for (I j = 0; j < c; ++j) s[j] += static_cast<Scalar>(db[j]);
          }
        }
        if (x.requires_grad()) {
          auto gx = x.grad_slot();
          for (I r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (I j = 0; j < c; ++j) {
              const double dh = static_cast<double>(g[r * c + j]) * gv[j];
              m1 += dh;
              m2 += dh * xhat[r * c + j];
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            for (I j = 0; j < c; ++j) {
              const double dh = static_cast<double>(g[r * c + j]) * gv[j];
              gx[r * c + j] += static_cast<Scalar>(rstd[r] * (dh - m1 - xhat[r * c + j] * m2));
            }
          }
        }
      });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
  const auto xv = x.data();
  std::vector<Scalar> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    out[i] = static_cast<Scalar>(0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))));
  }
  return make_result("gelu", x.shape(), std::move(out), {x}, [x](const TensorImpl& o) mutable {
    auto gx = x.grad_slot();
    const auto xv = x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      gx[i] += static_cast<Scalar>(o.grad[i] * d);
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& opt) {
  require_rank(x, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  const I cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const I cout = weight.dim(0), cpg = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  const I groups = opt.groups, stride = opt.stride, pad = opt.padding;
  if (groups < 1 || stride < 1 || pad < 0) throw DimensionError("conv2d: invalid stride/padding/groups");
  if (cin % groups != 0 || cout % groups != 0) throw DimensionError("conv2d: channels not divisible by groups");
  if (cpg != cin / groups)
    throw DimensionError("conv2d: weight " + shape_str(weight.shape()) + " does not match " + std::to_string(cin) +
                         " input channels in " + std::to_string(groups) + " groups");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout))
    throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()));
  const I span_h = h + 2 * pad - kh, span_w = w + 2 * pad - kw;
  if (span_h < 0 || span_w < 0 || span_h % stride != 0 || span_w % stride != 0)
    throw DimensionError("conv2d: non-integral output size for input " + shape_str(x.shape()));
  const I oh = span_h / stride + 1, ow = span_w / stride + 1;
  const I opg = cout / groups;

  const auto xv = x.data();
  const auto wv = weight.data();
  std::vector<Scalar> out(static_cast<std::size_t>(cout * oh * ow));
  for (I oc = 0; oc < cout; ++oc) {
    const I g = oc / opg;
    const double b0 = bias.defined() ? bias.data()[oc] : 0.0;
    for (I oy = 0; oy < oh; ++oy)
      for (I ox = 0; ox < ow; ++ox) {
        double s = b0;
        for (I ci = 0; ci < cpg; ++ci) {
          const Scalar* xc = xv.data() + (g * cpg + ci) * h * w;
          const Scalar* wk = wv.data() + ((oc * cpg + ci) * kh) * kw;
          for (I ky = 0; ky < kh; ++ky) {
            const I iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (I kx = 0; kx < kw - (faulty(testing::Fault::conv2d) && kw > 1 ? 1 : 0); ++kx) {
              const I ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w) continue;
              s += static_cast<double>(xc[iy * w + ix]) * wk[ky * kw + kx];
            }
          }
        }
        out[(oc * oh + oy) * ow + ox] = static_cast<Scalar>(s);
      }
  }
  return make_result("conv2d", {cout, oh, ow}, std::move(out), {x, weight, bias}, [=](const TensorImpl& o) mutable {
    const auto& gout = o.grad;
    const auto xv = x.data();
    const auto wv = weight.data();
    std::span<Scalar> gx, gw;
    if (x.requires_grad()) gx = x.grad_slot();
    if (weight.requires_grad()) gw = weight.grad_slot();
    if (bias.defined() && bias.requires_grad()) {
      auto gb = bias.grad_slot();
      for (I oc = 0; oc < cout; ++oc) {
        double s = 0.0;
        for (I p = 0; p < oh * ow; ++p) s += gout[oc * oh * ow + p];
        gb[oc] += static_cast<Scalar>(s);
      }
    }
    if (gx.empty() && gw.empty()) return;
    std::vector<double> dx(gx.empty() ? 0 : static_cast<std::size_t>(cin * h * w), 0.0);
    for (I oc = 0; oc < cout; ++oc) {
      const I g = oc / opg;
      for (I ci = 0; ci < cpg; ++ci) {
        const I c = g * cpg + ci;
        const Scalar* xc = xv.data() + c * h * w;
        const Scalar* wk = wv.data() + ((oc * cpg + ci) * kh) * kw;
        for (I ky = 0; ky < kh; ++ky)
          for (I kx = 0; kx < kw; ++kx) {
            double dw = 0.0;
            const double wval = wk[ky * kw + kx];
            for (I oy = 0; oy < oh; ++oy) {
              const I iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (I ox = 0; ox < ow; ++ox) {
                const I ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                const double go = gout[(oc * oh + oy) * ow + ox];
                dw += go * xc[iy * w + ix];
                if (!dx.empty()) dx[c * h * w + iy * w + ix] += go * wval;
              }
            }
            if (!gw.empty()) gw[((oc * cpg + ci) * kh + ky) * kw + kx] += static_cast<Scalar>(dw);
          }
      }
    }
    for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += static_cast<Scalar>(dx[i]);
  });
}

Tensor adaptive_avg_pool2d(const Tensor& x, int k) {
  require_rank(x, 3, "adaptive_avg_pool2d");
  const I c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (k < 1 || k > std::min(h, w))
    throw DimensionError("adaptive_avg_pool2d: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(std::min(h, w)) + "]");
  auto lo = [](I i, I n, I k) { return (i * n) / k; };
  auto hi = [](I i, I n, I k) { return ((i + 1) * n + k - 1) / k; };
  const auto xv = x.data();
  std::vector<Scalar> out(static_cast<std::size_t>(c * k * k));
  for (I ch = 0; ch < c; ++ch)
    for (I i = 0; i < k; ++i)
      for (I j = 0; j < k; ++j) {
        const I y0 = lo(i, h, k), x0 = lo(j, w, k), x1 = hi(j, w, k);
        I y1 = hi(i, h, k);
        if (faulty(testing::Fault::adaptive_pool) && y1 - y0 > 1) --y1;
        double s = 0.0;
        for (I y = y0; y < y1; ++y)
          for (I xx = x0; xx < x1; ++xx) s += xv[(ch * h + y) * w + xx];
        out[(ch * k + i) * k + j] = static_cast<Scalar>(s / static_cast<double>((y1 - y0) * (x1 - x0)));
      }
  return make_result(
      "adaptive_avg_pool2d", {c, k, k}, std::move(out), {x}, [x, c, h, w, k, lo, hi](const TensorImpl& o) mutable {
        auto gx = x.grad_slot();
        for (I ch = 0; ch < c; ++ch)
          for (I i = 0; i < k; ++i)
            for (I j = 0; j < k; ++j) {
              const I y0 = lo(i, h, k), y1 = hi(i, h, k), x0 = lo(j, w, k), x1 = hi(j, w, k);
              const Scalar share =
                  static_cast<Scalar>(o.grad[(ch * k + i) * k + j] / static_cast<double>((y1 - y0) * (x1 - x0)));
              for (I y = y0; y < y1; ++y)
                for (I xx = x0; xx < x1; ++xx) gx[(ch * h + y) * w + xx] += share;
            }
      });
}

namespace {

// Source taps for one output coordinate under half-pixel centers.
struct Taps {
  I i0, i1;
  double w0, w1;
};

std::vector<Taps> bilinear_taps(I in, I out) {
  std::vector<Taps> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (I d = 0; d < out; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    I i0 = static_cast<I>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const I i1 = std::min(i0 + 1, in - 1);
    const double frac = i1 == i0 ? 0.0 : src - static_cast<double>(i0);
    taps[d] = {i0, i1, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  require_rank(x, 3, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: output size must be positive");
  const I c = x.dim(0), h = x.dim(1), w = x.dim(2);
  auto ty = bilinear_taps(h, out_h);
  if (faulty(testing::Fault::bilinear))
    for (auto& t : ty) t = {t.i0, t.i0, 1.0, 0.0};
  const auto tx = bilinear_taps(w, out_w);
  const auto xv = x.data();
  std::vector<Scalar> out(static_cast<std::size_t>(c * out_h * out_w));
  for (I ch = 0; ch < c; ++ch) {
    const Scalar* src = xv.data() + ch * h * w;
    for (I y = 0; y < out_h; ++y) {
      const Taps& a = ty[y];
      for (I xx = 0; xx < out_w; ++xx) {
        const Taps& b = tx[xx];
        const double v = a.w0 * (b.w0 * src[a.i0 * w + b.i0] + b.w1 * src[a.i0 * w + b.i1]) +
                         a.w1 * (b.w0 * src[a.i1 * w + b.i0] + b.w1 * src[a.i1 * w + b.i1]);
        out[(ch * out_h + y) * out_w + xx] = static_cast<Scalar>(v);
      }
    }
  }
  const I oh = out_h, ow = out_w;
  return make_result("bilinear_resize", {c, oh, ow}, std::move(out), {x},
                     [x, c, h, w, oh, ow, ty, tx](const TensorImpl& o) mutable {
                       std::vector<double> acc(static_cast<std::size_t>(c * h * w), 0.0);
                       for (I ch = 0; ch < c; ++ch) {
                         double* dst = acc.data() + ch * h * w;
                         for (I y = 0; y < oh; ++y) {
                           const Taps& a = ty[y];
                           for (I xx = 0; xx < ow; ++xx) {
                             const Taps& b = tx[xx];
                             const double g = o.grad[(ch * oh + y) * ow + xx];
                             dst[a.i0 * w + b.i0] += g * a.w0 * b.w0;
                             dst[a.i0 * w + b.i1] += g * a.w0 * b.w1;
                             dst[a.i1 * w + b.i0] += g * a.w1 * b.w0;
                             dst[a.i1 * w + b.i1] += g * a.w1 * b.w1;
                           }
                         }
                       }
                       auto gx = x.grad_slot();
                       for (std::size_t i = 0; i < acc.size(); ++i) gx[i] += static_cast<Scalar>(acc[i]);
                     });
}

Tensor concat(const std::vector<Tensor>& tensors, int axis) {
  if (tensors.empty()) throw DimensionError("concat: no inputs");
  const int ax = normalize_axis(axis, tensors[0].rank());
  Shape shape = tensors[0].shape();
  I total = 0;
  for (const auto& t : tensors) {
    if (t.rank() != tensors[0].rank()) throw DimensionError("concat: rank mismatch");
    for (int d = 0; d < t.rank(); ++d)
      if (d != ax && t.shape()[d] != shape[d])
        throw DimensionError("concat: shape mismatch " + shape_str(t.shape()) + " vs " + shape_str(tensors[0].shape()) +
                             " on axis " + std::to_string(ax));
    total += t.shape()[ax];
  }
  shape[ax] = total;
  const AxisSplit s = split_at(shape, ax);
  std::vector<Scalar> out(static_cast<std::size_t>(numel_of(shape)));
  I offset = 0;
  std::vector<I> offsets;
  for (const auto& t : tensors) {
    const I ext = t.shape()[ax];
    const auto tv = t.data();
    for (I o = 0; o < s.outer; ++o)
      std::copy_n(tv.data() + o * ext * s.inner, ext * s.inner, out.data() + (o * total + offset) * s.inner);
    offsets.push_back(offset);
    offset += ext;
  }
  return make_result("concat", shape, std::move(out), tensors,
                     [tensors, offsets, s, total, ax](const TensorImpl& o) mutable {
                       for (std::size_t k = 0; k < tensors.size(); ++k) {
                         const Tensor& t = tensors[k];
                         if (!t.requires_grad()) continue;
                         const I ext = t.shape()[ax];
                         auto g = t.grad_slot();
                         for (I ou = 0; ou < s.outer; ++ou) {
                           const Scalar* src = o.grad.data() + (ou * total + offsets[k]) * s.inner;
                           Scalar* dst = g.data() + ou * ext * s.inner;
                           for (I i = 0; i < ext * s.inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length) {
  const int ax = normalize_axis(axis, x.rank());
  const I ext = x.shape()[ax];
  if (start < 0 || length < 1 || start + length > ext)
    throw DimensionError("slice: [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") outside axis of extent " + std::to_string(ext));
  const AxisSplit s = split_at(x.shape(), ax);
  Shape shape = x.shape();
  shape[ax] = length;
  std::vector<Scalar> out(static_cast<std::size_t>(numel_of(shape)));
  const auto xv = x.data();
  for (I o = 0; o < s.outer; ++o)
    std::copy_n(xv.data() + (o * ext + start) * s.inner, length * s.inner, out.data() + o * length * s.inner);
  return make_result("slice", shape, std::move(out), {x}, [x, s, ext, start, length](const TensorImpl& o) mutable {
    auto g = x.grad_slot();
    for (I ou = 0; ou < s.outer; ++ou) {
      const Scalar* src = o.grad.data() + ou * length * s.inner;
      Scalar* dst = g.data() + (ou * ext + start) * s.inner;
      for (I i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel())
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<Scalar> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [x](const TensorImpl& o) mutable {
    auto g = x.grad_slot();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<int>& perm) {
  const int r = x.rank();
  if (static_cast<int>(perm.size()) != r) throw DimensionError("permute: wrong permutation length");
  std::vector<bool> seen(r, false);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[p]) throw DimensionError("permute: invalid permutation");
    seen[p] = true;
  }
  Shape shape(r);
  for (int i = 0; i < r; ++i) shape[i] = x.shape()[perm[i]];
  const Shape in_strides = strides_of(x.shape());
  // Stride in the input for each output axis.
  Shape gather(r);
  for (int i = 0; i < r; ++i) gather[i] = in_strides[perm[i]];

  // Maps flat output index -> flat input index.
  const I n = x.numel();
  std::vector<I> source(static_cast<std::size_t>(n));
  std::vector<I> idx(r, 0);
  I src = 0;
  for (I flat = 0; flat < n; ++flat) {
    source[flat] = src;
    for (int d = r - 1; d >= 0; --d) {
      ++idx[d];
      src += gather[d];
      if (idx[d] < shape[d]) break;
      src -= gather[d] * shape[d];
      idx[d] = 0;
    }
  }
  const auto xv = x.data();
  std::vector<Scalar> out(static_cast<std::size_t>(n));
  for (I i = 0; i < n; ++i) out[i] = xv[source[i]];
  return make_result("permute", shape, std::move(out), {x},
                     [x, source = std::move(source)](const TensorImpl& o) mutable {
                       auto g = x.grad_slot();
                       for (std::size_t i = 0; i < source.size(); ++i) g[source[i]] += o.grad[i];
                     });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  return permute(x, {1, 0});
}

namespace testing {

void inject_fault(Fault fault) { g_fault = fault; }
Fault injected_fault() { return g_fault; }

Fault parse_fault(const std::string& name) {
  if (name == "none") return Fault::none;
  if (name == "matmul") return Fault::matmul;
  if (name == "softmax") return Fault::softmax;
  if (name == "conv2d") return Fault::conv2d;
  if (name == "adaptive_pool") return Fault::adaptive_pool;
  if (name == "bilinear") return Fault::bilinear;
  throw UsageError("unknown fault '" + name + "'");
}

}  // namespace testing

}  // namespace surgdepth::ops

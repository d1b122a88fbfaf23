// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth_verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace surgdepth_verify::oracle {

using surgdepth::Scalar;
using surgdepth::Shape;
using I = std::int64_t;

namespace {

std::vector<double> widen(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor narrow(Shape shape, const std::vector<double>& v) {
  std::vector<Scalar> out(v.begin(), v.end());
  return Tensor(std::move(shape), std::move(out));
}

std::vector<double> linear_rows(const std::vector<double>& x, I rows, I in, const Tensor& w, const Tensor& b) {
  const I out = w.dim(0);
  const auto wv = w.data();
  std::vector<double> y(static_cast<std::size_t>(rows * out));
  for (I r = 0; r < rows; ++r)
    for (I o = 0; o < out; ++o) {
      double s = b.defined() ? static_cast<double>(b.data()[o]) : 0.0;
      for (I i = 0; i < in; ++i) s += x[r * in + i] * wv[o * in + i];
      y[r * out + o] = s;
    }
  return y;
}

std::vector<double> layer_norm_rows(const std::vector<double>& x, I rows, I c, const Tensor& gamma, const Tensor& beta,
                                    double eps) {
  std::vector<double> y(x.size());
  for (I r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (I j = 0; j < c; ++j) mean += x[r * c + j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (I j = 0; j < c; ++j) var += (x[r * c + j] - mean) * (x[r * c + j] - mean);
    var /= static_cast<double>(c);
    for (I j = 0; j < c; ++j)
      y[r * c + j] = (x[r * c + j] - mean) / std::sqrt(var + eps) * gamma.data()[j] + beta.data()[j];
  }
  return y;
}

double gelu_scalar(double v) {
  const double k = std::sqrt(2.0 / 3.14159265358979323846);
  return 0.5 * v * (1.0 + std::tanh(k * (v + 0.044715 * v * v * v)));
}

// q: (nq, d), k, v: (nk, d). Returns context (nq, d) and the weights (nq, nk).
std::pair<std::vector<double>, std::vector<double>> attend(const std::vector<double>& q, const std::vector<double>& k,
                                                           const std::vector<double>& v, I nq, I nk, I d,
                                                           double scale) {
  std::vector<double> ctx(static_cast<std::size_t>(nq * d), 0.0), weights(static_cast<std::size_t>(nq * nk));
  for (I i = 0; i < nq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (I j = 0; j < nk; ++j) {
      double s = 0.0;
      for (I t = 0; t < d; ++t) s += q[i * d + t] * k[j * d + t];
      weights[i * nk + j] = s * scale;
      mx = std::max(mx, s * scale);
    }
    double z = 0.0;
    for (I j = 0; j < nk; ++j) z += std::exp(weights[i * nk + j] - mx);
    for (I j = 0; j < nk; ++j) {
      weights[i * nk + j] = std::exp(weights[i * nk + j] - mx) / z;
      for (I t = 0; t < d; ++t) ctx[i * d + t] += weights[i * nk + j] * v[j * d + t];
    }
  }
  return {ctx, weights};
}

// (c, h, w) planes.
std::vector<double> pool_planes(const std::vector<double>& x, I c, I h, I w, I k) {
  std::vector<double> y(static_cast<std::size_t>(c * k * k));
  for (I ch = 0; ch < c; ++ch)
    for (I i = 0; i < k; ++i)
      for (I j = 0; j < k; ++j) {
        const I y0 = static_cast<I>(std::floor(static_cast<double>(i) * h / k));
        const I y1 = static_cast<I>(std::ceil(static_cast<double>(i + 1) * h / k));
        const I x0 = static_cast<I>(std::floor(static_cast<double>(j) * w / k));
        const I x1 = static_cast<I>(std::ceil(static_cast<double>(j + 1) * w / k));
        double s = 0.0;
        for (I yy = y0; yy < y1; ++yy)
          for (I xx = x0; xx < x1; ++xx) s += x[(ch * h + yy) * w + xx];
        y[(ch * k + i) * k + j] = s / static_cast<double>((y1 - y0) * (x1 - x0));
      }
  return y;
}

// Half-pixel-center bilinear sampling, edge-clamped.
std::vector<double> resize_planes(const std::vector<double>& x, I c, I h, I w, I oh, I ow) {
  auto coord = [](I d, I in, I out, I& i0, I& i1, double& frac) {
    double src = (static_cast<double>(d) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<I>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    frac = src - static_cast<double>(i0);
  };
  std::vector<double> y(static_cast<std::size_t>(c * oh * ow));
  for (I ch = 0; ch < c; ++ch)
    for (I yy = 0; yy < oh; ++yy) {
      I a0, a1;
      double fy;
      coord(yy, h, oh, a0, a1, fy);
      for (I xx = 0; xx < ow; ++xx) {
        I b0, b1;
        double fx;
        coord(xx, w, ow, b0, b1, fx);
        const double top = (1.0 - fx) * x[(ch * h + a0) * w + b0] + fx * x[(ch * h + a0) * w + b1];
        const double bot = (1.0 - fx) * x[(ch * h + a1) * w + b0] + fx * x[(ch * h + a1) * w + b1];
        y[(ch * oh + yy) * ow + xx] = (1.0 - fy) * top + fy * bot;
      }
    }
  return y;
}

std::vector<double> conv_planes(const std::vector<double>& x, I cin, I h, I w, const Tensor& weight, const Tensor& bias,
                                I stride, I pad, I groups, I& oh, I& ow) {
  const I cout = weight.dim(0), cpg = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (w + 2 * pad - kw) / stride + 1;
  const I opg = cout / groups;
  const auto wv = weight.data();
  std::vector<double> y(static_cast<std::size_t>(cout * oh * ow));
  for (I oc = 0; oc < cout; ++oc)
    for (I oy = 0; oy < oh; ++oy)
      for (I ox = 0; ox < ow; ++ox) {
        double s = bias.defined() ? static_cast<double>(bias.data()[oc]) : 0.0;
        for (I ci = 0; ci < cpg; ++ci)
          for (I ky = 0; ky < kh; ++ky)
            for (I kx = 0; kx < kw; ++kx) {
              const I iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              const I c = (oc / opg) * cpg + ci;
              s += x[(c * h + iy) * w + ix] * wv[((oc * cpg + ci) * kh + ky) * kw + kx];
            }
        y[(oc * oh + oy) * ow + ox] = s;
      }
  (void)cin;
  return y;
}

std::vector<double> mhsa_rows(const std::vector<double>& x, I n, I c, const surgdepth::MultiHeadAttention& attn) {
  const std::vector<double> qkv = linear_rows(x, n, c, attn.qkv.weight, attn.qkv.bias);
  const I heads = attn.heads, d = c / heads;
  std::vector<double> merged(static_cast<std::size_t>(n * c));
  for (I hd = 0; hd < heads; ++hd) {
    std::vector<double> q(n * d), k(n * d), v(n * d);
    for (I i = 0; i < n; ++i)
      for (I t = 0; t < d; ++t) {
        q[i * d + t] = qkv[i * 3 * c + hd * d + t];
        k[i * d + t] = qkv[i * 3 * c + c + hd * d + t];
        v[i * d + t] = qkv[i * 3 * c + 2 * c + hd * d + t];
      }
    const auto ctx = attend(q, k, v, n, n, d, 1.0 / std::sqrt(static_cast<double>(d))).first;
    for (I i = 0; i < n; ++i)
      for (I t = 0; t < d; ++t) merged[i * c + hd * d + t] = ctx[i * d + t];
  }
  return linear_rows(merged, n, c, attn.proj.weight, attn.proj.bias);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const I m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> c(static_cast<std::size_t>(m * n), 0.0);
  for (I i = 0; i < m; ++i)
    for (I j = 0; j < n; ++j) {
      double s = 0.0;
      for (I t = 0; t < k; ++t) s += static_cast<double>(a.data()[i * k + t]) * b.data()[t * n + j];
      c[i * n + j] = s;
    }
  return narrow({m, n}, c);
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return narrow({x.dim(0), weight.dim(0)}, linear_rows(widen(x), x.dim(0), x.dim(1), weight, bias));
}

Tensor softmax_rows(const Tensor& x) {
  const I n = x.dim(-1), rows = x.numel() / n;
  std::vector<double> out(static_cast<std::size_t>(x.numel()));
  const auto v = widen(x);
  for (I r = 0; r < rows; ++r) {
    double mx = v[r * n];
    for (I j = 1; j < n; ++j) mx = std::max(mx, v[r * n + j]);
    double z = 0.0;
    for (I j = 0; j < n; ++j) z += std::exp(v[r * n + j] - mx);
    for (I j = 0; j < n; ++j) out[r * n + j] = std::exp(v[r * n + j] - mx) / z;
  }
  return narrow(x.shape(), out);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const I c = x.dim(-1);
  return narrow(x.shape(), layer_norm_rows(widen(x), x.numel() / c, c, gamma, beta, eps));
}

Tensor gelu(const Tensor& x) {
  std::vector<double> v = widen(x);
  for (auto& e : v) e = gelu_scalar(e);
  return narrow(x.shape(), v);
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding, int groups) {
  I oh = 0, ow = 0;
  const auto y = conv_planes(widen(x), x.dim(0), x.dim(1), x.dim(2), weight, bias, stride, padding, groups, oh, ow);
  return narrow({weight.dim(0), oh, ow}, y);
}

Tensor adaptive_avg_pool2d(const Tensor& x, int k) {
  return narrow({x.dim(0), k, k}, pool_planes(widen(x), x.dim(0), x.dim(1), x.dim(2), k));
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  return narrow({x.dim(0), out_h, out_w}, resize_planes(widen(x), x.dim(0), x.dim(1), x.dim(2), out_h, out_w));
}

Tensor mhsa(const Tensor& x, const surgdepth::MultiHeadAttention& attn) {
  return narrow(x.shape(), mhsa_rows(widen(x), x.dim(0), x.dim(1), attn));
}

Tensor transformer_block(const Tensor& x, const surgdepth::TransformerBlock& b) {
  const I n = x.dim(0), c = x.dim(1);
  std::vector<double> h = widen(x);
  const auto a = mhsa_rows(layer_norm_rows(h, n, c, b.norm1.gamma, b.norm1.beta, b.norm1.eps), n, c, b.attn);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += a[i];
  auto hidden =
      linear_rows(layer_norm_rows(h, n, c, b.norm2.gamma, b.norm2.beta, b.norm2.eps), n, c, b.fc1.weight, b.fc1.bias);
  for (auto& v : hidden) v = gelu_scalar(v);
  const auto m = linear_rows(hidden, n, 4 * c, b.fc2.weight, b.fc2.bias);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += m[i];
  return narrow(x.shape(), h);
}

Tensor patch_embed(const Tensor& image, const surgdepth::PatchEmbed& pe) {
  const I cin = image.dim(0), h = image.dim(1), w = image.dim(2), p = pe.patch;
  const I th = h / p, tw = w / p, c = pe.conv.weight.dim(0);
  const auto wv = pe.conv.weight.data();
  std::vector<double> tokens(static_cast<std::size_t>(th * tw * c));
  for (I ty = 0; ty < th; ++ty)
    for (I tx = 0; tx < tw; ++tx)
      for (I o = 0; o < c; ++o) {
        double s = pe.conv.bias.data()[o];
        for (I ci = 0; ci < cin; ++ci)
          for (I dy = 0; dy < p; ++dy)
            for (I dx = 0; dx < p; ++dx)
              s += static_cast<double>(image.data()[(ci * h + ty * p + dy) * w + tx * p + dx]) *
                   wv[((o * cin + ci) * p + dy) * p + dx];
        tokens[(ty * tw + tx) * c + o] = s;
      }
  return narrow({th * tw, c}, tokens);
}

Fused fuse(const Tensor& rgb_tokens, const Tensor& depth_tokens, int h, int w, const surgdepth::FusionParams& p) {
  const I n = static_cast<I>(h) * w, c = rgb_tokens.dim(1), k = p.k, cd = p.fc_k.weight.dim(0);
  const auto rgb = widen(rgb_tokens), depth = widen(depth_tokens);
  // Channel-major (2C, h, w) stack of both modalities.
  std::vector<double> planes(static_cast<std::size_t>(2 * c * n));
  for (I t = 0; t < n; ++t)
    for (I ch = 0; ch < c; ++ch) {
      planes[ch * n + t] = rgb[t * c + ch];
      planes[(c + ch) * n + t] = depth[t * c + ch];
    }
  const auto pooled = pool_planes(planes, 2 * c, h, w, k);
  std::vector<double> pooled_rows(static_cast<std::size_t>(k * k * 2 * c));
  for (I ch = 0; ch < 2 * c; ++ch)
    for (I t = 0; t < k * k; ++t) pooled_rows[t * 2 * c + ch] = pooled[ch * k * k + t];
  const auto q = linear_rows(pooled_rows, k * k, 2 * c, p.fc_q.weight, p.fc_q.bias);
  const auto kk = linear_rows(rgb, n, c, p.fc_k.weight, p.fc_k.bias);
  const auto v = linear_rows(rgb, n, c, p.fc_v.weight, p.fc_v.bias);
  const auto [ctx, weights] = attend(q, kk, v, k * k, n, cd, 1.0 / std::sqrt(static_cast<double>(cd)));
  std::vector<double> ctx_planes(static_cast<std::size_t>(cd * k * k));
  for (I t = 0; t < k * k; ++t)
    for (I ch = 0; ch < cd; ++ch) ctx_planes[ch * k * k + t] = ctx[t * cd + ch];
  const auto up = resize_planes(ctx_planes, cd, k, k, h, w);
  std::vector<double> up_rows(static_cast<std::size_t>(n * cd));
  for (I t = 0; t < n; ++t)
    for (I ch = 0; ch < cd; ++ch) up_rows[t * cd + ch] = up[ch * n + t];
  auto out_rgb = linear_rows(up_rows, n, cd, p.fc_out_rgb.weight, p.fc_out_rgb.bias);
  auto out_depth = linear_rows(up_rows, n, cd, p.fc_out_depth.weight, p.fc_out_depth.bias);
  for (std::size_t i = 0; i < out_rgb.size(); ++i) {
    out_rgb[i] += rgb[i];
    out_depth[i] += depth[i];
  }
  return {narrow({n, c}, out_rgb), narrow({n, c}, out_depth), narrow({k * k, n}, weights)};
}

Tensor convnext_block(const Tensor& x, const surgdepth::ConvNeXtBlock& b) {
  const I d = x.dim(0), h = x.dim(1), w = x.dim(2), n = h * w;
  I oh = 0, ow = 0;
  const auto dw = conv_planes(widen(x), d, h, w, b.dwconv.weight, b.dwconv.bias, 1, 3, d, oh, ow);
  std::vector<double> rows(static_cast<std::size_t>(n * d));
  for (I ch = 0; ch < d; ++ch)
    for (I t = 0; t < n; ++t) rows[t * d + ch] = dw[ch * n + t];
  auto hidden =
      linear_rows(layer_norm_rows(rows, n, d, b.norm.gamma, b.norm.beta, b.norm.eps), n, d, b.pw1.weight, b.pw1.bias);
  for (auto& v : hidden) v = gelu_scalar(v);
  const auto branch = linear_rows(hidden, n, 4 * d, b.pw2.weight, b.pw2.bias);
  std::vector<double> out = widen(x);
  for (I ch = 0; ch < d; ++ch)
    for (I t = 0; t < n; ++t) out[ch * n + t] += branch[t * d + ch];
  return narrow(x.shape(), out);
}

Tensor tokens_to_grid(const Tensor& tokens, int h, int w, int patch) {
  const I tile = patch / 4, width = tokens.dim(1), d = width / (tile * tile);
  const I gh = static_cast<I>(h) * tile, gw = static_cast<I>(w) * tile;
  std::vector<double> grid(static_cast<std::size_t>(d * gh * gw));
  for (I gy = 0; gy < gh; ++gy)
    for (I gx = 0; gx < gw; ++gx)
      for (I ch = 0; ch < d; ++ch) {
        const I token = (gy / tile) * w + gx / tile;
        const I offset = ((gy % tile) * tile + gx % tile) * d + ch;
        grid[(ch * gh + gy) * gw + gx] = tokens.data()[token * width + offset];
      }
  return narrow({d, gh, gw}, grid);
}

Tensor decode(const Tensor& tokens, int h, int w, int out_h, int out_w, const surgdepth::DecoderParams& p) {
  const Tensor expanded = linear(tokens, p.expand.weight, p.expand.bias);
  Tensor grid = oracle::tokens_to_grid(expanded, h, w, p.patch);
  for (const auto& b : p.blocks) grid = oracle::convnext_block(grid, b);
  const Tensor logits = conv2d(grid, p.head.weight, p.head.bias, 1, 0, 1);
  return bilinear_resize(logits, out_h, out_w);
}

double cross_entropy(const Tensor& logits, const surgdepth::LabelMask& labels, int ignore_index) {
  const I k = logits.dim(0), hw = logits.dim(1) * logits.dim(2);
  double total = 0.0;
  I counted = 0;
  for (I p = 0; p < hw; ++p) {
    const int label = labels.values[p];
    if (label == ignore_index) continue;
    double z = 0.0;
    for (I c = 0; c < k; ++c) z += std::exp(static_cast<double>(logits.data()[c * hw + p]));
    total += std::log(z) - logits.data()[label * hw + p];
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

std::vector<double> adamw_scalar(double p0, const std::vector<double>& grads, double lr, double beta1, double beta2,
                                 double eps, double weight_decay) {
  std::vector<double> trace;
  double p = p0, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    p -= lr * weight_decay * p;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    p -= lr * mhat / (std::sqrt(vhat) + eps);
    trace.push_back(p);
  }
  return trace;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
  return m;
}

}  // namespace surgdepth_verify::oracle

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "surgdepth/errors.hpp"
#include "surgdepth/netpbm.hpp"

namespace surgdepth {

void RgbdSample::validate(int num_classes) const {
  const int h = label.h, w = label.w;
  if (rgb.shape() != Shape{3, h, w} || depth.shape() != Shape{1, h, w})
    throw DataError("sample rasters disagree: rgb " + shape_str(rgb.shape()) + ", depth " + shape_str(depth.shape()) +
                    ", label " + std::to_string(h) + "x" + std::to_string(w));
  for (Scalar v : depth.data())
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw DataError("depth value outside [0, 1]");
  for (auto l : label.values)
    if (l != kIgnoreLabel && l >= num_classes) throw DataError("label " + std::to_string(l) + " outside [0, K)");
}

void SceneSpec::validate() const {
  if (num_classes < 1 || num_classes > 255) throw ConfigError("num_classes must lie in [1, 255]");
  if (min_shapes < 0 || max_shapes < min_shapes) throw ConfigError("shape count range is empty");
  if (!(depth_coupling >= 0.0 && depth_coupling <= 1.0)) throw ConfigError("depth_coupling must lie in [0, 1]");
  if (!(layer_noise >= 0.0 && layer_noise < 0.05)) throw ConfigError("layer_noise must lie in [0, 0.05)");
  if (snap < 1) throw ConfigError("snap must be >= 1");
}

namespace {

using Color = std::array<double, 3>;

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

Color hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Color rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0:
      rgb = {c, x, 0};
      break;
    case 1:
      rgb = {x, c, 0};
      break;
    case 2:
      rgb = {0, c, x};
      break;
    case 3:
      rgb = {0, x, c};
      break;
    case 4:
      rgb = {x, 0, c};
      break;
    default:
      rgb = {c, 0, x};
      break;
  }
  const double m = v - c;
  return {quantize8(rgb[0] + m), quantize8(rgb[1] + m), quantize8(rgb[2] + m)};
}

constexpr double kBackgroundDepth = 0.1;
constexpr double kNearLayer = 0.85;
constexpr double kFarLayer = 0.45;
constexpr double kLayerJitter = 0.04;

// Saturated, evenly spaced hues for classes with their own color.
Color class_color(int c, int num_classes) {
  if (c == 0) return {quantize8(0.5), quantize8(0.5), quantize8(0.5)};
  return hsv_to_rgb(static_cast<double>(c - 1) / std::max(1, num_classes - 1), 0.85, 0.9);
}

// Muted color shared by both members of an ambiguous pair.
Color pair_color(int pair, int num_pairs) { return hsv_to_rgb((pair + 0.5) / std::max(1, num_pairs), 0.35, 0.55); }

struct Region {
  int label = 0;
  Color color{};
  double depth = 0.0;
  bool ellipse = false;
  int y0 = 0, x0 = 0, rh = 0, rw = 0;

  bool contains(int y, int x) const {
    if (y < y0 || y >= y0 + rh || x < x0 || x >= x0 + rw) return false;
    if (!ellipse) return true;
    const double cy = y0 + (rh - 1) / 2.0, cx = x0 + (rw - 1) / 2.0;
    const double dy = (y - cy) / (rh / 2.0), dx = (x - cx) / (rw / 2.0);
    return dy * dy + dx * dx <= 1.0;
  }
};

}  // namespace

GeneratedScene generate_scene(const SceneSpec& spec, int index, int height, int width) {
  spec.validate();
  if (height < 4 || width < 4) throw ConfigError("scene must be at least 4x4");
  Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(index));
  const int k = spec.num_classes;
  const int foreground = k - 1;
  const int num_pairs = foreground / 2;

  std::vector<Region> regions;
  const int count =
      foreground > 0 ? spec.min_shapes + static_cast<int>(rng.below(spec.max_shapes - spec.min_shapes + 1)) : 0;
  for (int i = 0; i < count; ++i) {
    Region r;
    r.label = 1 + static_cast<int>(rng.below(foreground));
    const bool paired = r.label <= 2 * num_pairs;
    const bool coupled = rng.bernoulli(spec.depth_coupling) && paired;
    if (coupled) {
      const int pair = (r.label - 1) / 2;
      const bool near = (r.label - 1) % 2 == 0;
      r.color = pair_color(pair, num_pairs);
      r.depth = (near ? kNearLayer : kFarLayer) + rng.uniform(-kLayerJitter, kLayerJitter);
    } else {
      r.color = class_color(r.label, k);
      r.depth = rng.uniform(0.3, 0.95);
    }
    r.ellipse = rng.bernoulli(0.4);
    const int g = spec.snap;
    r.rh = g * ((height / 4 + static_cast<int>(rng.below(height / 4 + 1))) / g);
    r.rw = g * ((width / 4 + static_cast<int>(rng.below(width / 4 + 1))) / g);
    r.y0 = g * static_cast<int>(rng.below((height - r.rh) / g + 1));
    r.x0 = g * static_cast<int>(rng.below((width - r.rw) / g + 1));
    regions.push_back(r);
  }
  // Painter's order: nearer regions occlude farther ones.
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) { return a.depth < b.depth; });

  GeneratedScene scene;
  RgbdSample& s = scene.sample;
  s.rgb = Tensor({3, height, width});
  s.depth = Tensor({1, height, width});
  s.label = LabelMask(height, width, 0);
  scene.region_of_pixel.assign(static_cast<std::size_t>(height) * width, 0);
  const Color bg = class_color(0, k);
  auto rgb = s.rgb.mutable_data();
  auto depth = s.depth.mutable_data();
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      int owner = -1;
      for (int r = static_cast<int>(regions.size()) - 1; r >= 0; --r)
        if (regions[r].contains(y, x)) {
          owner = r;
          break;
        }
      const Color& c = owner < 0 ? bg : regions[owner].color;
      const double base = owner < 0 ? kBackgroundDepth : regions[owner].depth;
      for (int ch = 0; ch < 3; ++ch) rgb[ch * plane + p] = static_cast<Scalar>(c[ch]);
      depth[p] = static_cast<Scalar>(std::clamp(base + rng.uniform(-spec.layer_noise, spec.layer_noise), 0.0, 1.0));
      s.label.values[p] = static_cast<std::uint8_t>(owner < 0 ? 0 : regions[owner].label);
      scene.region_of_pixel[p] = owner + 1;
    }
  return scene;
}

std::vector<RgbdSample> generate_dataset(const SceneSpec& spec, int n, int height, int width) {
  if (n < 1) throw ConfigError("dataset size must be at least 1");
  std::vector<RgbdSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(generate_scene(spec, i, height, width).sample);
  return out;
}

double rgb_ambiguous_fraction(std::span<const RgbdSample> samples) {
  auto key_of = [](const RgbdSample& s, std::size_t p, std::size_t plane) {
    std::uint32_t key = 0;
    for (int ch = 0; ch < 3; ++ch)
      key = key << 8 | static_cast<std::uint32_t>(std::lround(s.rgb.data()[ch * plane + p] * 255.0f));
    return key;
  };
  std::map<std::uint32_t, std::set<int>> labels_of;
  std::int64_t total = 0;
  for (const auto& s : samples) {
    const std::size_t plane = s.label.values.size();
    for (std::size_t p = 0; p < plane; ++p) labels_of[key_of(s, p, plane)].insert(s.label.values[p]);
  }
  std::int64_t ambiguous = 0;
  for (const auto& s : samples) {
    const std::size_t plane = s.label.values.size();
    total += static_cast<std::int64_t>(plane);
    for (std::size_t p = 0; p < plane; ++p)
      if (labels_of[key_of(s, p, plane)].size() > 1) ++ambiguous;
  }
  return total ? static_cast<double>(ambiguous) / static_cast<double>(total) : 0.0;
}

RgbdSample hflip(const RgbdSample& sample) {
  const int h = sample.height(), w = sample.width();
  auto flip_planes = [h, w](const Tensor& t) {
    Tensor out(t.shape());
    const auto src = t.data();
    auto dst = out.mutable_data();
    const std::int64_t planes = t.dim(0);
    for (std::int64_t c = 0; c < planes; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) dst[(c * h + y) * w + x] = src[(c * h + y) * w + (w - 1 - x)];
    return out;
  };
  RgbdSample out;
  out.rgb = flip_planes(sample.rgb);
  out.depth = flip_planes(sample.depth);
  out.label = LabelMask(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.label.at(y, x) = sample.label.at(y, w - 1 - x);
  return out;
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  if (image.rank() != 3) throw DimensionError("gaussian_blur expects (C, H, W)");
  if (!(sigma > 0.0)) return image.detach();
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : kernel) v /= total;

  const auto c = image.dim(0);
  const int h = static_cast<int>(image.dim(1)), w = static_cast<int>(image.dim(2));
  const auto src = image.data();
  std::vector<double> tmp(src.size());
  Tensor out(image.shape());
  auto dst = out.mutable_data();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const std::int64_t base = ch * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += kernel[i + radius] * src[base + y * w + std::clamp(x + i, 0, w - 1)];
        tmp[base + y * w + x] = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += kernel[i + radius] * tmp[base + std::clamp(y + i, 0, h - 1) * w + x];
        dst[base + y * w + x] = static_cast<Scalar>(std::clamp(s, 0.0, 1.0));
      }
  }
  return out;
}

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb_raw(double h, double s, double v, double& r, double& g, double& b) {
  h -= std::floor(h);
  const double c = v * s, hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double rr = 0, gg = 0, bb = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0:
      rr = c;
      gg = x;
      break;
    case 1:
      rr = x;
      gg = c;
      break;
    case 2:
      gg = c;
      bb = x;
      break;
    case 3:
      gg = x;
      bb = c;
      break;
    case 4:
      rr = x;
      bb = c;
      break;
    default:
      rr = c;
      bb = x;
      break;
  }
  const double m = v - c;
  r = rr + m;
  g = gg + m;
  b = bb + m;
}

double gray_of(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace

Tensor color_jitter(const Tensor& rgb, const JitterFactors& f) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw DimensionError("color_jitter expects (3, H, W)");
  const std::size_t plane = static_cast<std::size_t>(rgb.dim(1) * rgb.dim(2));
  const auto src = rgb.data();
  std::vector<double> r(plane), g(plane), b(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    r[p] = std::clamp(src[p] * f.brightness, 0.0, 1.0);
    g[p] = std::clamp(src[plane + p] * f.brightness, 0.0, 1.0);
    b[p] = std::clamp(src[2 * plane + p] * f.brightness, 0.0, 1.0);
  }
  double mean_gray = 0.0;
  for (std::size_t p = 0; p < plane; ++p) mean_gray += gray_of(r[p], g[p], b[p]);
  mean_gray /= static_cast<double>(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    r[p] = std::clamp((r[p] - mean_gray) * f.contrast + mean_gray, 0.0, 1.0);
    g[p] = std::clamp((g[p] - mean_gray) * f.contrast + mean_gray, 0.0, 1.0);
    b[p] = std::clamp((b[p] - mean_gray) * f.contrast + mean_gray, 0.0, 1.0);
    const double gray = gray_of(r[p], g[p], b[p]);
    r[p] = std::clamp((r[p] - gray) * f.saturation + gray, 0.0, 1.0);
    g[p] = std::clamp((g[p] - gray) * f.saturation + gray, 0.0, 1.0);
    b[p] = std::clamp((b[p] - gray) * f.saturation + gray, 0.0, 1.0);
    if (f.hue_shift != 0.0) {
      double h, s, v;
      rgb_to_hsv(r[p], g[p], b[p], h, s, v);
      hsv_to_rgb_raw(h + f.hue_shift, s, v, r[p], g[p], b[p]);
    }
  }
  Tensor out(rgb.shape());
  auto dst = out.mutable_data();
  for (std::size_t p = 0; p < plane; ++p) {
    dst[p] = static_cast<Scalar>(std::clamp(r[p], 0.0, 1.0));
    dst[plane + p] = static_cast<Scalar>(std::clamp(g[p], 0.0, 1.0));
    dst[2 * plane + p] = static_cast<Scalar>(std::clamp(b[p], 0.0, 1.0));
  }
  return out;
}

RgbdSample augment(const RgbdSample& sample, Rng& rng, const AugmentOptions& o) {
  // Draw every random number up front so the stream does not depend on which
  // branches fire.
  const bool flip = rng.bernoulli(o.flip_p);
  const bool blur = rng.bernoulli(o.blur_p);
  const double sigma = rng.uniform(o.blur_sigma_min, o.blur_sigma_max);
  JitterFactors f;
  f.brightness = rng.uniform(1.0 - o.brightness, 1.0 + o.brightness);
  f.contrast = rng.uniform(1.0 - o.contrast, 1.0 + o.contrast);
  f.saturation = rng.uniform(1.0 - o.saturation, 1.0 + o.saturation);
  f.hue_shift = rng.uniform(-o.hue, o.hue);

  RgbdSample out = flip ? hflip(sample) : RgbdSample{sample.rgb.detach(), sample.depth.detach(), sample.label};
  if (blur) out.rgb = gaussian_blur(out.rgb, sigma);
  out.rgb = color_jitter(out.rgb, f);
  return out;
}

std::string sample_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

void write_sample(const std::filesystem::path& dir, int index, const RgbdSample& sample) {
  const int h = sample.height(), w = sample.width();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  netpbm::Image rgb{w, h, 3, 255, std::vector<std::uint16_t>(plane * 3)};
  const auto rv = sample.rgb.data();
  for (std::size_t p = 0; p < plane; ++p)
    for (int ch = 0; ch < 3; ++ch)
      rgb.samples[p * 3 + ch] =
          static_cast<std::uint16_t>(std::lround(std::clamp<double>(rv[ch * plane + p], 0.0, 1.0) * 255.0));
  netpbm::Image depth{w, h, 1, 65535, std::vector<std::uint16_t>(plane)};
  const auto dv = sample.depth.data();
  for (std::size_t p = 0; p < plane; ++p)
    depth.samples[p] =
        static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(dv[p]), 0.0, 1.0) * 65535.0));
  netpbm::Image label{w, h, 1, 255, std::vector<std::uint16_t>(sample.label.values.begin(), sample.label.values.end())};
  const std::string stem = sample_stem(index);
  netpbm::write(dir / (stem + "_rgb.ppm"), rgb);
  netpbm::write(dir / (stem + "_depth.pgm"), depth);
  netpbm::write(dir / (stem + "_label.pgm"), label);
}

RgbdSample read_sample(const std::filesystem::path& dir, int index) {
  const std::string stem = sample_stem(index);
  const auto rgb = netpbm::read(dir / (stem + "_rgb.ppm"));
  const auto depth = netpbm::read(dir / (stem + "_depth.pgm"));
  const auto label = netpbm::read(dir / (stem + "_label.pgm"));
  if (rgb.channels != 3 || depth.channels != 1 || label.channels != 1)
    throw FormatError("sample " + stem + ": wrong channel count in one of its files");
  if (rgb.width != depth.width || rgb.width != label.width || rgb.height != depth.height || rgb.height != label.height)
    throw DataError("sample " + stem + ": rgb/depth/label sizes differ");
  if (label.maxval > 255) throw FormatError("sample " + stem + ": label maxval exceeds 255");
  const int h = rgb.height, w = rgb.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  RgbdSample s;
  s.rgb = Tensor({3, h, w});
  auto rv = s.rgb.mutable_data();
  for (std::size_t p = 0; p < plane; ++p)
    for (int ch = 0; ch < 3; ++ch)
      rv[ch * plane + p] = static_cast<Scalar>(rgb.samples[p * 3 + ch] / static_cast<double>(rgb.maxval));
  s.depth = Tensor({1, h, w});
  auto dv = s.depth.mutable_data();
  for (std::size_t p = 0; p < plane; ++p)
    dv[p] = static_cast<Scalar>(depth.samples[p] / static_cast<double>(depth.maxval));
  s.label = LabelMask(h, w);
  for (std::size_t p = 0; p < plane; ++p) s.label.values[p] = static_cast<std::uint8_t>(label.samples[p]);
  return s;
}

void write_manifest(const std::filesystem::path& dir, std::span<const ManifestEntry> entries) {
  std::ofstream f(dir / "manifest.txt", std::ios::trunc);
  if (!f) throw IoError("cannot write " + (dir / "manifest.txt").string());
  for (const auto& e : entries)
    f << e.index << ' ' << e.split << ' ' << e.height << ' ' << e.width << ' ' << e.num_classes << '\n';
  if (!f) throw IoError("failed writing manifest in " + dir.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    ManifestEntry e;
    if (!(is >> e.index >> e.split >> e.height >> e.width >> e.num_classes) || (e.split != "train" && e.split != "val"))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'index split H W K'");
    out.push_back(e);
  }
  return out;
}

SplitIndices split_indices(int n, double val_fraction, std::uint64_t seed) {
  if (n < 1) throw ConfigError("cannot split an empty dataset");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derive(seed, 0x5e1175ULL);
  rng.shuffle(std::span<int>(order));
  const int n_val = static_cast<int>(std::lround(n * val_fraction));
  SplitIndices s;
  s.val.assign(order.begin(), order.begin() + n_val);
  s.train.assign(order.begin() + n_val, order.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto entries = read_manifest(dir);
  if (entries.empty()) throw DataError("dataset " + dir.string() + " lists no samples");
  Dataset ds;
  ds.num_classes = entries.front().num_classes;
  for (const auto& e : entries) {
    if (e.num_classes != ds.num_classes) throw DataError("manifest mixes class counts");
    RgbdSample s = read_sample(dir, e.index);
    if (s.height() != e.height || s.width() != e.width)
      throw DataError("sample " + sample_stem(e.index) + " size differs from manifest");
    s.validate(ds.num_classes);
    (e.split == "train" ? ds.train : ds.val).push_back(std::move(s));
  }
  return ds;
}

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "surgdepth/label_mask.hpp"
#include "surgdepth/rng.hpp"
#include "surgdepth/tensor.hpp"

namespace surgdepth {

struct RgbdSample {
  Tensor rgb;    // (3, H, W) in [0, 1]
  Tensor depth;  // (1, H, W) in [0, 1], larger = nearer
  LabelMask label;

  int height() const { return label.h; }
  int width() const { return label.w; }
  // Throws DataError if the rasters disagree in size or hold invalid values.
  void validate(int num_classes) const;
};

// Synthetic scene recipe. Each image is a background plus random rectangles
// and ellipses, each at its own depth layer.
struct SceneSpec {
  int num_classes = 4;
  int min_shapes = 3;
  int max_shapes = 5;
  // Probability that a region's class is encoded by its depth layer while
  // its color is shared with its partner class.
  double depth_coupling = 0.5;
  // Per-pixel depth deviation within a region stays below this bound.
  double layer_noise = 0.01;
  // Region boxes start and end on multiples of this many pixels.
  int snap = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Sample plus the id of the region that owns each pixel (0 = background).
struct GeneratedScene {
  RgbdSample sample;
  std::vector<int> region_of_pixel;
};

// Deterministic in (spec.seed, index).
GeneratedScene generate_scene(const SceneSpec& spec, int index, int height, int width);
std::vector<RgbdSample> generate_dataset(const SceneSpec& spec, int n, int height, int width);

// Fraction of pixels whose exact 8-bit RGB value co-occurs with two or more
// labels somewhere in the set. Such pixels cannot be classified from color.
double rgb_ambiguous_fraction(std::span<const RgbdSample> samples);

struct AugmentOptions {
  double flip_p = 0.5;
  double blur_p = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.05;
};

// Joint horizontal flip; blur and color jitter touch RGB only. Labels are
// never resampled.
RgbdSample augment(const RgbdSample& sample, Rng& rng, const AugmentOptions& options = {});
RgbdSample hflip(const RgbdSample& sample);
// Separable Gaussian blur with replicated borders, per channel.
Tensor gaussian_blur(const Tensor& image, double sigma);

struct JitterFactors {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue_shift = 0.0;  // fraction of a full turn
};
// Applies brightness, contrast, saturation, hue in that order, clamping to [0, 1].
Tensor color_jitter(const Tensor& rgb, const JitterFactors& factors);

// --- on-disk layout -------------------------------------------------------
// {index:06}_rgb.ppm   P6, maxval 255
// {index:06}_depth.pgm P5, maxval 65535, value = round(depth * 65535)
// {index:06}_label.pgm P5, maxval 255
// manifest.txt         "index split H W K" per line

std::string sample_stem(int index);
void write_sample(const std::filesystem::path& dir, int index, const RgbdSample& sample);
RgbdSample read_sample(const std::filesystem::path& dir, int index);

struct ManifestEntry {
  int index = 0;
  std::string split;  // "train" or "val"
  int height = 0;
  int width = 0;
  int num_classes = 0;
};

void write_manifest(const std::filesystem::path& dir, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
};

// Disjoint, deterministic in seed. val gets round(n * val_fraction) samples.
SplitIndices split_indices(int n, double val_fraction, std::uint64_t seed);

struct Dataset {
  int num_classes = 0;
  std::vector<RgbdSample> train;
  std::vector<RgbdSample> val;
};

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace surgdepth

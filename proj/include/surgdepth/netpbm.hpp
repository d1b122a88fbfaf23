// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace surgdepth::netpbm {

// Binary P5 (channels = 1) or P6 (channels = 3) raster. Samples are stored
// interleaved per pixel; maxval > 255 means big-endian 16-bit samples on disk.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  int maxval = 255;
  std::vector<std::uint16_t> samples;
};

std::vector<std::uint8_t> encode(const Image& image);
// Throws FormatError (with the byte offset of the problem) on bad input.
Image decode(const std::vector<std::uint8_t>& bytes);

void write(const std::filesystem::path& path, const Image& image);
Image read(const std::filesystem::path& path);

}  // namespace surgdepth::netpbm

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "surgdepth/errors.hpp"

namespace surgdepth::netpbm {
namespace {

void validate(const Image& img) {
  if (img.width < 1 || img.height < 1) throw FormatError("netpbm: empty raster");
  if (img.channels != 1 && img.channels != 3) throw FormatError("netpbm: channels must be 1 or 3");
  if (img.maxval < 1 || img.maxval > 65535) throw FormatError("netpbm: maxval outside [1, 65535]");
  if (img.samples.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw FormatError("netpbm: sample count does not match raster size");
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("netpbm: " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int header_int(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail(std::string("expected ") + field);
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1 << 24) fail(std::string(field) + " too large");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  std::size_t pos_ = 0;
  const std::vector<std::uint8_t>& bytes_;
};

}  // namespace

std::vector<std::uint8_t> encode(const Image& img) {
  validate(img);
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n" + std::to_string(img.maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = img.maxval > 255;
  out.reserve(out.size() + img.samples.size() * (wide ? 2 : 1));
  for (auto s : img.samples) {
    if (s > img.maxval) throw FormatError("netpbm: sample exceeds maxval");
    if (wide) out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  return out;
}

Image decode(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) r.fail("expected magic P5 or P6");
  Image img;
  img.channels = bytes[1] == '6' ? 3 : 1;
  r.pos_ = 2;
  img.width = r.header_int("width");
  img.height = r.header_int("height");
  img.maxval = r.header_int("maxval");
  if (img.width < 1 || img.height < 1) r.fail("zero raster dimension");
  if (img.maxval < 1 || img.maxval > 65535) r.fail("maxval outside [1, 65535]");
  if (r.pos_ >= bytes.size() || !std::isspace(bytes[r.pos_])) r.fail("expected single whitespace after maxval");
  ++r.pos_;
  const bool wide = img.maxval > 255;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  const std::size_t need = n * (wide ? 2 : 1);
  if (bytes.size() - r.pos_ < need)
    r.fail("raster truncated: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size() - r.pos_));
  if (bytes.size() - r.pos_ > need) {
    r.pos_ += need;
    r.fail("trailing bytes after raster");
  }
  img.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t v;
    if (wide) {
      v = static_cast<std::uint16_t>((bytes[r.pos_] << 8) | bytes[r.pos_ + 1]);
      r.pos_ += 2;
    } else {
      v = bytes[r.pos_++];
    }
    if (v > img.maxval) {
      r.pos_ -= wide ? 2 : 1;
      r.fail("sample exceeds maxval");
    }
    img.samples[i] = v;
  }
  return img;
}

void write(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

Image read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace surgdepth::netpbm

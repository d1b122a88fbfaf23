// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "surgdepth/errors.hpp"

namespace surgdepth {
namespace {

std::string shape_token(const Shape& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

Shape parse_shape_token(const std::string& token, const std::string& where) {
  if (token == "scalar") return {};
  Shape shape;
  std::istringstream is(token);
  std::string part;
  while (std::getline(is, part, 'x')) {
    try {
      shape.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw FormatError(where + ": bad shape '" + token + "'");
    }
  }
  return shape;
}

void put_f32_le(std::vector<char>& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

struct Parsed {
  CheckpointManifest manifest;
  std::vector<unsigned char> blob;
};

Parsed parse(const std::filesystem::path& path, bool with_blob) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(f, line) || line != kCheckpointMagic)
    throw FormatError(where + ": missing " + std::string(kCheckpointMagic) + " header");
  Parsed p;
  bool ended = false;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string at = where + ":" + std::to_string(lineno);
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    if (kind == "config") {
      std::string kv;
      is >> kv;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw FormatError(at + ": bad config line");
      p.manifest.config.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    } else if (kind == "param") {
      CheckpointEntry e;
      std::string shape;
      if (!(is >> e.name >> shape >> e.offset >> e.count)) throw FormatError(at + ": bad param line");
      e.shape = parse_shape_token(shape, at);
      if (numel_of(e.shape) != e.count) throw FormatError(at + ": count disagrees with shape");
      p.manifest.params.push_back(std::move(e));
    } else {
      throw FormatError(at + ": unknown manifest line '" + line + "'");
    }
  }
  if (!ended) throw FormatError(where + ": manifest not terminated by 'end'");
  if (with_blob) {
    p.blob.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    for (const auto& e : p.manifest.params)
      if (e.offset + static_cast<std::uint64_t>(e.count) * 4 > p.blob.size())
        throw FormatError(where + ": data for " + e.name + " runs past end of file");
  }
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ostringstream head;
  head << kCheckpointMagic << '\n';
  for (const auto& [k, v] : architecture_keys(model.config)) head << "config " << k << '=' << v << '\n';
  std::vector<char> blob;
  for (const auto& p : model.parameters()) {
    head << "param " << p.name << ' ' << shape_token(p.tensor.shape()) << ' ' << blob.size() << ' ' << p.tensor.numel()
         << '\n';
    for (Scalar v : p.tensor.data()) put_f32_le(blob, static_cast<float>(v));
  }
  head << "end\n";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  const std::string h = head.str();
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

CheckpointManifest read_checkpoint_manifest(const std::filesystem::path& path) { return parse(path, false).manifest; }

void load_checkpoint(const std::filesystem::path& path, Model& model) {
  const Parsed p = parse(path, true);
  const KeyValues expected = architecture_keys(model.config);
  for (const auto& [k, v] : expected) {
    bool found = false;
    for (const auto& [ck, cv] : p.manifest.config)
      if (ck == k) {
        found = true;
        if (cv != v)
          throw CheckpointMismatch(path.string() + ": checkpoint has " + k + "=" + cv + ", model has " + k + "=" + v);
      }
    if (!found) throw CheckpointMismatch(path.string() + ": checkpoint lacks config key " + k);
  }
  const ParamList params = model.parameters();
  if (params.size() != p.manifest.params.size())
    throw CheckpointMismatch(path.string() + ": checkpoint holds " + std::to_string(p.manifest.params.size()) +
                             " tensors, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = p.manifest.params[i];
    if (e.name != params[i].name || e.shape != params[i].tensor.shape())
      throw CheckpointMismatch(path.string() + ": tensor " + std::to_string(i) + " is " + e.name + " " +
                               shape_str(e.shape) + ", model expects " + params[i].name + " " +
                               shape_str(params[i].tensor.shape()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    auto dst = t.mutable_data();
    const unsigned char* src = p.blob.data() + p.manifest.params[i].offset;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = get_f32_le(src + 4 * j);
  }
}

Model load_model(const std::filesystem::path& path) {
  const CheckpointManifest m = read_checkpoint_manifest(path);
  ModelConfig config;
  for (const auto& [k, v] : m.config)
    if (!apply_model_key(config, k, v)) throw FormatError(path.string() + ": unknown config key " + k);
  Model model = build_model(config);
  load_checkpoint(path, model);
  return model;
}

std::uint64_t parameter_checksum(const Model& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model.parameters())
    for (Scalar v : p.tensor.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  return h;
}

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "surgdepth/errors.hpp"

namespace surgdepth {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  if (used != value.size()) throw ConfigError("invalid value '" + value + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path.string());
  return parse_key_values(f, path.string());
}

bool apply_model_key(ModelConfig& c, const std::string& key, const std::string& value) {
  if (key == "image_h")
    c.image_h = parse_number<int>(key, value);
  else if (key == "image_w")
    c.image_w = parse_number<int>(key, value);
  else if (key == "patch")
    c.patch = parse_number<int>(key, value);
  else if (key == "embed_dim")
    c.embed_dim = parse_number<int>(key, value);
  else if (key == "depth_blocks")
    c.depth_blocks = parse_number<int>(key, value);
  else if (key == "heads")
    c.heads = parse_number<int>(key, value);
  else if (key == "fusion_k")
    c.fusion_k = parse_number<int>(key, value);
  else if (key == "fusion_dim")
    c.fusion_dim = parse_number<int>(key, value);
  else if (key == "decoder_blocks")
    c.decoder_blocks = parse_number<int>(key, value);
  else if (key == "num_classes")
    c.num_classes = parse_number<int>(key, value);
  else if (key == "decoder_input")
    c.decoder_input = parse_decoder_input(value);
  else if (key == "rgb_baseline")
    c.rgb_baseline = parse_bool(key, value);
  else if (key == "seed")
    c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "init_std")
    c.init_std = parse_double(key, value);
  else if (key == "lr")
    c.lr = parse_double(key, value);
  else if (key == "weight_decay")
    c.weight_decay = parse_double(key, value);
  else if (key == "epochs")
    c.epochs = parse_number<int>(key, value);
  else if (key == "batch_size")
    c.batch_size = parse_number<int>(key, value);
  else if (key == "max_steps")
    c.max_steps = parse_number<int>(key, value);
  else if (key == "augment")
    c.augment = parse_bool(key, value);
  else if (key == "ignore_index")
    c.ignore_index = parse_number<int>(key, value);
  else
    return false;
  return true;
}

bool apply_scene_key(SceneSpec& s, const std::string& key, const std::string& value) {
  if (key == "num_classes")
    s.num_classes = parse_number<int>(key, value);
  else if (key == "min_shapes")
    s.min_shapes = parse_number<int>(key, value);
  else if (key == "max_shapes")
    s.max_shapes = parse_number<int>(key, value);
  else if (key == "depth_coupling")
    s.depth_coupling = parse_double(key, value);
  else if (key == "layer_noise")
    s.layer_noise = parse_double(key, value);
  else if (key == "snap")
    s.snap = parse_number<int>(key, value);
  else if (key == "seed")
    s.seed = parse_number<std::uint64_t>(key, value);
  else
    return false;
  return true;
}

KeyValues architecture_keys(const ModelConfig& c) {
  return {
      {"image_h", std::to_string(c.image_h)},
      {"image_w", std::to_string(c.image_w)},
      {"patch", std::to_string(c.patch)},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"depth_blocks", std::to_string(c.depth_blocks)},
      {"heads", std::to_string(c.heads)},
      {"fusion_k", std::to_string(c.fusion_k)},
      {"fusion_dim", std::to_string(c.effective_fusion_dim())},
      {"decoder_blocks", std::to_string(c.decoder_blocks)},
      {"num_classes", std::to_string(c.num_classes)},
      {"decoder_input", to_string(c.decoder_input)},
      {"rgb_baseline", c.rgb_baseline ? "true" : "false"},
  };
}

KeyValues model_keys(const ModelConfig& c) {
  KeyValues kv = architecture_keys(c);
  kv.emplace_back("seed", std::to_string(c.seed));
  kv.emplace_back("init_std", fmt_double(c.init_std));
  kv.emplace_back("lr", fmt_double(c.lr));
  kv.emplace_back("weight_decay", fmt_double(c.weight_decay));
  kv.emplace_back("epochs", std::to_string(c.epochs));
  kv.emplace_back("batch_size", std::to_string(c.batch_size));
  kv.emplace_back("max_steps", std::to_string(c.max_steps));
  kv.emplace_back("augment", c.augment ? "true" : "false");
  kv.emplace_back("ignore_index", std::to_string(c.ignore_index));
  return kv;
}

}  // namespace surgdepth

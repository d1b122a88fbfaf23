// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "surgdepth/data.hpp"
#include "surgdepth/model.hpp"

namespace surgdepth {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// One key=value per line; '#' starts a comment; blank lines are skipped.
KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

// Returns false when the key is not a field of the target; throws ConfigError
// when the value does not parse.
bool apply_model_key(ModelConfig& config, const std::string& key, const std::string& value);
bool apply_scene_key(SceneSpec& spec, const std::string& key, const std::string& value);

// Fields that fix the parameter layout; stored in checkpoints.
KeyValues architecture_keys(const ModelConfig& config);
// Every ModelConfig field.
KeyValues model_keys(const ModelConfig& config);

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surgdepth/config.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/model.hpp"

namespace surgdepth {

// Checkpoint layout (all text lines end in '\n'):
//
//   SRGD0001
//   config <key>=<value>                        architecture fields
//   param <name> <d0>x<d1>x... <offset> <count>  offset in bytes into the blob
//   end
//   <blob: little-endian f32 values of every param, in manifest order>
inline constexpr char kCheckpointMagic[] = "SRGD0001";

// Raised when a checkpoint does not fit the model it is loaded into.
class CheckpointMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
  std::int64_t count = 0;
};

struct CheckpointManifest {
  KeyValues config;
  std::vector<CheckpointEntry> params;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model);
CheckpointManifest read_checkpoint_manifest(const std::filesystem::path& path);
// Copies checkpoint values into `model`. Names, shapes and architecture keys
// must match exactly.
void load_checkpoint(const std::filesystem::path& path, Model& model);
// Rebuilds the model the checkpoint was saved from.
Model load_model(const std::filesystem::path& path);

// FNV-1a over the raw bytes of every parameter; cheap equality fingerprint.
std::uint64_t parameter_checksum(const Model& model);

}  // namespace surgdepth

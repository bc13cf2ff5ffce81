#pragma once

#include <filesystem>
#include <string>

#include "holo/nn/model.hpp"

namespace holo::nn {

struct Checkpoint {
  ModelConfig model;
  ParameterSet gen;
  ParameterSet disc;  // may be empty
  /// Free-form JSON object stored next to the model settings in config.json.
  std::string extra_json = "{}";
};

/// Writes `params.bin`, `tags.json` and `config.json` into `dir`.
/// params.bin: u32 count, then per tensor u32 name length, UTF-8 name, u32 rank, u32 dims,
/// float32 values; all little-endian. Critic tensors carry the prefix "disc.".
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace holo::nn

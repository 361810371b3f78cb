#pragma once

// Flat parameter container:
//   "LFT1"
//   repeat: u64 name_len, name bytes, u64 rank, rank × u64 dims,
//           numel × float64 payload
// All integers and floats little-endian.

#include "lfsod/tensor.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lft {

struct CheckpointEntry {
  std::string name;
  Tensor tensor;
};

std::string encode_checkpoint(std::span<const Parameter* const> params);
std::vector<CheckpointEntry> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);

/// Loads values by name into `params`. Every parameter must be present with a
/// matching shape; errors name the offending parameter.
void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace lft

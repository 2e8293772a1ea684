#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "stjd/contrastive.hpp"

namespace stjd {

struct CheckpointMeta {
  std::size_t step = 0;
  std::string layout = "ntu25";
  std::map<std::string, std::string> hyperparameters;
};

// Writes manifest.json plus one little-endian float64 file per tensor.
void save_checkpoint(const std::filesystem::path& dir, const EncoderPair& pair,
                     const CheckpointMeta& meta);

struct Checkpoint {
  EncoderPair pair;
  CheckpointMeta meta;
};

// Throws ShapeMismatch when a tensor file disagrees with the manifest or the
// tensors are mutually inconsistent.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace stjd

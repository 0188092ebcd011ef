// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "sirilab/param_tree.hpp"

namespace sirilab::model {

struct CheckpointMeta {
  ModelConfig config;
  int round = 0;                // retraining period index
  std::uint64_t init_seed = 0;  // seed of the original initialization
};

// Checkpoint layout: <dir>/meta.json holds the config, the round/seed info
// and a manifest of (name, rows, cols) in canonical order; <dir>/params.bin
// is one blob of little-endian float32 tensors in manifest order (row-major
// within each tensor). Constant-query buffers ride along under their
// reserved "Q.constant.*" names.
void save_checkpoint(const std::string& dir, const ModelState& state,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ModelState state;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

}  // namespace sirilab::model

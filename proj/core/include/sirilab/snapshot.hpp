// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sirilab/param_tree.hpp"

namespace sirilab::engine {

// Frozen copies of the initial-training parameter states of the backbone
// roles (V, L), plus the seed lineage that lets E/D initial draws be
// reproduced. Taken exactly once, before any optimizer step; immutable.
struct InitSnapshot {
  std::map<std::string, MatXf> backbone;  // role-V and role-L tensors
  std::uint64_t init_seed = 0;

  const MatXf& at(const std::string& name) const {
    const auto it = backbone.find(name);
    require(it != backbone.end(), "InitSnapshot: missing " + name);
    return it->second;
  }
};

// Deep-copies the V and L states. Hard error if the tree has already been
// touched by an optimizer step.
InitSnapshot snapshot_init(const model::ParamTree& params,
                           std::uint64_t init_seed);

}  // namespace sirilab::engine

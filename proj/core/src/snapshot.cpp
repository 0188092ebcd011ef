// SPDX-License-Identifier: Apache-2.0
#include "sirilab/snapshot.hpp"

namespace sirilab::engine {

InitSnapshot snapshot_init(const model::ParamTree& params,
                           std::uint64_t init_seed) {
  require(params.optimizer_steps == 0,
          "snapshot_init: training has already begun (" +
              std::to_string(params.optimizer_steps) + " optimizer steps)");
  InitSnapshot snap;
  snap.init_seed = init_seed;
  for (const auto& e : params.entries())
    if (e.role == model::Role::V || e.role == model::Role::L)
      snap.backbone[e.name] = e.value;
  return snap;
}

}  // namespace sirilab::engine

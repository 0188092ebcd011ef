// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sirilab/snapshot.hpp"

namespace sirilab::engine {

// The eight selective-retraining variants. kept_roles are continually
// trained across a period boundary; everything else is re-initialized
// (backbones from the snapshot, encoder/decoder from fresh draws).
struct RetrainMode {
  char label = 'h';
  std::vector<model::Role> kept;

  bool keeps(model::Role r) const;
  static RetrainMode from_label(char label);
  static const std::array<char, 8>& labels();
};

enum class DecoderReinit {
  fresh,     // new Xavier draw, salted with the round index (default)
  snapshot,  // reproduce the original initial draw
};

DecoderReinit decoder_reinit_from_string(const std::string& s);
std::string to_string(DecoderReinit r);

// Builds the parameter tree that starts retraining round `round`:
//   kept roles       -> copied bitwise from `trained`
//   V or L, not kept -> restored bitwise from the snapshot
//   E or D, not kept -> fresh Xavier draw seeded hash(base_seed, role, round)
//                       (decoder optionally reproduces its original draw)
// Learnable queries are role-D parameters and follow D; constant-query
// buffers are untouched by construction (they live outside the tree).
model::ParamTree apply_retrain_plan(const model::ParamTree& trained,
                                    const InitSnapshot& snap,
                                    const RetrainMode& mode, int round,
                                    std::uint64_t base_seed,
                                    const model::ModelConfig& cfg,
                                    DecoderReinit policy = DecoderReinit::fresh);

// Seed for a fresh draw of `role` at retraining round `round`.
std::uint64_t fresh_role_seed(std::uint64_t base_seed, model::Role role,
                              int round);

}  // namespace sirilab::engine

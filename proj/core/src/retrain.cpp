// SPDX-License-Identifier: Apache-2.0
#include "sirilab/retrain.hpp"

#include <algorithm>

#include "sirilab/rng.hpp"

namespace sirilab::engine {

using model::Role;

bool RetrainMode::keeps(Role r) const {
  return std::find(kept.begin(), kept.end(), r) != kept.end();
}

const std::array<char, 8>& RetrainMode::labels() {
  static const std::array<char, 8> l = {'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'};
  return l;
}

RetrainMode RetrainMode::from_label(char label) {
  RetrainMode m;
  m.label = label;
  switch (label) {
    case 'a': m.kept = {Role::V, Role::L, Role::E, Role::D}; break;
    case 'b': m.kept = {Role::V, Role::L, Role::E}; break;
    case 'c': m.kept = {Role::V, Role::D}; break;
    case 'd': m.kept = {Role::V, Role::E}; break;
    case 'e': m.kept = {Role::L, Role::E}; break;
    case 'f': m.kept = {Role::E, Role::D}; break;
    case 'g': m.kept = {Role::D}; break;
    case 'h': m.kept = {Role::E}; break;
    default: fail(std::string("unknown retrain mode: ") + label);
  }
  return m;
}

DecoderReinit decoder_reinit_from_string(const std::string& s) {
  if (s == "fresh") return DecoderReinit::fresh;
  if (s == "snapshot") return DecoderReinit::snapshot;
  fail("unknown decoder reinit policy: " + s);
}

std::string to_string(DecoderReinit r) {
  return r == DecoderReinit::fresh ? "fresh" : "snapshot";
}

std::uint64_t fresh_role_seed(std::uint64_t base_seed, Role role, int round) {
  return hash_combine(hash_combine(base_seed, std::uint64_t(to_string(role)[0])),
                      std::uint64_t(round));
}

model::ParamTree apply_retrain_plan(const model::ParamTree& trained,
                                    const InitSnapshot& snap,
                                    const RetrainMode& mode, int round,
                                    std::uint64_t base_seed,
                                    const model::ModelConfig& cfg,
                                    DecoderReinit policy) {
  model::ParamTree next;
  for (const auto& e : trained.entries())
    next.add(e.name, int(e.value.rows()), int(e.value.cols()));

  for (auto& e : next.entries()) {
    if (mode.keeps(e.role)) {
      e.value = trained.at(e.name);
    } else if (e.role == Role::V || e.role == Role::L) {
      e.value = snap.at(e.name);
    }
    // E/D handled below via role-wide fresh draws.
  }
  if (!mode.keeps(Role::E))
    model::reinit_role(next, cfg, Role::E,
                       fresh_role_seed(base_seed, Role::E, round));
  if (!mode.keeps(Role::D)) {
    const std::uint64_t seed = policy == DecoderReinit::fresh
                                   ? fresh_role_seed(base_seed, Role::D, round)
                                   : snap.init_seed;
    model::reinit_role(next, cfg, Role::D, seed);
  }
  return next;
}

}  // namespace sirilab::engine

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sirilab/common.hpp"
#include "sirilab/model_config.hpp"

namespace sirilab::model {

// Module roles: visual backbone (+ its projection), language backbone
// (+ its projection), fusion encoder, decoder(s) + heads + learnable queries.
enum class Role { V, L, E, D };

const char* to_string(Role r);
Role role_from_char(char c);

// The model's named parameters. Names are role-prefixed ("E.l0.attn.wq.w");
// the role prefixes partition the name set. Entry order is the canonical
// order used by checkpoints and the optimizer.
class ParamTree {
 public:
  struct Entry {
    std::string name;
    Role role;
    MatXf value;
    MatXf grad;
  };

  int add(const std::string& name, int rows, int cols);

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  MatXf& at(const std::string& name);
  const MatXf& at(const std::string& name) const;
  MatXf& grad(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  int size() const { return int(entries_.size()); }
  std::size_t parameter_count() const;

  void zero_grads();
  std::vector<std::string> names_by_role(Role r) const;

  // Bumped by the trainer on every optimizer step. Snapshotting requires 0.
  int optimizer_steps = 0;

  static Role role_of_name(const std::string& name);

  bool same_structure(const ParamTree& other) const;
  bool bitwise_equal(const ParamTree& other, Role r) const;
  float max_abs_diff(const ParamTree& other, Role r) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

struct ParamShape {
  std::string name;
  int rows = 0, cols = 0;
};

// Single source of truth for the parameter set implied by a config, in
// canonical order (V, L, E, D).
std::vector<ParamShape> canonical_params(const ModelConfig& cfg);

// Frozen non-trainable tensors that ride along with checkpoints
// (constant-query encodings, under reserved names "Q.constant.dec<j>").
using ConstantBuffers = std::map<std::string, MatXf>;

struct ModelState {
  ParamTree params;
  ConstantBuffers buffers;
};

// Xavier-initialized model. Weight matrices (".w", ".queries" paths) draw
// from Xavier-uniform with per-name derived seeds; biases (".b") start at
// zero and layer-norm gains (".g") at one. Deterministic in `seed`.
ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);

// Re-draws the parameters of one role in place, using the same per-name
// scheme under `role_seed`. Used for fresh re-initialization.
void reinit_role(ParamTree& tree, const ModelConfig& cfg, Role role,
                 std::uint64_t role_seed);

}  // namespace sirilab::model

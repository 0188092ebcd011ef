// SPDX-License-Identifier: Apache-2.0
#include "sirilab/param_tree.hpp"

#include <algorithm>
#include <cstring>

#include "sirilab/query_bank.hpp"
#include "sirilab/rng.hpp"

namespace sirilab::model {

const char* to_string(Role r) {
  switch (r) {
    case Role::V: return "V";
    case Role::L: return "L";
    case Role::E: return "E";
    case Role::D: return "D";
  }
  return "?";
}

Role role_from_char(char c) {
  switch (c) {
    case 'V': return Role::V;
    case 'L': return Role::L;
    case 'E': return Role::E;
    case 'D': return Role::D;
  }
  fail(std::string("unknown role: ") + c);
}

Role ParamTree::role_of_name(const std::string& name) {
  require(name.size() >= 2 && name[1] == '.',
          "parameter name must be role-prefixed: " + name);
  return role_from_char(name[0]);
}

int ParamTree::add(const std::string& name, int rows, int cols) {
  require(!has(name), "duplicate parameter: " + name);
  Entry e;
  e.name = name;
  e.role = role_of_name(name);
  e.value = MatXf::Zero(rows, cols);
  e.grad = MatXf::Zero(rows, cols);
  entries_.push_back(std::move(e));
  index_[name] = int(entries_.size()) - 1;
  return int(entries_.size()) - 1;
}

MatXf& ParamTree::at(const std::string& name) {
  const auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter: " + name);
  return entries_[std::size_t(it->second)].value;
}

const MatXf& ParamTree::at(const std::string& name) const {
  const auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter: " + name);
  return entries_[std::size_t(it->second)].value;
}

MatXf& ParamTree::grad(const std::string& name) {
  const auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter: " + name);
  return entries_[std::size_t(it->second)].grad;
}

std::size_t ParamTree::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += std::size_t(e.value.size());
  return n;
}

void ParamTree::zero_grads() {
  for (auto& e : entries_) e.grad.setZero();
}

std::vector<std::string> ParamTree::names_by_role(Role r) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.role == r) out.push_back(e.name);
  return out;
}

bool ParamTree::same_structure(const ParamTree& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols())
      return false;
  }
  return true;
}

bool ParamTree::bitwise_equal(const ParamTree& other, Role r) const {
  require(same_structure(other), "bitwise_equal: structure mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].role != r) continue;
    const MatXf& a = entries_[i].value;
    const MatXf& b = other.entries_[i].value;
    if (std::memcmp(a.data(), b.data(), sizeof(float) * std::size_t(a.size())) != 0)
      return false;
  }
  return true;
}

float ParamTree::max_abs_diff(const ParamTree& other, Role r) const {
  require(same_structure(other), "max_abs_diff: structure mismatch");
  float m = 0.f;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].role != r) continue;
    m = std::max(m, (entries_[i].value - other.entries_[i].value)
                        .cwiseAbs()
                        .maxCoeff());
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void block_params(std::vector<ParamShape>& out, const std::string& prefix,
                  int d, int f) {
  out.push_back({prefix + ".ln1.g", 1, d});
  out.push_back({prefix + ".ln1.b", 1, d});
  for (const char* w : {"wq", "wk", "wv", "wo"}) {
    out.push_back({prefix + ".attn." + w + ".w", d, d});
    out.push_back({prefix + ".attn." + w + ".b", 1, d});
  }
  out.push_back({prefix + ".ln2.g", 1, d});
  out.push_back({prefix + ".ln2.b", 1, d});
  out.push_back({prefix + ".ffn.w1.w", d, f});
  out.push_back({prefix + ".ffn.w1.b", 1, f});
  out.push_back({prefix + ".ffn.w2.w", f, d});
  out.push_back({prefix + ".ffn.w2.b", 1, d});
}

}  // namespace

std::vector<ParamShape> canonical_params(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.embed_dim;
  const int f = cfg.ffn_dim();
  const int c1 = cfg.stage1_channels();
  const int c2 = cfg.stage2_channels();
  const int s1 = cfg.visual_patch / 2;

  std::vector<ParamShape> p;
  // Visual backbone + visual projection.
  p.push_back({"V.stage1.w", s1 * s1 * 3, c1});
  p.push_back({"V.stage1.b", 1, c1});
  p.push_back({"V.dil1.w", 3 * 3 * c1, c2});
  p.push_back({"V.dil1.b", 1, c2});
  p.push_back({"V.dil2.w", 3 * 3 * c2, c2});
  p.push_back({"V.dil2.b", 1, c2});
  p.push_back({"V.stage2.w", 3 * 3 * c1, c2});
  p.push_back({"V.stage2.b", 1, c2});
  p.push_back({"V.proj.w", c2, d});
  p.push_back({"V.proj.b", 1, d});
  // Language backbone + text projection.
  p.push_back({"L.embed.w", cfg.vocab_size, d});
  block_params(p, "L.block", d, f);
  p.push_back({"L.proj.w", d, d});
  p.push_back({"L.proj.b", 1, d});
  // Fusion encoder.
  for (int i = 0; i < cfg.encoder_layers; ++i)
    block_params(p, "E.l" + std::to_string(i), d, f);
  p.push_back({"E.final_ln.g", 1, d});
  p.push_back({"E.final_ln.b", 1, d});
  // Decoder(s), heads, learnable queries.
  for (int j = 0; j < cfg.n_decoders(); ++j) {
    const std::string dp = "D.dec" + std::to_string(j);
    if (cfg.decoders[std::size_t(j)] == queries::QueryKind::learnable)
      p.push_back({dp + ".queries", cfg.n_queries, d});
    for (int i = 0; i < cfg.decoder_layers; ++i) {
      const std::string lp = dp + ".l" + std::to_string(i);
      p.push_back({lp + ".ln1.g", 1, d});
      p.push_back({lp + ".ln1.b", 1, d});
      for (const char* w : {"wq", "wk", "wv", "wo"}) {
        p.push_back({lp + ".self." + w + ".w", d, d});
        p.push_back({lp + ".self." + w + ".b", 1, d});
      }
      p.push_back({lp + ".ln2.g", 1, d});
      p.push_back({lp + ".ln2.b", 1, d});
      for (const char* w : {"wq", "wk", "wv", "wo"}) {
        p.push_back({lp + ".cross." + w + ".w", d, d});
        p.push_back({lp + ".cross." + w + ".b", 1, d});
      }
      p.push_back({lp + ".ln3.g", 1, d});
      p.push_back({lp + ".ln3.b", 1, d});
      p.push_back({lp + ".ffn.w1.w", d, f});
      p.push_back({lp + ".ffn.w1.b", 1, f});
      p.push_back({lp + ".ffn.w2.w", f, d});
      p.push_back({lp + ".ffn.w2.b", 1, d});
    }
    p.push_back({dp + ".final_ln.g", 1, d});
    p.push_back({dp + ".final_ln.b", 1, d});
    p.push_back({dp + ".box.w1.w", d, d});
    p.push_back({dp + ".box.w1.b", 1, d});
    p.push_back({dp + ".box.w2.w", d, d});
    p.push_back({dp + ".box.w2.b", 1, d});
    p.push_back({dp + ".box.w3.w", d, 4});
    p.push_back({dp + ".box.w3.b", 1, 4});
    p.push_back({dp + ".cls.w", d, 2});
    p.push_back({dp + ".cls.b", 1, 2});
  }
  return p;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Initialization rule by name suffix. Each matrix gets its own RNG derived
// from (seed, name) so draws are independent of enumeration order.
void init_entry(MatXf& m, const std::string& name, std::uint64_t seed,
                const ModelConfig& cfg) {
  if (ends_with(name, ".g")) {
    m.setOnes();
  } else if (ends_with(name, ".b")) {
    m.setZero();
  } else if (ends_with(name, ".queries")) {
    const auto q = queries::make_queries(
        {queries::QueryKind::learnable, cfg.n_queries, cfg.embed_dim},
        hash_str(seed, name));
    m = q.values;
  } else {
    Rng rng(hash_str(seed, name));
    fill_xavier(m, int(m.rows()), int(m.cols()), rng);
  }
}

}  // namespace

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
  ModelState st;
  for (const ParamShape& ps : canonical_params(cfg)) {
    const int i = st.params.add(ps.name, ps.rows, ps.cols);
    init_entry(st.params.entries()[std::size_t(i)].value, ps.name, seed, cfg);
  }
  for (int j = 0; j < cfg.n_decoders(); ++j) {
    if (cfg.decoders[std::size_t(j)] == queries::QueryKind::constant) {
      const auto q = queries::make_queries(
          {queries::QueryKind::constant, cfg.n_queries, cfg.embed_dim}, 0);
      st.buffers["Q.constant.dec" + std::to_string(j)] = q.values;
    }
  }
  return st;
}

void reinit_role(ParamTree& tree, const ModelConfig& cfg, Role role,
                 std::uint64_t role_seed) {
  for (auto& e : tree.entries())
    if (e.role == role) init_entry(e.value, e.name, role_seed, cfg);
}

}  // namespace sirilab::model

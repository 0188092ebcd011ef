// SPDX-License-Identifier: Apache-2.0
// Private JSON helpers shared by the .cpp files; not installed.
#pragma once

#include <json.hpp>

#include "sirilab/losses.hpp"
#include "sirilab/model_config.hpp"

namespace sirilab::model {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["embed_dim"] = c.embed_dim;
  j["encoder_layers"] = c.encoder_layers;
  j["decoder_layers"] = c.decoder_layers;
  j["attention_heads"] = c.attention_heads;
  j["n_queries"] = c.n_queries;
  j["soft_token_len"] = c.soft_token_len;
  j["visual_patch"] = c.visual_patch;
  j["vocab_size"] = c.vocab_size;
  j["max_expr_len"] = c.max_expr_len;
  j["feedforward_dim"] = c.feedforward_dim;
  j["image_h"] = c.image_h;
  j["image_w"] = c.image_w;
  nlohmann::json decs = nlohmann::json::array();
  for (auto k : c.decoders) decs.push_back(queries::to_string(k));
  j["decoders"] = decs;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.attention_heads = j.value("attention_heads", c.attention_heads);
  c.n_queries = j.value("n_queries", c.n_queries);
  c.soft_token_len = j.value("soft_token_len", c.soft_token_len);
  c.visual_patch = j.value("visual_patch", c.visual_patch);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_expr_len = j.value("max_expr_len", c.max_expr_len);
  c.feedforward_dim = j.value("feedforward_dim", c.feedforward_dim);
  c.image_h = j.value("image_h", c.image_h);
  c.image_w = j.value("image_w", c.image_w);
  if (j.contains("decoders")) {
    c.decoders.clear();
    for (const auto& k : j.at("decoders"))
      c.decoders.push_back(queries::query_kind_from_string(k.get<std::string>()));
  }
  return c;
}

inline nlohmann::json breakdown_to_json(const LossBreakdown& b) {
  return {{"l1", b.l1},
          {"giou", b.giou},
          {"soft_token", b.soft_token},
          {"total", b.total}};
}

inline LossBreakdown breakdown_from_json(const nlohmann::json& j) {
  LossBreakdown b;
  b.l1 = j.at("l1").get<double>();
  b.giou = j.at("giou").get<double>();
  b.soft_token = j.at("soft_token").get<double>();
  b.total = j.at("total").get<double>();
  return b;
}

}  // namespace sirilab::model

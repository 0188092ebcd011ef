// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sirilab/common.hpp"
#include "sirilab/query_bank.hpp"

namespace sirilab::model {

// Architecture hyperparameters. One entry in `decoders` per decoder; the
// single-task model has one, the multi-task variant two (main first).
struct ModelConfig {
  int embed_dim = 64;
  int encoder_layers = 3;
  int decoder_layers = 3;
  int attention_heads = 4;
  int n_queries = 16;
  int soft_token_len = 2;  // fixed by the architecture
  int visual_patch = 8;
  int vocab_size = 0;  // filled from the dataset vocabulary
  int max_expr_len = 16;
  int feedforward_dim = 0;  // 0 -> 4 * embed_dim
  int image_h = 64, image_w = 64;
  std::vector<queries::QueryKind> decoders = {queries::QueryKind::learnable};

  int ffn_dim() const { return feedforward_dim > 0 ? feedforward_dim : 4 * embed_dim; }
  int head_dim() const { return embed_dim / attention_heads; }
  int n_decoders() const { return int(decoders.size()); }
  int stage1_channels() const { return embed_dim / 4; }
  int stage2_channels() const { return embed_dim / 2; }
  int grid_h() const { return image_h / visual_patch; }
  int grid_w() const { return image_w / visual_patch; }
  int n_visual_tokens() const { return grid_h() * grid_w(); }

  void validate() const {
    require(embed_dim > 0 && embed_dim % attention_heads == 0,
            "ModelConfig: embed_dim must divide by attention_heads");
    require(embed_dim % 8 == 0,
            "ModelConfig: embed_dim must be a multiple of 8");
    require(soft_token_len == 2, "ModelConfig: soft_token_len is fixed at 2");
    require(encoder_layers >= 1 && decoder_layers >= 1,
            "ModelConfig: need at least one encoder and decoder layer");
    require(visual_patch >= 4 && visual_patch % 2 == 0,
            "ModelConfig: visual_patch must be even and >= 4");
    require(image_h % visual_patch == 0 && image_w % visual_patch == 0,
            "ModelConfig: image size must divide by visual_patch");
    require(vocab_size >= 2, "ModelConfig: vocab_size not set");
    require(n_queries >= 1, "ModelConfig: need at least one query");
    require(!decoders.empty() && decoders.size() <= 2,
            "ModelConfig: one or two decoders");
    for (auto k : decoders) {
      if (k == queries::QueryKind::constant)
        require(queries::exact_sqrt(n_queries) > 0,
                "ModelConfig: constant queries need a square n_queries");
    }
  }
};

}  // namespace sirilab::model

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "sirilab/dataset.hpp"
#include "sirilab/model_config.hpp"
#include "sirilab/param_tree.hpp"
#include "sirilab/prediction.hpp"
#include "sirilab/query_bank.hpp"
#include "sirilab/rng.hpp"
#include "sirilab/tape.hpp"

namespace sirilab::model {

// Read access to named parameters at scalar precision S. The float source
// hands out references into the ParamTree; the map source serves the double
// oracle instantiation used by finite-difference tests.
template <typename S>
struct ParamSource {
  virtual ~ParamSource() = default;
  virtual const MatX<S>& operator()(const std::string& name) const = 0;
};

struct TreeSource final : ParamSource<float> {
  const ParamTree* tree;
  explicit TreeSource(const ParamTree& t) : tree(&t) {}
  const MatXf& operator()(const std::string& name) const override {
    return tree->at(name);
  }
};

template <typename S>
struct MapSource final : ParamSource<S> {
  std::map<std::string, MatX<S>> values;
  const MatX<S>& operator()(const std::string& name) const override {
    const auto it = values.find(name);
    require(it != values.end(), "MapSource: unknown parameter " + name);
    return it->second;
  }
};

template <typename S>
MapSource<S> cast_tree(const ParamTree& tree) {
  MapSource<S> out;
  for (const auto& e : tree.entries())
    out.values[e.name] = e.value.template cast<S>();
  return out;
}

// Fixed per-config tensors: conv spatial plans, sinusoidal positional
// encodings, constant-query encodings. Must outlive any tape built on them
// (the tape references them without copying).
template <typename S>
struct ModelAssets {
  Conv2dPlan stage1, dil1, dil2, stage2;
  MatX<S> vis_pos;                    // n_visual x stage2_channels
  std::vector<MatX<S>> text_pos;      // index = length, 1..max_expr_len
  std::vector<MatX<S>> const_queries; // per decoder; empty matrix if learnable

  static ModelAssets make(const ModelConfig& cfg, const ConstantBuffers& buffers) {
    cfg.validate();
    ModelAssets a;
    const int c1 = cfg.stage1_channels(), c2 = cfg.stage2_channels();
    const int s1 = cfg.visual_patch / 2;
    a.stage1 = Conv2dPlan::make(cfg.image_h, cfg.image_w, 3, c1, s1, s1, 1, 0);
    const int h1 = a.stage1.h_out, w1 = a.stage1.w_out;
    a.dil1 = Conv2dPlan::make(h1, w1, c1, c2, 3, 2, 2, 2);
    a.dil2 = Conv2dPlan::make(a.dil1.h_out, a.dil1.w_out, c2, c2, 3, 1, 2, 2);
    a.stage2 = Conv2dPlan::make(h1, w1, c1, c2, 3, 2, 1, 1);
    require(a.stage2.h_out == cfg.grid_h() && a.stage2.w_out == cfg.grid_w() &&
                a.dil2.h_out == cfg.grid_h(),
            "ModelAssets: backbone geometry mismatch");

    // 2D positions of the visual grid cells. Integer cell indices feed the
    // sinusoid (matching the text side) so neighbouring cells are well
    // separated in encoding space.
    MatXd centers(cfg.n_visual_tokens(), 2);
    int k = 0;
    for (int gy = 0; gy < cfg.grid_h(); ++gy)
      for (int gx = 0; gx < cfg.grid_w(); ++gx, ++k) {
        centers(k, 0) = double(gx);
        centers(k, 1) = double(gy);
      }
    a.vis_pos = queries::sinusoidal_encode(centers, c2).cast<S>();

    // 1D sinusoidal positions for every text length.
    a.text_pos.resize(std::size_t(cfg.max_expr_len) + 1);
    const int d = cfg.embed_dim;
    for (int len = 1; len <= cfg.max_expr_len; ++len) {
      MatX<S>& pe = a.text_pos[std::size_t(len)];
      pe.resize(len, d);
      for (int pos = 0; pos < len; ++pos)
        for (int i = 0; i < d / 2; ++i) {
          const double freq = std::pow(10000.0, 2.0 * double(i) / double(d));
          pe(pos, 2 * i) = S(std::sin(double(pos) / freq));
          pe(pos, 2 * i + 1) = S(std::cos(double(pos) / freq));
        }
    }

    a.const_queries.resize(std::size_t(cfg.n_decoders()));
    for (int j = 0; j < cfg.n_decoders(); ++j) {
      if (cfg.decoders[std::size_t(j)] == queries::QueryKind::constant) {
        const auto it = buffers.find("Q.constant.dec" + std::to_string(j));
        require(it != buffers.end(), "ModelAssets: missing constant queries");
        a.const_queries[std::size_t(j)] = it->second.template cast<S>();
      }
    }
    return a;
  }
};

template <typename S>
struct EncoderOut {
  int node = -1;  // (n_visual + n_text) x embed_dim, final-normed
  int n_visual = 0, n_text = 0;
  // Attention probabilities, [layer][head], each (T x T); filled only when
  // the forward pass was built with keep_attention.
  std::vector<std::vector<MatX<S>>> attention;
};

template <typename S>
struct DecoderOut {
  int embeddings = -1;  // n_queries x embed_dim
  int boxes = -1;       // n_queries x 4, sigmoid center-size
  int logits = -1;      // n_queries x 2
};

// Builds the forward graph of the grounding model on a tape. A ParamTree is
// immutable during a forward pass; every parameter leaf is created once per
// Forward instance and recorded for gradient accumulation.
template <typename S>
class Forward {
 public:
  Forward(Tape<S>& tape, const ParamSource<S>& params, const ModelConfig& cfg,
          const ModelAssets<S>& assets, bool keep_attention = false)
      : t_(tape), p_(params), cfg_(cfg), assets_(assets),
        keep_attention_(keep_attention) {}

  // ---- individual stages (the public operation surface) ----

  // Image -> n_visual tokens of stage2_channels dims, 2D positions added.
  // Two-stage conv with a dilated low-level branch fused into the deeper map.
  int visual_backbone(const synth::Image& img) {
    require(img.h == cfg_.image_h && img.w == cfg_.image_w,
            "visual_backbone: image size mismatch with config");
    const int in = t_.constant(image_matrix(img));
    const int x1 = t_.relu(t_.conv2d(in, P("V.stage1.w"), P("V.stage1.b"),
                                     assets_.stage1));
    const int low = t_.conv2d(
        t_.relu(t_.conv2d(x1, P("V.dil1.w"), P("V.dil1.b"), assets_.dil1)),
        P("V.dil2.w"), P("V.dil2.b"), assets_.dil2);
    const int deep =
        t_.conv2d(x1, P("V.stage2.w"), P("V.stage2.b"), assets_.stage2);
    const int fused = t_.add(deep, low);
    return t_.add_fixed(fused, &assets_.vis_pos);
  }

  // Variant without the dilated low-level branch (ablation probe).
  int visual_backbone_no_dilated(const synth::Image& img) {
    const int in = t_.constant(image_matrix(img));
    const int x1 = t_.relu(t_.conv2d(in, P("V.stage1.w"), P("V.stage1.b"),
                                     assets_.stage1));
    const int deep =
        t_.conv2d(x1, P("V.stage2.w"), P("V.stage2.b"), assets_.stage2);
    return t_.add_fixed(deep, &assets_.vis_pos);
  }

  // Token ids -> n_text x embed_dim features. Pad ids are dropped (masked
  // out of attention and excluded downstream); at least one real token is
  // required and every id must be in-vocabulary.
  int language_backbone(const std::vector<int>& token_ids) {
    std::vector<int> ids;
    for (int id : token_ids) {
      require(id >= 0 && id < cfg_.vocab_size,
              "language_backbone: token id out of vocabulary");
      if (id != synth::Vocabulary::kPadId) ids.push_back(id);
    }
    require(!ids.empty(), "language_backbone: expression has no real tokens");
    require(int(ids.size()) <= cfg_.max_expr_len,
            "language_backbone: expression too long");
    n_text_ = int(ids.size());
    int x = t_.embedding(P("L.embed.w"), std::move(ids));
    x = t_.add_fixed(x, &assets_.text_pos[std::size_t(n_text_)]);
    return encoder_block(x, "L.block", nullptr);
  }

  // Shared-space projections (roles V and L), concatenation, E-layer stack.
  EncoderOut<S> encode(int vis_tokens, int text_features) {
    EncoderOut<S> out;
    out.n_visual = int(t_.val(vis_tokens).rows());
    out.n_text = int(t_.val(text_features).rows());
    const int v = t_.add_rowvec(t_.matmul(vis_tokens, P("V.proj.w")),
                                P("V.proj.b"));
    const int l = t_.add_rowvec(t_.matmul(text_features, P("L.proj.w")),
                                P("L.proj.b"));
    int x = t_.concat_rows({v, l});
    if (keep_attention_)
      out.attention.resize(std::size_t(cfg_.encoder_layers));
    for (int i = 0; i < cfg_.encoder_layers; ++i) {
      std::vector<MatX<S>>* sink =
          keep_attention_ ? &out.attention[std::size_t(i)] : nullptr;
      x = encoder_block(x, "E.l" + std::to_string(i), sink);
    }
    out.node = t_.layer_norm(x, P("E.final_ln.g"), P("E.final_ln.b"));
    return out;
  }

  // Query node for decoder j: learnable parameter or frozen constant grid.
  int queries_node(int decoder) {
    if (cfg_.decoders[std::size_t(decoder)] == queries::QueryKind::constant)
      return t_.constant_ref(&assets_.const_queries[std::size_t(decoder)]);
    return P("D.dec" + std::to_string(decoder) + ".queries");
  }

  // Self-attention over queries + cross-attention to the encoder output.
  // Queries act as per-slot positional embeddings: the content stream starts
  // at zero and the query vector is added to the attention inputs at every
  // layer, so each slot keeps its identity through the stack.
  int decode(const EncoderOut<S>& enc, int queries, int decoder) {
    const std::string dp = "D.dec" + std::to_string(decoder);
    require(t_.val(queries).rows() == cfg_.n_queries &&
                t_.val(queries).cols() == cfg_.embed_dim,
            "decode: bad query shape");
    int x = t_.constant(MatX<S>::Zero(cfg_.n_queries, cfg_.embed_dim));
    for (int i = 0; i < cfg_.decoder_layers; ++i) {
      const std::string lp = dp + ".l" + std::to_string(i);
      int xn = t_.layer_norm(x, P(lp + ".ln1.g"), P(lp + ".ln1.b"));
      int qk = t_.add(xn, queries);
      x = t_.add(x, mha_qkv(qk, qk, xn, lp + ".self", nullptr));
      xn = t_.layer_norm(x, P(lp + ".ln2.g"), P(lp + ".ln2.b"));
      x = t_.add(x, mha_qkv(t_.add(xn, queries), enc.node, enc.node,
                            lp + ".cross", nullptr));
      xn = t_.layer_norm(x, P(lp + ".ln3.g"), P(lp + ".ln3.b"));
      x = t_.add(x, ffn(xn, lp + ".ffn"));
    }
    return t_.layer_norm(x, P(dp + ".final_ln.g"), P(dp + ".final_ln.b"));
  }

  // 3-layer box MLP through a sigmoid + linear soft-token head.
  DecoderOut<S> heads(int embeddings, int decoder) {
    const std::string dp = "D.dec" + std::to_string(decoder);
    DecoderOut<S> out;
    out.embeddings = embeddings;
    int h = t_.relu(t_.add_rowvec(t_.matmul(embeddings, P(dp + ".box.w1.w")),
                                  P(dp + ".box.w1.b")));
    h = t_.relu(t_.add_rowvec(t_.matmul(h, P(dp + ".box.w2.w")),
                              P(dp + ".box.w2.b")));
    out.boxes = t_.sigmoid(t_.add_rowvec(t_.matmul(h, P(dp + ".box.w3.w")),
                                         P(dp + ".box.w3.b")));
    out.logits = t_.add_rowvec(t_.matmul(embeddings, P(dp + ".cls.w")),
                               P(dp + ".cls.b"));
    return out;
  }

  // Full pipeline over all decoders.
  std::vector<DecoderOut<S>> run(const synth::Image& img,
                                 const std::vector<int>& token_ids,
                                 EncoderOut<S>* enc_out = nullptr) {
    const int vis = visual_backbone(img);
    const int txt = language_backbone(token_ids);
    EncoderOut<S> enc = encode(vis, txt);
    std::vector<DecoderOut<S>> outs;
    for (int j = 0; j < cfg_.n_decoders(); ++j)
      outs.push_back(heads(decode(enc, queries_node(j), j), j));
    if (enc_out) *enc_out = std::move(enc);
    return outs;
  }

  // (name, node) pairs of every parameter leaf this forward pass touched.
  const std::vector<std::pair<std::string, int>>& param_nodes() const {
    return param_nodes_;
  }

  Tape<S>& tape() { return t_; }

 private:
  static MatX<S> image_matrix(const synth::Image& img) {
    MatX<S> m(Eigen::Index(img.h) * img.w, 3);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        for (int c = 0; c < 3; ++c)
          m(Eigen::Index(y) * img.w + x, c) = S(img.at(y, x, c));
    return m;
  }

  // Parameter leaf, created at most once per name.
  int P(const std::string& name) {
    const auto it = param_cache_.find(name);
    if (it != param_cache_.end()) return it->second;
    const int id = t_.param(&p_(name));
    param_cache_.emplace(name, id);
    param_nodes_.emplace_back(name, id);
    return id;
  }

  int ffn(int x, const std::string& prefix) {
    int h = t_.relu(t_.add_rowvec(t_.matmul(x, P(prefix + ".w1.w")),
                                  P(prefix + ".w1.b")));
    return t_.add_rowvec(t_.matmul(h, P(prefix + ".w2.w")),
                         P(prefix + ".w2.b"));
  }

  int mha(int q_in, int kv_in, const std::string& prefix,
          std::vector<MatX<S>>* attn_sink) {
    return mha_qkv(q_in, kv_in, kv_in, prefix, attn_sink);
  }

  int mha_qkv(int q_src, int k_src, int v_src, const std::string& prefix,
              std::vector<MatX<S>>* attn_sink) {
    const int heads = cfg_.attention_heads;
    const int dh = cfg_.head_dim();
    const int q = t_.add_rowvec(t_.matmul(q_src, P(prefix + ".wq.w")),
                                P(prefix + ".wq.b"));
    const int k = t_.add_rowvec(t_.matmul(k_src, P(prefix + ".wk.w")),
                                P(prefix + ".wk.b"));
    const int v = t_.add_rowvec(t_.matmul(v_src, P(prefix + ".wv.w")),
                                P(prefix + ".wv.b"));
    const S inv_sqrt = S(1) / std::sqrt(S(dh));
    std::vector<int> head_outs;
    head_outs.reserve(std::size_t(heads));
    for (int h = 0; h < heads; ++h) {
      const int qh = t_.slice_cols(q, h * dh, dh);
      const int kh = t_.slice_cols(k, h * dh, dh);
      const int vh = t_.slice_cols(v, h * dh, dh);
      const int scores = t_.scale(t_.matmul_nt(qh, kh), inv_sqrt);
      const int probs = t_.softmax_rows(scores);
      if (attn_sink) attn_sink->push_back(t_.val(probs));
      head_outs.push_back(t_.matmul(probs, vh));
    }
    const int cat = t_.concat_cols(head_outs);
    return t_.add_rowvec(t_.matmul(cat, P(prefix + ".wo.w")),
                         P(prefix + ".wo.b"));
  }

  // Pre-LN self-attention block used by the language backbone and encoder.
  int encoder_block(int x, const std::string& prefix,
                    std::vector<MatX<S>>* attn_sink) {
    int xn = t_.layer_norm(x, P(prefix + ".ln1.g"), P(prefix + ".ln1.b"));
    x = t_.add(x, mha(xn, xn, prefix + ".attn", attn_sink));
    xn = t_.layer_norm(x, P(prefix + ".ln2.g"), P(prefix + ".ln2.b"));
    return t_.add(x, ffn(xn, prefix + ".ffn"));
  }

  Tape<S>& t_;
  const ParamSource<S>& p_;
  const ModelConfig& cfg_;
  const ModelAssets<S>& assets_;
  bool keep_attention_ = false;
  int n_text_ = 0;
  std::map<std::string, int> param_cache_;
  std::vector<std::pair<std::string, int>> param_nodes_;
};

// Plain-value prediction for one sample (inference path; no gradients).
Prediction predict(const ParamTree& tree, const ModelAssets<float>& assets,
                   const ModelConfig& cfg, const synth::GroundingSample& sample,
                   int decoder = 0);

inline Prediction to_prediction(const Tape<float>& t, const DecoderOut<float>& d) {
  Prediction p;
  p.boxes = t.val(d.boxes);
  p.logits = t.val(d.logits);
  return p;
}

}  // namespace sirilab::model

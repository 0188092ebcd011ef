// SPDX-License-Identifier: Apache-2.0
#include "sirilab/evaluate.hpp"

namespace sirilab::model {

Prediction predict(const ParamTree& tree, const ModelAssets<float>& assets,
                   const ModelConfig& cfg, const synth::GroundingSample& sample,
                   int decoder) {
  Tape<float> tape;
  tape.grad_enabled = false;
  const TreeSource source(tree);
  Forward<float> fwd(tape, source, cfg, assets);
  const auto outs = fwd.run(sample.image, sample.expression);
  return to_prediction(tape, outs.at(std::size_t(decoder)));
}

}  // namespace sirilab::model

namespace sirilab::report {

using model::ModelAssets;

std::vector<double> per_sample_ious(const model::ParamTree& params,
                                    const model::ConstantBuffers& buffers,
                                    const model::ModelConfig& cfg,
                                    const synth::Dataset& data, int decoder) {
  const ModelAssets<float> assets = ModelAssets<float>::make(cfg, buffers);
  std::vector<double> ious;
  ious.reserve(std::size_t(data.size()));
  for (const auto& sample : data.samples) {
    const Prediction pred =
        model::predict(params, assets, cfg, sample, decoder);
    ious.push_back(iou(predict_box(pred), sample.target_box));
  }
  return ious;
}

EvalResult eval_from_ious(const std::vector<double>& ious) {
  EvalResult r;
  r.n_samples = int(ious.size());
  if (ious.empty()) return r;
  int hits = 0;
  double sum = 0.0;
  for (double v : ious) {
    if (v > 0.5) ++hits;  // strictly greater, by definition
    sum += v;
  }
  r.prec_at_05 = double(hits) / double(r.n_samples);
  r.mean_iou = sum / double(r.n_samples);
  return r;
}

EvalResult evaluate(const model::ParamTree& params,
                    const model::ConstantBuffers& buffers,
                    const model::ModelConfig& cfg, const synth::Dataset& data,
                    int decoder) {
  require(data.size() > 0, "evaluate: empty dataset");
  return eval_from_ious(per_sample_ious(params, buffers, cfg, data, decoder));
}

AttentionMap extract_attention(const model::ParamTree& params,
                               const model::ConstantBuffers& buffers,
                               const model::ModelConfig& cfg,
                               const synth::GroundingSample& sample) {
  const ModelAssets<float> assets = ModelAssets<float>::make(cfg, buffers);
  Tape<float> tape;
  tape.grad_enabled = false;
  const model::TreeSource source(params);
  model::Forward<float> fwd(tape, source, cfg, assets, /*keep_attention=*/true);
  const int vis = fwd.visual_backbone(sample.image);
  const int txt = fwd.language_backbone(sample.expression);
  const auto enc = fwd.encode(vis, txt);

  const auto& last = enc.attention.back();
  const int nv = enc.n_visual, nt = enc.n_text;
  MatXf head_mean = MatXf::Zero(nv + nt, nv + nt);
  for (const MatXf& h : last) head_mean += h;
  head_mean /= float(last.size());

  // Visual-token rows restricted to text-token keys, averaged over keys.
  AttentionMap out;
  out.source_layer = cfg.encoder_layers - 1;
  out.aggregation = "head-mean/text-key-mean/minmax";
  out.grid.resize(cfg.grid_h(), cfg.grid_w());
  for (int v = 0; v < nv; ++v) {
    const float s = head_mean.row(v).segment(nv, nt).mean();
    out.grid(v / cfg.grid_w(), v % cfg.grid_w()) = s;
  }
  const float lo = out.grid.minCoeff(), hi = out.grid.maxCoeff();
  if (hi > lo)
    out.grid = (out.grid.array() - lo) / (hi - lo);
  else
    out.grid.setZero();
  return out;
}

}  // namespace sirilab::report

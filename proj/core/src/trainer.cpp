// SPDX-License-Identifier: Apache-2.0
#include "sirilab/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "sirilab/rng.hpp"

namespace sirilab::engine {

using model::ModelAssets;
using model::ModelConfig;
using model::ParamTree;

AdamW::AdamW(ParamTree& tree, const TrainSettings& s) : tree_(&tree), s_(s) {
  m_.reserve(std::size_t(tree.size()));
  v_.reserve(std::size_t(tree.size()));
  for (const auto& e : tree.entries()) {
    m_.push_back(MatXf::Zero(e.value.rows(), e.value.cols()));
    v_.push_back(MatXf::Zero(e.value.rows(), e.value.cols()));
  }
}

void AdamW::step() {
  ++t_;
  const float b1 = float(s_.beta1), b2 = float(s_.beta2);
  const float bc1 = 1.f - std::pow(b1, float(t_));
  const float bc2 = 1.f - std::pow(b2, float(t_));
  const float lr = float(s_.learning_rate);
  const float wd = float(s_.weight_decay);
  const float eps = float(s_.eps);
  auto& entries = tree_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const MatXf& g = entries[i].grad;
    MatXf& m = m_[i];
    MatXf& v = v_[i];
    m = b1 * m + (1.f - b1) * g;
    v = b2 * v + (1.f - b2) * g.cwiseProduct(g);
    const auto mhat = m.array() / bc1;
    const auto vhat = v.array() / bc2;
    entries[i].value.array() -=
        lr * (mhat / (vhat.sqrt() + eps) + wd * entries[i].value.array());
  }
  ++tree_->optimizer_steps;
}

namespace {

// Per-sample forward + loss graph; returns the loss node (sum over decoders)
// and the per-sample breakdown.
struct SampleLoss {
  int node = -1;
  LossBreakdown breakdown;
};

SampleLoss sample_loss(model::Forward<float>& fwd, Tape<float>& tape,
                       const synth::GroundingSample& sample,
                       const LossWeights& w) {
  const auto outs = fwd.run(sample.image, sample.expression);
  SampleLoss out;
  std::vector<int> parts;
  std::vector<float> ones;
  for (const auto& dec : outs) {
    const LossNodes nodes =
        attach_total_loss(tape, dec.boxes, dec.logits, sample.target_box, w);
    out.breakdown += breakdown_from_nodes(tape, nodes);
    parts.push_back(nodes.total);
    ones.push_back(1.f);
  }
  out.node = parts.size() == 1 ? parts[0] : tape.lincomb(parts, ones);
  return out;
}

[[noreturn]] void abort_non_finite(const LossBreakdown& b, int epoch, int step,
                                   int sample_index) {
  std::ostringstream os;
  os << "train_period: non-finite loss at epoch " << epoch << ", step " << step
     << ", sample " << sample_index << " (l1=" << b.l1 << ", giou=" << b.giou
     << ", soft_token=" << b.soft_token << ", total=" << b.total << ")";
  fail(os.str());
}

}  // namespace

std::vector<LossBreakdown> train_period(ParamTree& tree,
                                        const model::ConstantBuffers& buffers,
                                        const ModelConfig& cfg,
                                        const synth::Dataset& data,
                                        const TrainSettings& settings,
                                        int epochs,
                                        std::uint64_t shuffle_seed) {
  require(data.size() >= 1, "train_period: empty dataset");
  std::vector<LossBreakdown> curve;
  if (epochs <= 0) return curve;

  const ModelAssets<float> assets = ModelAssets<float>::make(cfg, buffers);
  const model::TreeSource source(tree);
  AdamW opt(tree, settings);
  Rng shuffle_rng(shuffle_seed);

  std::vector<int> order(std::size_t(data.size()));
  std::iota(order.begin(), order.end(), 0);

  Tape<float> tape;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    LossBreakdown epoch_sum;
    int step = 0;
    for (int start = 0; start < data.size(); start += settings.batch_size, ++step) {
      const int bs = std::min(settings.batch_size, data.size() - start);
      tree.zero_grads();
      for (int k = 0; k < bs; ++k) {
        const int si = order[std::size_t(start + k)];
        tape.reset();
        model::Forward<float> fwd(tape, source, cfg, assets);
        const SampleLoss sl =
            sample_loss(fwd, tape, data.samples[std::size_t(si)], settings.loss);
        if (!std::isfinite(sl.breakdown.total))
          abort_non_finite(sl.breakdown, epoch, step, si);
        epoch_sum += sl.breakdown;
        tape.backward(sl.node);
        // Accumulate parameter gradients, scaled to a batch mean.
        const float inv_bs = 1.f / float(bs);
        for (const auto& [name, node] : fwd.param_nodes())
          if (tape.has_grad(node))
            tree.grad(name) += inv_bs * tape.grad(node);
      }
      opt.step();
    }
    epoch_sum /= double(data.size());
    curve.push_back(epoch_sum);
  }
  return curve;
}

LossBreakdown mean_loss(const ParamTree& tree,
                        const model::ConstantBuffers& buffers,
                        const ModelConfig& cfg, const synth::Dataset& data,
                        const LossWeights& w) {
  const ModelAssets<float> assets = ModelAssets<float>::make(cfg, buffers);
  const model::TreeSource source(tree);
  LossBreakdown sum;
  Tape<float> tape;
  tape.grad_enabled = false;
  for (const auto& sample : data.samples) {
    tape.reset();
    model::Forward<float> fwd(tape, source, cfg, assets);
    sum += sample_loss(fwd, tape, sample, w).breakdown;
  }
  sum /= double(data.size());
  return sum;
}

}  // namespace sirilab::engine

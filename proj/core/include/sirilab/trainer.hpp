// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sirilab/dataset.hpp"
#include "sirilab/losses.hpp"
#include "sirilab/model.hpp"

namespace sirilab::engine {

struct TrainSettings {
  double learning_rate = 3e-4;  // constant across the whole run
  double weight_decay = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int batch_size = 32;
  LossWeights loss;
};

// Decoupled-weight-decay adaptive-moment optimizer over a ParamTree.
// State is aligned with the tree's canonical entry order; a fresh instance
// is created at every period start, so no statistic crosses a boundary.
class AdamW {
 public:
  AdamW(model::ParamTree& tree, const TrainSettings& s);

  // One update from the gradients currently stored in the tree (assumed to
  // be averaged over the batch already).
  void step();

  int steps_taken() const { return t_; }

 private:
  model::ParamTree* tree_;
  TrainSettings s_;
  std::vector<MatXf> m_, v_;
  int t_ = 0;
};

// Mini-batch training for a fixed number of epochs. Shuffling is seeded by
// `shuffle_seed` and the whole routine is deterministic. Returns the
// per-epoch mean loss breakdown (all decoders summed in the multi-task
// case). Aborts with a diagnostic on a non-finite loss.
std::vector<LossBreakdown> train_period(
    model::ParamTree& tree, const model::ConstantBuffers& buffers,
    const model::ModelConfig& cfg, const synth::Dataset& data,
    const TrainSettings& settings, int epochs, std::uint64_t shuffle_seed);

// Mean loss over a dataset without updating parameters (diagnostics).
LossBreakdown mean_loss(const model::ParamTree& tree,
                        const model::ConstantBuffers& buffers,
                        const model::ModelConfig& cfg,
                        const synth::Dataset& data, const LossWeights& w);

}  // namespace sirilab::engine

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sirilab/dataset.hpp"
#include "sirilab/model.hpp"

namespace sirilab::report {

struct EvalResult {
  double prec_at_05 = 0.0;  // fraction with IoU strictly greater than 0.5
  double mean_iou = 0.0;
  int n_samples = 0;
};

// Per-sample IoUs of the selected boxes against ground truth. The building
// block for evaluate(); exposed so tests can recount the aggregate exactly.
std::vector<double> per_sample_ious(const model::ParamTree& params,
                                    const model::ConstantBuffers& buffers,
                                    const model::ModelConfig& cfg,
                                    const synth::Dataset& data,
                                    int decoder = 0);

// Prec@0.5 with the strict ">" rule, plus mean IoU. Pure function of
// (params, dataset); aggregation is order-independent.
EvalResult evaluate(const model::ParamTree& params,
                    const model::ConstantBuffers& buffers,
                    const model::ModelConfig& cfg, const synth::Dataset& data,
                    int decoder = 0);

EvalResult eval_from_ious(const std::vector<double>& ious);

struct AttentionMap {
  MatXf grid;              // grid_h x grid_w, min-max normalized to [0,1]
  int source_layer = 0;    // encoder layer the weights came from
  std::string aggregation; // how heads/keys were reduced
};

// Cross-modal attention of the last encoder layer: head-averaged weights of
// visual-token queries onto text-token keys, reduced to one scalar per
// visual token, reshaped to the grid and min-max normalized (an all-constant
// raw map normalizes to all zeros).
AttentionMap extract_attention(const model::ParamTree& params,
                               const model::ConstantBuffers& buffers,
                               const model::ModelConfig& cfg,
                               const synth::GroundingSample& sample);

}  // namespace sirilab::report

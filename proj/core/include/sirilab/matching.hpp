// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "sirilab/box.hpp"
#include "sirilab/common.hpp"
#include "sirilab/prediction.hpp"

namespace sirilab {

struct LossWeights {
  double l1 = 5.0;
  double giou = 2.0;
  double ce = 1.0;
  double w_eos = 0.1;  // down-weight for unmatched ("no object") queries
};

struct MatchResult {
  std::vector<int> query_for_target;  // injective: target i -> query index
  std::vector<double> pair_cost;      // matching cost of each assigned pair
};

// Minimum-cost assignment of rows (targets) to columns (queries) of a dense
// cost matrix, rows <= cols. Jonker-Volgenant style shortest augmenting
// paths; ties resolve to the lowest column index.
std::vector<int> hungarian(const MatXd& cost);

// DETR-style matching cost of query q against a corner-form target box:
//   l1 * |b_q - b_t|_1 (center-size)  +  giou * (1 - GIoU)  +  ce * (-p_belongs)
double match_cost(const Prediction& pred, int q, const Box& target,
                  const LossWeights& w);

// Grounding has a single target box per sample; the Hungarian assignment
// then reduces to an argmin over queries (tested equivalence).
MatchResult match(const Prediction& pred, const Box& target,
                  const LossWeights& w = {});

// General form used by the multi-target property tests.
MatchResult match_multi(const Prediction& pred, const std::vector<Box>& targets,
                        const LossWeights& w = {});

}  // namespace sirilab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sirilab/box.hpp"
#include "sirilab/common.hpp"

namespace sirilab {

// Decoder output for one sample: per-query boxes in normalized center-size
// form (all in (0,1) because they pass through a sigmoid) and 2-way
// soft-token logits. Column 0 = "belongs to the expression", column 1 =
// "no object".
struct Prediction {
  MatXf boxes;   // n_queries x 4 (cx, cy, w, h)
  MatXf logits;  // n_queries x 2

  int n_queries() const { return int(boxes.rows()); }

  BoxF box_corners(int q) const {
    return BoxF::from_center_size(boxes(q, 0), boxes(q, 1), boxes(q, 2),
                                  boxes(q, 3));
  }

  // Softmax probability of class 0 ("belongs") for query q.
  double prob_belongs(int q) const {
    const double d = double(logits(q, 1)) - double(logits(q, 0));
    return 1.0 / (1.0 + std::exp(d));
  }
};

// Inference selection rule: the query with maximal "belongs" probability,
// ties broken by lowest query index. Returns the corner-form box.
inline Box predict_box(const Prediction& pred) {
  int best = 0;
  double best_p = -1.0;
  for (int q = 0; q < pred.n_queries(); ++q) {
    const double p = pred.prob_belongs(q);
    if (p > best_p) {
      best_p = p;
      best = q;
    }
  }
  const BoxF b = pred.box_corners(best);
  return Box{double(b.x1), double(b.y1), double(b.x2), double(b.y2)};
}

}  // namespace sirilab

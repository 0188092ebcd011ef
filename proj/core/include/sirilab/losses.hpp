// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "sirilab/box.hpp"
#include "sirilab/common.hpp"
#include "sirilab/matching.hpp"
#include "sirilab/prediction.hpp"
#include "sirilab/tape.hpp"

namespace sirilab {

// total = l1_w * l1 + giou_w * giou_loss + ce_w * soft_token. The giou field
// stores the loss form 1 - GIoU, hence lies in [0, 2].
struct LossBreakdown {
  double l1 = 0.0;
  double giou = 0.0;
  double soft_token = 0.0;
  double total = 0.0;
  int matched_query = -1;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    l1 += o.l1;
    giou += o.giou;
    soft_token += o.soft_token;
    total += o.total;
    return *this;
  }
  LossBreakdown& operator/=(double n) {
    l1 /= n;
    giou /= n;
    soft_token /= n;
    total /= n;
    return *this;
  }
};

// Mean over queries of 2-way cross entropy: the matched query is labelled
// class 0 ("belongs"), all others class 1 ("no object") down-weighted by
// w_eos. Shared scalar-templated core so the double instantiation serves as
// the oracle for the float training path.
template <typename S>
S soft_token_ce_value(const MatX<S>& logits, int matched_query, S w_eos) {
  require(logits.cols() == 2, "soft_token_ce: expect N x 2 logits");
  require(matched_query >= 0 && matched_query < logits.rows(),
          "soft_token_ce: matched query out of range");
  S acc = S(0);
  for (Eigen::Index q = 0; q < logits.rows(); ++q) {
    const int label = (q == matched_query) ? 0 : 1;
    const S w = (q == matched_query) ? S(1) : w_eos;
    const S m = std::max(logits(q, 0), logits(q, 1));
    const S logz =
        m + std::log(std::exp(logits(q, 0) - m) + std::exp(logits(q, 1) - m));
    acc += w * (logz - logits(q, label));
  }
  return acc / S(logits.rows());
}

inline double soft_token_ce(const MatXf& logits, int matched_query,
                            double w_eos = 0.1) {
  MatXd l = logits.cast<double>();
  return soft_token_ce_value<double>(l, matched_query, w_eos);
}

// Loss components for a fixed matched query: L1 in center-size space on the
// matched box, GIoU loss in corner space on the matched box, CE over all
// queries. Pure function of (boxes, logits); usable at any scalar precision.
template <typename S>
LossBreakdown loss_components(const MatX<S>& boxes, const MatX<S>& logits,
                              const BoxT<S>& target, int matched_query,
                              const LossWeights& w) {
  const auto t_cs = target.to_center_size();
  S l1 = S(0);
  for (int k = 0; k < 4; ++k)
    l1 += std::abs(boxes(matched_query, k) - t_cs[std::size_t(k)]);
  const BoxT<S> b = BoxT<S>::from_center_size(
      boxes(matched_query, 0), boxes(matched_query, 1), boxes(matched_query, 2),
      boxes(matched_query, 3));
  const S giou_loss = S(1) - giou(b, target);
  const S ce = soft_token_ce_value<S>(logits, matched_query, S(w.w_eos));

  LossBreakdown out;
  out.l1 = double(l1);
  out.giou = double(giou_loss);
  out.soft_token = double(ce);
  out.total = w.l1 * out.l1 + w.giou * out.giou + w.ce * out.soft_token;
  out.matched_query = matched_query;
  return out;
}

// Matches, then evaluates the loss stack on the matched query.
inline LossBreakdown total_loss(const Prediction& pred, const Box& target,
                                const LossWeights& w = {}) {
  const MatchResult m = match(pred, target, w);
  const BoxF tf{float(target.x1), float(target.y1), float(target.x2),
                float(target.y2)};
  return loss_components<float>(pred.boxes, pred.logits, tf,
                                m.query_for_target.at(0), w);
}

// Both decoder losses, each matched independently, summed.
inline double dual_loss(const Prediction& main, const Prediction& aux,
                        const Box& target, const LossWeights& w = {}) {
  return total_loss(main, target, w).total + total_loss(aux, target, w).total;
}

// Tape node ids of the per-sample loss stack.
struct LossNodes {
  int l1 = -1;
  int giou = -1;
  int ce = -1;
  int total = -1;
  int matched_query = -1;
};

// Attaches the loss graph to existing box/logit nodes. The assignment is
// computed from current node values and treated as a constant of the graph
// (it is not differentiated through).
template <typename S>
LossNodes attach_total_loss(Tape<S>& t, int boxes_node, int logits_node,
                            const Box& target, const LossWeights& w) {
  Prediction pred;
  pred.boxes = t.val(boxes_node).template cast<float>();
  pred.logits = t.val(logits_node).template cast<float>();
  const MatchResult m = match(pred, target, w);
  const int q = m.query_for_target.at(0);

  LossNodes out;
  out.matched_query = q;

  const auto t_cs = target.to_center_size();
  MatX<S> target_cs(1, 4);
  for (int k = 0; k < 4; ++k) target_cs(0, k) = S(t_cs[std::size_t(k)]);
  const int matched_box = t.slice_rows(boxes_node, q, 1);
  out.l1 = t.l1_to(matched_box, std::move(target_cs));

  const int corners = t.cs_to_corners(matched_box);
  const BoxT<S> tb{S(target.x1), S(target.y1), S(target.x2), S(target.y2)};
  out.giou = t.giou_loss(corners, tb);

  const int n = int(t.val(logits_node).rows());
  std::vector<int> labels(std::size_t(n), 1);
  std::vector<S> weights(std::size_t(n), S(w.w_eos));
  labels[std::size_t(q)] = 0;
  weights[std::size_t(q)] = S(1);
  out.ce = t.cross_entropy_rows(logits_node, std::move(labels), std::move(weights));

  out.total = t.lincomb({out.l1, out.giou, out.ce},
                        {S(w.l1), S(w.giou), S(w.ce)});
  return out;
}

template <typename S>
LossBreakdown breakdown_from_nodes(const Tape<S>& t, const LossNodes& n) {
  LossBreakdown b;
  b.l1 = double(t.val(n.l1)(0, 0));
  b.giou = double(t.val(n.giou)(0, 0));
  b.soft_token = double(t.val(n.ce)(0, 0));
  b.total = double(t.val(n.total)(0, 0));
  b.matched_query = n.matched_query;
  return b;
}

}  // namespace sirilab

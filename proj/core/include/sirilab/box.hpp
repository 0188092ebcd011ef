// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "sirilab/common.hpp"

namespace sirilab {

// Corner-form box (x1, y1, x2, y2). Degenerate zero-area boxes are legal
// inputs to the geometry ops below; ground-truth validation is stricter and
// lives with the dataset code.
template <typename S>
struct BoxT {
  S x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  S area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const { return x1 <= x2 && y1 <= y2; }

  static BoxT from_center_size(S cx, S cy, S w, S h) {
    return {cx - w / S(2), cy - h / S(2), cx + w / S(2), cy + h / S(2)};
  }
  std::array<S, 4> to_center_size() const {
    return {(x1 + x2) / S(2), (y1 + y2) / S(2), x2 - x1, y2 - y1};
  }
};

using Box = BoxT<double>;
using BoxF = BoxT<float>;

template <typename S>
S intersection_area(const BoxT<S>& a, const BoxT<S>& b) {
  const S iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const S ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (iw > S(0) && ih > S(0)) ? iw * ih : S(0);
}

// |a ∩ b| / |a ∪ b|; 0 when the union has zero area.
template <typename S>
S iou(const BoxT<S>& a, const BoxT<S>& b) {
  const S inter = intersection_area(a, b);
  const S uni = a.area() + b.area() - inter;
  return uni > S(0) ? inter / uni : S(0);
}

template <typename S>
struct GiouResult {
  S value = 0;
  std::array<S, 4> d{};  // d(giou) / d(a.x1, a.y1, a.x2, a.y2)
};

// Generalized IoU plus its gradient w.r.t. the first box. Piecewise
// subgradients at the min/max kinks follow the comparison branch taken.
// Both boxes zero-area -> giou 0 with zero gradient (documented convention).
template <typename S>
GiouResult<S> giou_with_grad(const BoxT<S>& a, const BoxT<S>& b) {
  GiouResult<S> r;

  const S iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const S ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const bool has_inter = iw > S(0) && ih > S(0);
  const S inter = has_inter ? iw * ih : S(0);

  const S aw = a.x2 - a.x1, ah = a.y2 - a.y1;
  const S area_a = aw * ah;
  const S area_b = b.area();
  const S uni = area_a + area_b - inter;

  const S hw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const S hh = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const S hull = hw * hh;

  if (!(uni > S(0)) || !(hull > S(0))) return r;  // both degenerate

  r.value = inter / uni - (hull - uni) / hull;

  // dI/d(a coords)
  std::array<S, 4> dI{};
  if (has_inter) {
    if (a.x1 >= b.x1) dI[0] = -ih;
    if (a.y1 >= b.y1) dI[1] = -iw;
    if (a.x2 <= b.x2) dI[2] = ih;
    if (a.y2 <= b.y2) dI[3] = iw;
  }
  // dAa/d(a coords), dU = dAa - dI
  const std::array<S, 4> dA{-ah, -aw, ah, aw};
  // dH/d(a coords)
  std::array<S, 4> dH{};
  if (a.x1 <= b.x1) dH[0] = -hh;
  if (a.y1 <= b.y1) dH[1] = -hw;
  if (a.x2 >= b.x2) dH[2] = hh;
  if (a.y2 >= b.y2) dH[3] = hw;

  // giou = I/U - 1 + U/H
  const S inv_u2 = S(1) / (uni * uni);
  const S inv_h2 = S(1) / (hull * hull);
  for (int i = 0; i < 4; ++i) {
    const S dU = dA[std::size_t(i)] - dI[std::size_t(i)];
    r.d[std::size_t(i)] = (dI[std::size_t(i)] * uni - inter * dU) * inv_u2 +
                          (dU * hull - uni * dH[std::size_t(i)]) * inv_h2;
  }
  return r;
}

template <typename S>
S giou(const BoxT<S>& a, const BoxT<S>& b) {
  return giou_with_grad(a, b).value;
}

}  // namespace sirilab

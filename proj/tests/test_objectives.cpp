// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sirilab/losses.hpp"
#include "sirilab/matching.hpp"
#include "test_util.hpp"

using namespace sirilab;
using testutil::check_input_grad;
using testutil::random_mat;

namespace {

Box random_box(Rng& rng) {
  const double x1 = rng.uniform(0.0, 0.8), y1 = rng.uniform(0.0, 0.8);
  return {x1, y1, x1 + rng.uniform(0.05, 0.2), y1 + rng.uniform(0.05, 0.2)};
}

Prediction random_prediction(Rng& rng, int n_queries = 16) {
  Prediction p;
  p.boxes = random_mat(n_queries, 4, rng, 0.05, 0.6).cast<float>();
  p.logits = random_mat(n_queries, 2, rng, -2, 2).cast<float>();
  return p;
}

}  // namespace

TEST_CASE("iou hand cases") {
  CHECK(iou(Box{0, 0, 1, 1}, Box{0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(iou(Box{0, 0, 1, 1}, Box{1, 1, 2, 2}) == doctest::Approx(0.0));
  CHECK(iou(Box{0, 0, 2, 2}, Box{1, 1, 2, 2}) == doctest::Approx(0.25));
  // Zero-area union.
  CHECK(iou(Box{0.3, 0.3, 0.3, 0.3}, Box{0.3, 0.3, 0.3, 0.3}) == 0.0);
}

TEST_CASE("giou hand cases at 1e-9") {
  CHECK(std::abs(giou(Box{0, 0, 1, 1}, Box{0, 0, 1, 1}) - 1.0) < 1e-9);
  CHECK(std::abs(giou(Box{0, 0, 1, 1}, Box{1, 1, 2, 2}) - (-0.5)) < 1e-9);
  CHECK(std::abs(giou(Box{0, 0, 2, 2}, Box{1, 1, 2, 2}) - 0.25) < 1e-9);
  CHECK(giou(Box{0.2, 0.2, 0.2, 0.2}, Box{0.2, 0.2, 0.2, 0.2}) == 0.0);
}

TEST_CASE("iou and giou properties over random boxes") {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double ia = iou(a, b), ib = iou(b, a);
    const double ga = giou(a, b), gb = giou(b, a);
    CHECK(ia == doctest::Approx(ib).epsilon(1e-12));  // symmetry
    CHECK(ga == doctest::Approx(gb).epsilon(1e-12));
    CHECK(ia >= 0.0);
    CHECK(ia <= 1.0);
    CHECK(ga >= -1.0);
    CHECK(ga <= 1.0);
    CHECK(ga <= ia + 1e-12);
    // Translation invariance.
    const double dx = rng.uniform(-0.3, 0.3), dy = rng.uniform(-0.3, 0.3);
    const Box at{a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy};
    const Box bt{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
    CHECK(iou(at, bt) == doctest::Approx(ia).epsilon(1e-9));
    CHECK(giou(at, bt) == doctest::Approx(ga).epsilon(1e-9));
    // Hull == union -> giou == iou (nested boxes).
    const Box nested{a.x1 + 0.25 * (a.x2 - a.x1), a.y1 + 0.25 * (a.y2 - a.y1),
                     a.x1 + 0.75 * (a.x2 - a.x1), a.y1 + 0.75 * (a.y2 - a.y1)};
    CHECK(giou(a, nested) == doctest::Approx(iou(a, nested)).epsilon(1e-12));
  }
}

TEST_CASE("giou analytic gradient matches finite differences") {
  Rng rng(103);
  for (int i = 0; i < 50; ++i) {
    const Box b = random_box(rng);
    MatXd corners(1, 4);
    const Box a = random_box(rng);
    corners << a.x1, a.y1, a.x2, a.y2;
    check_input_grad(corners, [&](Tape<double>& t, int x) {
      return t.giou_loss(x, BoxT<double>{b.x1, b.y1, b.x2, b.y2});
    }, 1e-7, 1e-5);
  }
}

TEST_CASE("soft token cross entropy closed forms") {
  // Saturated correct predictions -> loss ~ 0.
  MatXf logits(16, 2);
  for (int q = 0; q < 16; ++q) {
    logits(q, 0) = q == 3 ? 30.f : -30.f;
    logits(q, 1) = q == 3 ? -30.f : 30.f;
  }
  CHECK(soft_token_ce(logits, 3) < 1e-9);

  // Uniform logits, 16 queries, w_eos=0.1: ln2 * (1 + 0.1*15)/16.
  logits.setZero();
  const double expected = std::log(2.0) * (1.0 + 0.1 * 15.0) / 16.0;
  CHECK(soft_token_ce(logits, 0) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.10830424696249145).epsilon(1e-12));

  // Flipping the matched label strictly increases the loss.
  Rng rng(107);
  MatXf l2 = random_mat(16, 2, rng, -1, 1).cast<float>();
  l2(5, 0) = 2.f;
  l2(5, 1) = -2.f;
  const double good = soft_token_ce(l2, 5);
  const double flipped = soft_token_ce(l2, 6);
  CHECK(flipped > good);
}

TEST_CASE("hungarian equals brute-force argmin on single-target instances") {
  Rng rng(109);
  for (int trial = 0; trial < 200; ++trial) {
    const Prediction pred = random_prediction(rng);
    const Box target = random_box(rng);
    const LossWeights w;
    const MatchResult m = match(pred, target, w);

    int best = 0;
    double best_cost = match_cost(pred, 0, target, w);
    for (int q = 1; q < 16; ++q) {
      const double c = match_cost(pred, q, target, w);
      if (c < best_cost) {
        best_cost = c;
        best = q;
      }
    }
    CHECK(m.query_for_target.at(0) == best);
    CHECK(m.pair_cost.at(0) == doctest::Approx(best_cost).epsilon(1e-12));
  }
}

TEST_CASE("hungarian tie-break picks the lowest query index") {
  MatXd cost(1, 4);
  cost << 2.0, 1.0, 1.0, 3.0;
  CHECK(hungarian(cost).at(0) == 1);
  cost << 5.0, 5.0, 5.0, 5.0;
  CHECK(hungarian(cost).at(0) == 0);
}

TEST_CASE("hungarian solves small multi-target instances optimally") {
  // Exhaustive check against permutation enumeration.
  Rng rng(211);
  for (int trial = 0; trial < 50; ++trial) {
    MatXd cost = random_mat(3, 5, rng, 0.0, 1.0);
    const auto assign = hungarian(cost);
    double got = 0;
    for (int i = 0; i < 3; ++i) got += cost(i, assign[std::size_t(i)]);
    // brute force over ordered column triples
    double best = 1e9;
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        for (int c = 0; c < 5; ++c) {
          if (a == b || b == c || a == c) continue;
          best = std::min(best, cost(0, a) + cost(1, b) + cost(2, c));
        }
    CHECK(got == doctest::Approx(best).epsilon(1e-9));
    // injectivity
    CHECK(assign[0] != assign[1]);
    CHECK(assign[1] != assign[2]);
    CHECK(assign[0] != assign[2]);
  }
}

TEST_CASE("match prefers the query with the perfect box and confident class") {
  Rng rng(113);
  Prediction pred = random_prediction(rng);
  const Box target{0.3, 0.3, 0.5, 0.6};
  const auto cs = target.to_center_size();
  for (int k = 0; k < 4; ++k) pred.boxes(7, k) = float(cs[std::size_t(k)]);
  pred.logits(7, 0) = 8.f;
  pred.logits(7, 1) = -8.f;
  CHECK(match(pred, target).query_for_target.at(0) == 7);
}

TEST_CASE("total_loss: identity, zero at perfection, weighted sum") {
  Rng rng(127);
  const Prediction pred = random_prediction(rng);
  const Box target{0.2, 0.3, 0.4, 0.7};
  const LossWeights w;
  const LossBreakdown b = total_loss(pred, target, w);
  CHECK(b.total == doctest::Approx(w.l1 * b.l1 + w.giou * b.giou +
                                   w.ce * b.soft_token).epsilon(1e-12));
  CHECK(b.total >= 0.0);
  CHECK(b.giou >= 0.0);
  CHECK(b.giou <= 2.0);

  // Perfect matched box + saturated logits -> total ~ 0.
  Prediction perfect;
  perfect.boxes = MatXf::Constant(16, 4, 0.5f);
  perfect.logits.resize(16, 2);
  const auto cs = target.to_center_size();
  for (int q = 0; q < 16; ++q) {
    perfect.logits(q, 0) = -30.f;
    perfect.logits(q, 1) = 30.f;
  }
  for (int k = 0; k < 4; ++k) perfect.boxes(2, k) = float(cs[std::size_t(k)]);
  perfect.logits(2, 0) = 30.f;
  perfect.logits(2, 1) = -30.f;
  const LossBreakdown pb = total_loss(perfect, target, w);
  CHECK(pb.matched_query == 2);
  CHECK(pb.total < 1e-6);
}

TEST_CASE("attach_total_loss agrees with the plain evaluation") {
  Rng rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    const Prediction pred = random_prediction(rng);
    const Box target = random_box(rng);
    const LossWeights w;
    const LossBreakdown plain = total_loss(pred, target, w);

    Tape<float> t;
    const int boxes = t.variable(pred.boxes);
    const int logits = t.variable(pred.logits);
    const LossNodes nodes = attach_total_loss(t, boxes, logits, target, w);
    const LossBreakdown graph = breakdown_from_nodes(t, nodes);
    CHECK(graph.matched_query == plain.matched_query);
    CHECK(graph.total == doctest::Approx(plain.total).epsilon(1e-5));
  }
}

TEST_CASE("total_loss gradient passes central finite differences at 1e-4") {
  Rng rng(137);
  for (int trial = 0; trial < 10; ++trial) {
    const Prediction pred = random_prediction(rng);
    const Box target = random_box(rng);
    const LossWeights w;
    const int q = match(pred, target, w).query_for_target.at(0);

    const MatXd boxes0 = pred.boxes.cast<double>();
    const MatXd logits0 = pred.logits.cast<double>();
    // Gradient w.r.t. the box tensor (matched query held fixed, as trained).
    check_input_grad(boxes0, [&](Tape<double>& t, int x) {
      const int logits = t.constant(logits0);
      const LossNodes n = attach_total_loss(t, x, logits, target, w);
      (void)n;
      return n.total;
    }, 1e-5, 1e-4);
    check_input_grad(logits0, [&](Tape<double>& t, int x) {
      const int boxes = t.constant(boxes0);
      const LossNodes n = attach_total_loss(t, boxes, x, target, w);
      return n.total;
    }, 1e-5, 1e-4);
    (void)q;
  }
}

TEST_CASE("dual_loss sums independently matched decoder losses") {
  Rng rng(139);
  const Prediction a = random_prediction(rng);
  const Prediction b = random_prediction(rng);
  const Box target = random_box(rng);
  CHECK(dual_loss(a, a, target) ==
        doctest::Approx(2.0 * total_loss(a, target).total).epsilon(1e-12));
  CHECK(dual_loss(a, b, target) ==
        doctest::Approx(total_loss(a, target).total +
                        total_loss(b, target).total).epsilon(1e-12));
}

TEST_CASE("predict_box selection and tie-breaks") {
  Prediction p;
  p.boxes = MatXf::Constant(4, 4, 0.5f);
  p.logits = MatXf::Zero(4, 2);
  // All equal -> query 0: center-size (.5,.5,.5,.5) -> corners at 0.25/0.75.
  CHECK(predict_box(p).x1 == doctest::Approx(0.25));
  p.boxes(2, 0) = 0.5f;
  p.boxes(2, 1) = 0.5f;
  p.boxes(2, 2) = 0.2f;
  p.boxes(2, 3) = 0.2f;
  p.logits(2, 0) = 10.f;
  p.logits(2, 1) = -10.f;
  const Box b = predict_box(p);
  CHECK(b.x1 == doctest::Approx(0.4));
  CHECK(b.y1 == doctest::Approx(0.4));
  CHECK(b.x2 == doctest::Approx(0.6));
  CHECK(b.y2 == doctest::Approx(0.6));
}

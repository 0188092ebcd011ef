// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "sirilab/losses.hpp"
#include "sirilab/matching.hpp"
#include "sirilab/rng.hpp"

using namespace sirilab;

namespace {

Box random_box(Rng& rng) {
  const double x1 = rng.uniform(0.0, 0.8), y1 = rng.uniform(0.0, 0.8);
  return {x1, y1, x1 + rng.uniform(0.05, 0.2), y1 + rng.uniform(0.05, 0.2)};
}

void BM_Giou(benchmark::State& state) {
  Rng rng(1);
  const Box a = random_box(rng), b = random_box(rng);
  for (auto _ : state) benchmark::DoNotOptimize(giou(a, b));
}
BENCHMARK(BM_Giou);

void BM_GiouWithGrad(benchmark::State& state) {
  Rng rng(2);
  const Box a = random_box(rng), b = random_box(rng);
  for (auto _ : state) benchmark::DoNotOptimize(giou_with_grad(a, b));
}
BENCHMARK(BM_GiouWithGrad);

void BM_MatchSingleTarget(benchmark::State& state) {
  Rng rng(3);
  Prediction pred;
  pred.boxes.resize(16, 4);
  pred.logits.resize(16, 2);
  for (int q = 0; q < 16; ++q) {
    for (int k = 0; k < 4; ++k) pred.boxes(q, k) = float(rng.uniform(0.1, 0.6));
    pred.logits(q, 0) = float(rng.uniform(-2, 2));
    pred.logits(q, 1) = float(rng.uniform(-2, 2));
  }
  const Box target = random_box(rng);
  for (auto _ : state) benchmark::DoNotOptimize(match(pred, target));
}
BENCHMARK(BM_MatchSingleTarget);

void BM_TotalLoss(benchmark::State& state) {
  Rng rng(4);
  Prediction pred;
  pred.boxes.resize(16, 4);
  pred.logits.resize(16, 2);
  for (int q = 0; q < 16; ++q) {
    for (int k = 0; k < 4; ++k) pred.boxes(q, k) = float(rng.uniform(0.1, 0.6));
    pred.logits(q, 0) = float(rng.uniform(-2, 2));
    pred.logits(q, 1) = float(rng.uniform(-2, 2));
  }
  const Box target = random_box(rng);
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(pred, target));
}
BENCHMARK(BM_TotalLoss);

}  // namespace

BENCHMARK_MAIN();

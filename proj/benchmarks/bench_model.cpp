// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "sirilab/losses.hpp"
#include "sirilab/model.hpp"
#include "sirilab/trainer.hpp"

using namespace sirilab;
using model::ModelConfig;

namespace {

ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.embed_dim = 32;
  cfg.encoder_layers = 2;
  cfg.decoder_layers = 2;
  cfg.attention_heads = 4;
  cfg.n_queries = 16;
  cfg.visual_patch = 8;
  cfg.feedforward_dim = 128;
  cfg.vocab_size = synth::Vocabulary::standard().size();
  return cfg;
}

void BM_ForwardPass(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const model::ModelState st = model::init_model(cfg, 1);
  const auto assets = model::ModelAssets<float>::make(cfg, st.buffers);
  const synth::GroundingSample sample = synth::build_sample(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(model::predict(st.params, assets, cfg, sample));
}
BENCHMARK(BM_ForwardPass);

void BM_ForwardBackward(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  model::ModelState st = model::init_model(cfg, 1);
  const auto assets = model::ModelAssets<float>::make(cfg, st.buffers);
  const model::TreeSource source(st.params);
  const synth::GroundingSample sample = synth::build_sample(1);
  Tape<float> tape;
  for (auto _ : state) {
    tape.reset();
    model::Forward<float> fwd(tape, source, cfg, assets);
    const auto outs = fwd.run(sample.image, sample.expression);
    const LossNodes loss = attach_total_loss(tape, outs[0].boxes,
                                             outs[0].logits, sample.target_box,
                                             LossWeights{});
    tape.backward(loss.total);
    benchmark::DoNotOptimize(tape.grad(outs[0].boxes));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_SceneGeneration(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(synth::generate_scene(seed++));
}
BENCHMARK(BM_SceneGeneration);

void BM_RenderScene(benchmark::State& state) {
  const synth::SceneSpec scene = synth::generate_scene(5);
  for (auto _ : state) benchmark::DoNotOptimize(synth::render(scene, 64, 64));
}
BENCHMARK(BM_RenderScene);

}  // namespace

BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "sirilab/engine.hpp"
#include "sirilab/evaluate.hpp"
#include "sirilab/plots.hpp"

using namespace sirilab;
using namespace sirilab::report;

namespace fs = std::filesystem;

namespace {

model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.embed_dim = 16;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.attention_heads = 2;
  cfg.n_queries = 4;
  cfg.visual_patch = 8;
  cfg.feedforward_dim = 32;
  cfg.image_h = cfg.image_w = 32;
  cfg.vocab_size = synth::Vocabulary::standard().size();
  return cfg;
}

PeriodRecord make_record(int period, double prec, int epochs = 3) {
  PeriodRecord r;
  r.period = period;
  r.mode = period == 0 ? "-" : "h";
  r.epochs = epochs;
  for (int e = 0; e < epochs; ++e) {
    LossBreakdown b;
    b.l1 = 0.5 / (1 + e + period);
    b.giou = 0.3;
    b.soft_token = 0.2;
    b.total = 5 * b.l1 + 2 * b.giou + b.soft_token;
    r.train_curve.push_back(b);
  }
  r.val.prec_at_05 = prec;
  r.val.mean_iou = prec * 0.8;
  r.val.n_samples = 10;
  r.checkpoint = "period_" + std::to_string(period);
  return r;
}

}  // namespace

TEST_CASE("prec@0.5 uses the strict greater-than rule") {
  // Hand fixture: IoUs 1.0, 0.6, 0.5, 0.0 -> exactly 0.5.
  const EvalResult r = eval_from_ious({1.0, 0.6, 0.5, 0.0});
  CHECK(r.prec_at_05 == 0.5);
  CHECK(r.n_samples == 4);
  CHECK(r.mean_iou == doctest::Approx(0.525));
}

TEST_CASE("evaluate: order independence and exact recount") {
  const model::ModelConfig cfg = tiny_config();
  const model::ModelState st = model::init_model(cfg, 5);
  synth::DatasetBundle data = synth::build_bundle(900, 4, 12, 4, {}, 32, 32);

  const EvalResult a = evaluate(st.params, st.buffers, cfg, data.val);
  CHECK(a.n_samples == 12);

  // Shuffled dataset -> identical result.
  synth::Dataset shuffled = data.val;
  std::reverse(shuffled.samples.begin(), shuffled.samples.end());
  const EvalResult b = evaluate(st.params, st.buffers, cfg, shuffled);
  CHECK(a.prec_at_05 == b.prec_at_05);
  CHECK(a.mean_iou == doctest::Approx(b.mean_iou).epsilon(1e-12));

  // The streaming aggregate equals a brute-force recount of stored IoUs.
  const auto ious = per_sample_ious(st.params, st.buffers, cfg, data.val);
  int hits = 0;
  for (double v : ious)
    if (v > 0.5) ++hits;
  CHECK(a.prec_at_05 == double(hits) / 12.0);

  // Pure function of (params, dataset).
  const EvalResult c = evaluate(st.params, st.buffers, cfg, data.val);
  CHECK(c.prec_at_05 == a.prec_at_05);
  CHECK(c.mean_iou == a.mean_iou);
}

TEST_CASE("extract_attention: grid shape, range, trained-vs-untrained drift") {
  model::ModelConfig cfg = tiny_config();
  cfg.image_h = cfg.image_w = 64;  // 8x8 grid at the default patch size
  synth::DatasetBundle data = synth::build_bundle(950, 8, 4, 4);
  model::ModelState st = model::init_model(cfg, 7);

  const AttentionMap before =
      extract_attention(st.params, st.buffers, cfg, data.val.samples[0]);
  CHECK(before.grid.rows() == 8);
  CHECK(before.grid.cols() == 8);
  CHECK(before.grid.minCoeff() >= 0.f);
  CHECK(before.grid.maxCoeff() <= 1.f);
  CHECK(before.source_layer == cfg.encoder_layers - 1);
  CHECK(!before.aggregation.empty());

  engine::TrainSettings settings;
  settings.batch_size = 4;
  engine::train_period(st.params, st.buffers, cfg, data.train, settings, 2, 3);
  const AttentionMap after =
      extract_attention(st.params, st.buffers, cfg, data.val.samples[0]);
  CHECK((after.grid - before.grid).cwiseAbs().mean() > 0.f);
}

TEST_CASE("history: round-trip, version field, corrupt line reporting") {
  const std::string path =
      (fs::temp_directory_path() / "sirilab_hist_test.jsonl").string();
  fs::remove(path);
  for (int t = 0; t < 3; ++t) write_history(make_record(t, 0.1 * t), path);

  const RunHistory h = read_history(path);
  REQUIRE(h.records.size() == 3);
  CHECK(h.records[2].period == 2);
  CHECK(h.records[2].val.prec_at_05 == doctest::Approx(0.2));
  CHECK(h.records[1].train_curve.size() == 3);

  // Every line carries the schema version field.
  std::ifstream is(path);
  std::string line;
  while (std::getline(is, line))
    CHECK(line.find("\"v\":") != std::string::npos);
  is.close();

  std::ofstream(path, std::ios::app) << "{not json}\n";
  CHECK_THROWS_WITH_AS(read_history(path), doctest::Contains("line 4"), Error);
  fs::remove(path);
}

TEST_CASE("plots: labelled series, period markers, attention upscale") {
  const std::string dir = (fs::temp_directory_path() / "sirilab_plot_test").string();
  fs::remove_all(dir);
  fs::create_directories(dir + "/run_a");
  fs::create_directories(dir + "/run_b");
  for (int t = 0; t <= 3; ++t) {
    write_history(make_record(t, 0.2 + 0.1 * t), dir + "/run_a/history.jsonl");
    write_history(make_record(t, 0.15 + 0.1 * t), dir + "/run_b/history.jsonl");
  }

  const auto infos = emit_plots(
      {dir + "/run_a/history.jsonl", dir + "/run_b/history.jsonl"},
      dir + "/figs");
  REQUIRE(infos.size() == 3);  // one period curve + two loss curves
  CHECK(infos[0].n_series == 2);
  CHECK(fs::file_size(infos[0].path) > 100);
  // Loss plot shows one vertical marker per retraining period.
  CHECK(infos[1].n_markers == 3);
  CHECK(infos[2].n_markers == 3);

  AttentionMap map;
  map.grid = MatXf::Zero(8, 8);
  map.grid(2, 3) = 1.f;
  const auto att = plot_attention(map, dir + "/att.png", 32);
  CHECK(att.width == 256);
  CHECK(att.height == 256);
  CHECK(fs::file_size(att.path) > 50);

  // Degenerate constant raw maps normalize to all zeros by convention
  // (exercised through extract_attention's normalizer in its own test).
  fs::remove_all(dir);
}

TEST_CASE("emit_plots rejects empty histories") {
  const std::string dir = (fs::temp_directory_path() / "sirilab_plot_err").string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir + "/history.jsonl") << "";
  CHECK_THROWS_AS(emit_plots({dir + "/history.jsonl"}, dir + "/figs"), Error);
  fs::remove_all(dir);
}

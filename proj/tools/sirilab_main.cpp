// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset generation, SiRi runs, the retraining-mode
// ablation, evaluation, attention export and plotting. Results that scripts
// consume are echoed as JSON on standard output.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sirilab/checkpoint.hpp"
#include "sirilab/dataset.hpp"
#include "sirilab/engine.hpp"
#include "sirilab/evaluate.hpp"
#include "sirilab/plots.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sirilab;

namespace {

const synth::Dataset& pick_split(const synth::DatasetBundle& b,
                                 const std::string& split) {
  if (split == "train") return b.train;
  if (split == "val") return b.val;
  if (split == "test") return b.test;
  fail("unknown split: " + split);
}

json eval_to_json(const report::EvalResult& r) {
  return {{"prec_at_05", r.prec_at_05},
          {"mean_iou", r.mean_iou},
          {"n_samples", r.n_samples}};
}

int cmd_generate_data(std::uint64_t seed, int n_train, int n_val, int n_test,
                      const std::string& out, double fraction, int hw,
                      double p_attribute) {
  synth::GenOptions opt;
  opt.p_attribute_route = p_attribute;
  synth::DatasetBundle bundle =
      synth::build_bundle(seed, n_train, n_val, n_test, opt, hw, hw);
  if (fraction < 1.0)
    bundle.train = synth::subsample_fraction(bundle.train, fraction);
  synth::save_dataset(bundle, out);
  json j = {{"out", out},
            {"train", bundle.train.size()},
            {"val", bundle.val.size()},
            {"test", bundle.test.size()},
            {"seed", seed}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_run_siri(const std::string& config_path, const std::string& mode,
                 bool multitask, int periods, const std::string& out,
                 const std::string& data_dir, bool ablation) {
  engine::RunConfig cfg = engine::load_run_config(config_path);
  if (!mode.empty()) cfg.mode = mode.at(0);
  if (multitask) cfg.multitask = true;
  if (periods >= 0) cfg.n_periods = periods;
  if (!out.empty()) cfg.out_dir = out;
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  require(!cfg.data_dir.empty(), "no dataset directory configured");

  const synth::DatasetBundle data = synth::load_dataset(cfg.data_dir);
  if (ablation) {
    const auto result = engine::run_mode_ablation(cfg, data);
    json rows = json::array();
    rows.push_back({{"mode", "initial"}, {"val_prec_at_05", result.initial_prec}});
    for (const auto& [label, prec] : result.prec_by_mode)
      rows.push_back(
          {{"mode", std::string(1, label)}, {"val_prec_at_05", prec}});
    json j = {{"out_dir", cfg.out_dir}, {"table", rows}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  const auto result = cfg.multitask ? engine::run_multitask_siri(cfg, data)
                                    : engine::run_siri(cfg, data);
  json periods_j = json::array();
  for (const auto& r : result.history.records)
    periods_j.push_back({{"period", r.period},
                         {"mode", r.mode},
                         {"val_prec_at_05", r.val.prec_at_05}});
  json j = {{"out_dir", cfg.out_dir},
            {"history", result.history_path},
            {"periods", periods_j}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const std::string& ckpt, const std::string& data_dir,
                 const std::string& split) {
  const auto loaded = model::load_checkpoint(ckpt);
  const synth::DatasetBundle data = synth::load_dataset(data_dir);
  const auto& ds = pick_split(data, split);
  const report::EvalResult r = report::evaluate(
      loaded.state.params, loaded.state.buffers, loaded.meta.config, ds);
  json j = eval_to_json(r);
  j["ckpt"] = ckpt;
  j["split"] = split;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_export_attention(const std::string& ckpt, const std::string& data_dir,
                         const std::string& indices_csv, const std::string& out,
                         const std::string& split, int upscale) {
  const auto loaded = model::load_checkpoint(ckpt);
  const synth::DatasetBundle data = synth::load_dataset(data_dir);
  const auto& ds = pick_split(data, split);
  fs::create_directories(out);

  std::vector<int> indices;
  std::string cur;
  for (char c : indices_csv + ",") {
    if (c == ',') {
      if (!cur.empty()) indices.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  json files = json::array();
  for (int idx : indices) {
    require(idx >= 0 && idx < ds.size(), "sample index out of range");
    const auto map = report::extract_attention(loaded.state.params,
                                               loaded.state.buffers,
                                               loaded.meta.config,
                                               ds.samples[std::size_t(idx)]);
    const std::string path =
        (fs::path(out) / ("attention_" + std::to_string(idx) + ".png")).string();
    const auto info = report::plot_attention(map, path, upscale);
    files.push_back({{"index", idx},
                     {"path", info.path},
                     {"width", info.width},
                     {"height", info.height},
                     {"layer", map.source_layer},
                     {"aggregation", map.aggregation}});
  }
  json j = {{"out", out}, {"maps", files}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<std::string> paths;
  for (const auto& r : runs) {
    fs::path p(r);
    if (fs::is_directory(p)) p /= "history.jsonl";
    paths.push_back(p.string());
  }
  const auto infos = report::emit_plots(paths, out);
  json j = json::array();
  for (const auto& i : infos)
    j.push_back({{"path", i.path},
                 {"width", i.width},
                 {"height", i.height},
                 {"n_series", i.n_series},
                 {"n_markers", i.n_markers}});
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic visual-grounding lab with selective retraining"};
  app.require_subcommand(1);

  // generate-data
  std::uint64_t seed = 0;
  int n_train = 2000, n_val = 500, n_test = 500, hw = 64;
  double fraction = 1.0, p_attribute = 0.5;
  std::string out_dir;
  auto* gen = app.add_subcommand("generate-data",
                                 "Generate a synthetic grounding dataset");
  gen->add_option("--seed", seed, "Base seed");
  gen->add_option("--train", n_train, "Training samples");
  gen->add_option("--val", n_val, "Validation samples");
  gen->add_option("--test", n_test, "Test samples");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--fraction", fraction, "Keep this fraction of train");
  gen->add_option("--size", hw, "Image side length");
  gen->add_option("--p-attribute", p_attribute,
                  "Attribute vs. relation clause ratio");

  // run-siri / run-mode-ablation
  std::string config_path, mode_override, data_override, run_out;
  bool multitask = false;
  int periods = -1;
  auto* run = app.add_subcommand("run-siri", "Run the selective-retraining loop");
  run->add_option("--config", config_path, "Run config JSON")->required();
  run->add_option("--mode", mode_override, "Retrain mode a..h");
  run->add_flag("--multitask", multitask, "Dual-decoder multi-task variant");
  run->add_option("--periods", periods, "Number of retraining periods");
  run->add_option("--out", run_out, "Output run directory");
  run->add_option("--data", data_override, "Dataset directory");

  std::string abl_config, abl_out, abl_data;
  auto* abl = app.add_subcommand("run-mode-ablation",
                                 "One retraining period per mode a..h");
  abl->add_option("--config", abl_config, "Run config JSON")->required();
  abl->add_option("--out", abl_out, "Output directory");
  abl->add_option("--data", abl_data, "Dataset directory");

  // evaluate
  std::string ckpt, eval_data, split = "val";
  auto* ev = app.add_subcommand("evaluate", "Prec@0.5 of a checkpoint");
  ev->add_option("--ckpt", ckpt, "Checkpoint directory")->required();
  ev->add_option("--data", eval_data, "Dataset directory")->required();
  ev->add_option("--split", split, "train/val/test");

  // export-attention
  std::string att_ckpt, att_data, att_indices = "0", att_out, att_split = "val";
  int upscale = 32;
  auto* att = app.add_subcommand("export-attention",
                                 "Cross-modal attention heat images");
  att->add_option("--ckpt", att_ckpt, "Checkpoint directory")->required();
  att->add_option("--data", att_data, "Dataset directory")->required();
  att->add_option("--indices", att_indices, "Comma-separated sample indices");
  att->add_option("--out", att_out, "Output directory")->required();
  att->add_option("--split", att_split, "train/val/test");
  att->add_option("--upscale", upscale, "Integer upscale of the grid");

  // plot
  std::vector<std::string> plot_runs;
  std::string plot_out;
  auto* pl = app.add_subcommand("plot", "Period curves and loss curves");
  pl->add_option("--runs", plot_runs, "Run directories or history files")
      ->required()
      ->expected(-1);
  pl->add_option("--out", plot_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate_data(seed, n_train, n_val, n_test, out_dir, fraction,
                               hw, p_attribute);
    if (run->parsed())
      return cmd_run_siri(config_path, mode_override, multitask, periods,
                          run_out, data_override, false);
    if (abl->parsed())
      return cmd_run_siri(abl_config, "", false, -1, abl_out, abl_data, true);
    if (ev->parsed()) return cmd_evaluate(ckpt, eval_data, split);
    if (att->parsed())
      return cmd_export_attention(att_ckpt, att_data, att_indices, att_out,
                                  att_split, upscale);
    if (pl->parsed()) return cmd_plot(plot_runs, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

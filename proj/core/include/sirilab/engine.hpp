// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sirilab/checkpoint.hpp"
#include "sirilab/history.hpp"
#include "sirilab/retrain.hpp"
#include "sirilab/trainer.hpp"

namespace sirilab::engine {

struct RunConfig {
  model::ModelConfig model;
  // Schedule. The learning rate lives in `train` and is held constant for
  // the whole run, initial training and every retraining period alike.
  int initial_epochs = 60;
  int retrain_epochs = 30;
  int n_periods = 5;
  std::uint64_t base_seed = 1;
  TrainSettings train;
  // > 0 enables the optional early stop: halt when val Prec@0.5 improves by
  // less than this over each of the last two periods.
  double plateau_eps = 0.0;
  char mode = 'h';
  bool multitask = false;
  std::string query_pair = "LC";  // multitask decoder query kinds
  int retain_decoder = 0;         // decoder kept in the exported checkpoint
  DecoderReinit decoder_reinit = DecoderReinit::fresh;
  std::string data_dir;
  double train_fraction = 1.0;
  std::string out_dir;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

struct RunResult {
  report::RunHistory history;
  model::ModelState final_state;      // exported (single-decoder) state
  model::ModelConfig final_config;
  std::string history_path;
};

// Decoder query kinds implied by the config ("LC" -> learnable + constant).
std::vector<queries::QueryKind> decoder_kinds(const RunConfig& cfg);

// The full selective-retraining loop: init, snapshot, initial training,
// n_periods of (re-init via the mode plan, fresh optimizer, retrain, eval).
// Per-period checkpoints land under <out_dir>/period_<t>/, records are
// appended to <out_dir>/history.jsonl, and the final model (last period,
// auxiliary decoder dropped) is exported to <out_dir>/final/.
RunResult run_siri(const RunConfig& cfg, const synth::DatasetBundle& data);

// run_siri with the dual-decoder model (sets multitask).
RunResult run_multitask_siri(RunConfig cfg, const synth::DatasetBundle& data);

struct ModeAblationResult {
  double initial_prec = 0.0;
  std::map<char, double> prec_by_mode;
};

// One retraining period per mode, all branches starting from one shared
// initial-trained checkpoint with identical hyperparameters. Each branch
// writes its own history under <out_dir>/mode_<label>/.
ModeAblationResult run_mode_ablation(const RunConfig& cfg,
                                     const synth::DatasetBundle& data);

// Drops every decoder but `retain` and renames it to dec0, yielding a
// single-decoder checkpoint whose forward pass is bit-identical to the
// retained decoder inside the dual model.
std::pair<model::ModelState, model::ModelConfig> export_single_decoder(
    const model::ModelState& state, const model::ModelConfig& cfg, int retain);

}  // namespace sirilab::engine

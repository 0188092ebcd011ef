// SPDX-License-Identifier: Apache-2.0
#include "sirilab/engine.hpp"

#include <filesystem>
#include <fstream>

#include "internal_json.hpp"
#include "sirilab/evaluate.hpp"
#include "sirilab/rng.hpp"

namespace sirilab::engine {

namespace fs = std::filesystem;
using nlohmann::json;
using model::ModelState;
using model::Role;

std::vector<queries::QueryKind> decoder_kinds(const RunConfig& cfg) {
  if (!cfg.multitask) return {queries::QueryKind::learnable};
  require(cfg.query_pair.size() == 2, "query_pair must have two letters");
  std::vector<queries::QueryKind> kinds;
  for (char c : cfg.query_pair)
    kinds.push_back(queries::query_kind_from_string(std::string(1, c)));
  return kinds;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "load_run_config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    fail("load_run_config: bad JSON in " + path + ": " + e.what());
  }
  RunConfig cfg;
  if (j.contains("model")) cfg.model = model::config_from_json(j.at("model"));
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    cfg.initial_epochs = s.value("initial_epochs", cfg.initial_epochs);
    cfg.retrain_epochs = s.value("retrain_epochs", cfg.retrain_epochs);
    cfg.n_periods = s.value("n_periods", cfg.n_periods);
    cfg.base_seed = s.value("base_seed", cfg.base_seed);
    cfg.train.batch_size = s.value("batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = s.value("learning_rate", cfg.train.learning_rate);
    cfg.train.weight_decay = s.value("weight_decay", cfg.train.weight_decay);
    cfg.plateau_eps = s.value("plateau_eps", cfg.plateau_eps);
  }
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    cfg.train.loss.l1 = l.value("l1", cfg.train.loss.l1);
    cfg.train.loss.giou = l.value("giou", cfg.train.loss.giou);
    cfg.train.loss.ce = l.value("ce", cfg.train.loss.ce);
    cfg.train.loss.w_eos = l.value("w_eos", cfg.train.loss.w_eos);
  }
  cfg.mode = j.value("mode", std::string(1, cfg.mode)).at(0);
  cfg.multitask = j.value("multitask", cfg.multitask);
  cfg.query_pair = j.value("query_pair", cfg.query_pair);
  cfg.retain_decoder = j.value("retain_decoder", cfg.retain_decoder);
  if (j.contains("reinit"))
    cfg.decoder_reinit = decoder_reinit_from_string(
        j.at("reinit").value("decoder", to_string(cfg.decoder_reinit)));
  if (j.contains("data")) {
    cfg.data_dir = j.at("data").value("dir", cfg.data_dir);
    cfg.train_fraction = j.at("data").value("train_fraction", cfg.train_fraction);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  json j;
  j["model"] = model::config_to_json(cfg.model);
  j["schedule"] = {{"initial_epochs", cfg.initial_epochs},
                   {"retrain_epochs", cfg.retrain_epochs},
                   {"n_periods", cfg.n_periods},
                   {"base_seed", cfg.base_seed},
                   {"batch_size", cfg.train.batch_size},
                   {"learning_rate", cfg.train.learning_rate},
                   {"weight_decay", cfg.train.weight_decay},
                   {"plateau_eps", cfg.plateau_eps}};
  j["loss"] = {{"l1", cfg.train.loss.l1},
               {"giou", cfg.train.loss.giou},
               {"ce", cfg.train.loss.ce},
               {"w_eos", cfg.train.loss.w_eos}};
  j["mode"] = std::string(1, cfg.mode);
  j["multitask"] = cfg.multitask;
  j["query_pair"] = cfg.query_pair;
  j["retain_decoder"] = cfg.retain_decoder;
  j["reinit"] = {{"decoder", to_string(cfg.decoder_reinit)}};
  j["data"] = {{"dir", cfg.data_dir}, {"train_fraction", cfg.train_fraction}};
  j["out_dir"] = cfg.out_dir;
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream os(path);
  require(bool(os), "save_run_config: cannot write " + path);
  os << j.dump(2) << "\n";
}

std::pair<ModelState, model::ModelConfig> export_single_decoder(
    const ModelState& state, const model::ModelConfig& cfg, int retain) {
  require(retain >= 0 && retain < cfg.n_decoders(),
          "export_single_decoder: bad decoder index");
  model::ModelConfig out_cfg = cfg;
  out_cfg.decoders = {cfg.decoders[std::size_t(retain)]};

  const std::string keep_prefix = "D.dec" + std::to_string(retain) + ".";
  ModelState out;
  for (const auto& ps : model::canonical_params(out_cfg)) {
    const int i = out.params.add(ps.name, ps.rows, ps.cols);
    std::string src = ps.name;
    if (src.rfind("D.dec0.", 0) == 0)
      src = keep_prefix + src.substr(std::string("D.dec0.").size());
    out.params.entries()[std::size_t(i)].value = state.params.at(src);
  }
  const auto it = state.buffers.find("Q.constant.dec" + std::to_string(retain));
  if (it != state.buffers.end()) out.buffers["Q.constant.dec0"] = it->second;
  return {std::move(out), std::move(out_cfg)};
}

namespace {

struct RunContext {
  RunConfig cfg;
  synth::Dataset train;
  const synth::Dataset* val = nullptr;
  std::uint64_t init_seed = 0;
};

RunContext make_context(const RunConfig& cfg_in,
                        const synth::DatasetBundle& data) {
  RunContext ctx;
  ctx.cfg = cfg_in;
  ctx.cfg.model.vocab_size = data.vocab.size();
  ctx.cfg.model.image_h = data.train.image_h;
  ctx.cfg.model.image_w = data.train.image_w;
  ctx.cfg.model.decoders = decoder_kinds(ctx.cfg);
  ctx.cfg.model.validate();
  require(!ctx.cfg.out_dir.empty(), "run: out_dir not set");
  ctx.train = ctx.cfg.train_fraction < 1.0
                  ? synth::subsample_fraction(data.train, ctx.cfg.train_fraction)
                  : data.train;
  ctx.val = &data.val;
  ctx.init_seed = hash_str(ctx.cfg.base_seed, "init");
  return ctx;
}

std::uint64_t shuffle_seed(const RunConfig& cfg, int period) {
  return hash_combine(hash_str(cfg.base_seed, "shuffle"), std::uint64_t(period));
}

report::PeriodRecord run_one_period(RunContext& ctx, ModelState& state,
                                    int period, const std::string& mode_str,
                                    int epochs, const std::string& out_dir,
                                    std::uint64_t init_seed) {
  report::PeriodRecord rec;
  rec.period = period;
  rec.mode = mode_str;
  rec.epochs = epochs;
  rec.train_seed = shuffle_seed(ctx.cfg, period);
  rec.train_curve =
      train_period(state.params, state.buffers, ctx.cfg.model, ctx.train,
                   ctx.cfg.train, epochs, rec.train_seed);
  rec.val = report::evaluate(state.params, state.buffers, ctx.cfg.model,
                             *ctx.val, ctx.cfg.retain_decoder);
  rec.checkpoint = "period_" + std::to_string(period);
  model::CheckpointMeta meta;
  meta.config = ctx.cfg.model;
  meta.round = period;
  meta.init_seed = init_seed;
  model::save_checkpoint((fs::path(out_dir) / rec.checkpoint).string(), state,
                         meta);
  report::write_history(rec, (fs::path(out_dir) / "history.jsonl").string());
  return rec;
}

}  // namespace

RunResult run_siri(const RunConfig& cfg_in, const synth::DatasetBundle& data) {
  RunContext ctx = make_context(cfg_in, data);
  const RetrainMode mode = RetrainMode::from_label(ctx.cfg.mode);
  fs::create_directories(ctx.cfg.out_dir);
  {
    // history.jsonl is append-only; a rerun into the same directory starts
    // over rather than appending to a stale file.
    std::error_code ec;
    fs::remove(fs::path(ctx.cfg.out_dir) / "history.jsonl", ec);
  }

  ModelState state = model::init_model(ctx.cfg.model, ctx.init_seed);
  const InitSnapshot snap = snapshot_init(state.params, ctx.init_seed);

  RunResult result;
  result.history_path =
      (fs::path(ctx.cfg.out_dir) / "history.jsonl").string();

  result.history.records.push_back(
      run_one_period(ctx, state, 0, "-", ctx.cfg.initial_epochs,
                     ctx.cfg.out_dir, ctx.init_seed));

  for (int t = 1; t <= ctx.cfg.n_periods; ++t) {
    state.params =
        apply_retrain_plan(state.params, snap, mode, t, ctx.cfg.base_seed,
                           ctx.cfg.model, ctx.cfg.decoder_reinit);
    result.history.records.push_back(
        run_one_period(ctx, state, t, std::string(1, mode.label),
                       ctx.cfg.retrain_epochs, ctx.cfg.out_dir, ctx.init_seed));
    if (ctx.cfg.plateau_eps > 0.0 && t >= 2) {
      const auto& r = result.history.records;
      const double i1 = r[r.size() - 1].val.prec_at_05 -
                        r[r.size() - 2].val.prec_at_05;
      const double i2 = r[r.size() - 2].val.prec_at_05 -
                        r[r.size() - 3].val.prec_at_05;
      if (i1 < ctx.cfg.plateau_eps && i2 < ctx.cfg.plateau_eps) break;
    }
  }

  // Final artifact: the last period's model, auxiliary decoder dropped.
  auto [final_state, final_cfg] =
      export_single_decoder(state, ctx.cfg.model, ctx.cfg.retain_decoder);
  model::CheckpointMeta meta;
  meta.config = final_cfg;
  meta.round = result.history.records.back().period;
  meta.init_seed = ctx.init_seed;
  model::save_checkpoint((fs::path(ctx.cfg.out_dir) / "final").string(),
                         final_state, meta);
  result.final_state = std::move(final_state);
  result.final_config = std::move(final_cfg);
  return result;
}

RunResult run_multitask_siri(RunConfig cfg, const synth::DatasetBundle& data) {
  cfg.multitask = true;
  return run_siri(cfg, data);
}

ModeAblationResult run_mode_ablation(const RunConfig& cfg_in,
                                     const synth::DatasetBundle& data) {
  RunContext ctx = make_context(cfg_in, data);
  fs::create_directories(ctx.cfg.out_dir);

  ModelState initial = model::init_model(ctx.cfg.model, ctx.init_seed);
  const InitSnapshot snap = snapshot_init(initial.params, ctx.init_seed);

  RunContext ctx0 = ctx;
  ctx0.cfg.out_dir = (fs::path(ctx.cfg.out_dir) / "initial").string();
  fs::create_directories(ctx0.cfg.out_dir);
  {
    std::error_code ec;
    fs::remove(fs::path(ctx0.cfg.out_dir) / "history.jsonl", ec);
  }
  const report::PeriodRecord rec0 =
      run_one_period(ctx0, initial, 0, "-", ctx.cfg.initial_epochs,
                     ctx0.cfg.out_dir, ctx.init_seed);

  ModeAblationResult result;
  result.initial_prec = rec0.val.prec_at_05;

  // Every branch retrains from the same initial-trained model with the same
  // hyperparameters (and the same shuffle stream).
  for (char label : RetrainMode::labels()) {
    const RetrainMode mode = RetrainMode::from_label(label);
    ModelState branch;
    branch.params = apply_retrain_plan(initial.params, snap, mode, 1,
                                       ctx.cfg.base_seed, ctx.cfg.model,
                                       ctx.cfg.decoder_reinit);
    branch.buffers = initial.buffers;
    RunContext bctx = ctx;
    bctx.cfg.out_dir =
        (fs::path(ctx.cfg.out_dir) / (std::string("mode_") + label)).string();
    fs::create_directories(bctx.cfg.out_dir);
    {
      std::error_code ec;
      fs::remove(fs::path(bctx.cfg.out_dir) / "history.jsonl", ec);
    }
    const report::PeriodRecord rec =
        run_one_period(bctx, branch, 1, std::string(1, label),
                       ctx.cfg.retrain_epochs, bctx.cfg.out_dir, ctx.init_seed);
    result.prec_by_mode[label] = rec.val.prec_at_05;
  }
  return result;
}

}  // namespace sirilab::engine

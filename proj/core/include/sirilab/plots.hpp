// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sirilab/evaluate.hpp"
#include "sirilab/history.hpp"

namespace sirilab::report {

struct PlotInfo {
  std::string path;
  int width = 0, height = 0;
  int n_series = 0;
  int n_markers = 0;  // vertical period boundaries on the loss plot
};

// Val Prec@0.5 vs. period, one labelled series per run.
PlotInfo plot_period_curve(
    const std::vector<std::pair<std::string, RunHistory>>& runs,
    const std::string& path);

// Per-epoch training loss across the whole run, with a vertical marker at
// the start of every retraining period.
PlotInfo plot_loss_curve(const RunHistory& history, const std::string& path);

// Heat image of an attention map, nearest-neighbour upscaled.
PlotInfo plot_attention(const AttentionMap& map, const std::string& path,
                        int upscale = 32);

// Reads history files (series labelled by their run directory name) and
// writes the period-curve and per-run loss-curve images into out_dir.
std::vector<PlotInfo> emit_plots(const std::vector<std::string>& history_paths,
                                 const std::string& out_dir);

}  // namespace sirilab::report

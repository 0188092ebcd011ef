// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sirilab/evaluate.hpp"
#include "sirilab/losses.hpp"

namespace sirilab::report {

// One record per training period, appended to <run>/history.jsonl.
struct PeriodRecord {
  int period = 0;                         // 0 = initial training
  std::string mode = "-";                 // retrain mode for periods >= 1
  int epochs = 0;
  std::vector<LossBreakdown> train_curve; // per-epoch means
  EvalResult val;
  std::string checkpoint;                 // relative reference, e.g. "period_0"
  std::uint64_t train_seed = 0;
};

struct RunHistory {
  std::vector<PeriodRecord> records;
};

// Append-only JSON-lines writer; every line carries a schema version field
// "v". Reads return records in write order and report corrupt lines by
// number.
void write_history(const PeriodRecord& record, const std::string& path);
RunHistory read_history(const std::string& path);

}  // namespace sirilab::report

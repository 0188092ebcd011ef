// SPDX-License-Identifier: Apache-2.0
#include "sirilab/history.hpp"

#include <filesystem>
#include <fstream>

#include "internal_json.hpp"

namespace sirilab::report {

using nlohmann::json;

inline constexpr int kHistoryVersion = 1;

void write_history(const PeriodRecord& r, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::app);
  require(bool(os), "write_history: cannot open " + path);
  json j;
  j["v"] = kHistoryVersion;
  j["period"] = r.period;
  j["mode"] = r.mode;
  j["epochs"] = r.epochs;
  json curve = json::array();
  for (const auto& b : r.train_curve)
    curve.push_back(model::breakdown_to_json(b));
  j["train_curve"] = curve;
  j["val"] = {{"prec_at_05", r.val.prec_at_05},
              {"mean_iou", r.val.mean_iou},
              {"n_samples", r.val.n_samples}};
  j["checkpoint"] = r.checkpoint;
  j["train_seed"] = r.train_seed;
  os << j.dump() << "\n";
}

RunHistory read_history(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "read_history: cannot open " + path);
  RunHistory h;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      PeriodRecord r;
      const int v = j.at("v").get<int>();
      require(v == kHistoryVersion, "unsupported history version");
      r.period = j.at("period").get<int>();
      r.mode = j.at("mode").get<std::string>();
      r.epochs = j.at("epochs").get<int>();
      for (const auto& b : j.at("train_curve"))
        r.train_curve.push_back(model::breakdown_from_json(b));
      r.val.prec_at_05 = j.at("val").at("prec_at_05").get<double>();
      r.val.mean_iou = j.at("val").at("mean_iou").get<double>();
      r.val.n_samples = j.at("val").at("n_samples").get<int>();
      r.checkpoint = j.at("checkpoint").get<std::string>();
      r.train_seed = j.at("train_seed").get<std::uint64_t>();
      h.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      fail("read_history: corrupt record at line " + std::to_string(line_no) +
           " of " + path + ": " + e.what());
    }
  }
  return h;
}

}  // namespace sirilab::report

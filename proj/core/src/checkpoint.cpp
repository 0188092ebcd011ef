// SPDX-License-Identifier: Apache-2.0
#include "sirilab/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "internal_json.hpp"

namespace sirilab::model {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

namespace {

void write_tensor(std::ostream& os, const MatXf& m) {
  // Row-major, little-endian float32.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v = m(r, c);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      unsigned char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char*>(b), 4);
    }
}

void read_tensor(std::istream& is, MatXf& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      unsigned char b[4];
      is.read(reinterpret_cast<char*>(b), 4);
      std::uint32_t u = 0;
      for (int i = 0; i < 4; ++i) u |= std::uint32_t(b[i]) << (8 * i);
      float v;
      std::memcpy(&v, &u, 4);
      m(r, c) = v;
    }
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelState& state,
                     const CheckpointMeta& meta) {
  fs::create_directories(dir);

  json manifest = json::array();
  for (const auto& e : state.params.entries())
    manifest.push_back({{"name", e.name},
                        {"rows", e.value.rows()},
                        {"cols", e.value.cols()},
                        {"role", to_string(e.role)}});
  for (const auto& [name, m] : state.buffers)
    manifest.push_back(
        {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"role", "Q"}});

  json meta_j;
  meta_j["version"] = kCheckpointVersion;
  meta_j["config"] = config_to_json(meta.config);
  meta_j["round"] = meta.round;
  meta_j["init_seed"] = meta.init_seed;
  meta_j["manifest"] = manifest;
  {
    std::ofstream mf(fs::path(dir) / "meta.json");
    require(bool(mf), "save_checkpoint: cannot write meta.json in " + dir);
    mf << meta_j.dump(2) << "\n";
  }

  std::ofstream pf(fs::path(dir) / "params.bin", std::ios::binary);
  require(bool(pf), "save_checkpoint: cannot write params.bin in " + dir);
  for (const auto& e : state.params.entries()) write_tensor(pf, e.value);
  for (const auto& [name, m] : state.buffers) write_tensor(pf, m);
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  require(bool(mf), "load_checkpoint: missing meta.json in " + dir);
  json meta_j;
  try {
    mf >> meta_j;
  } catch (const json::exception& e) {
    fail("load_checkpoint: corrupt meta.json: " + std::string(e.what()));
  }
  const int version = meta_j.at("version").get<int>();
  require(version == kCheckpointVersion,
          "load_checkpoint: unsupported version " + std::to_string(version));

  LoadedCheckpoint out;
  out.meta.config = config_from_json(meta_j.at("config"));
  out.meta.round = meta_j.at("round").get<int>();
  out.meta.init_seed = meta_j.at("init_seed").get<std::uint64_t>();

  std::ifstream pf(fs::path(dir) / "params.bin", std::ios::binary);
  require(bool(pf), "load_checkpoint: missing params.bin in " + dir);
  for (const auto& item : meta_j.at("manifest")) {
    const std::string name = item.at("name").get<std::string>();
    const int rows = item.at("rows").get<int>();
    const int cols = item.at("cols").get<int>();
    const std::string role = item.at("role").get<std::string>();
    if (role == "Q") {
      MatXf m(rows, cols);
      read_tensor(pf, m);
      out.state.buffers[name] = std::move(m);
    } else {
      const int i = out.state.params.add(name, rows, cols);
      read_tensor(pf, out.state.params.entries()[std::size_t(i)].value);
    }
    require(bool(pf), "load_checkpoint: truncated params.bin at " + name);
  }
  return out;
}

}  // namespace sirilab::model

// SPDX-License-Identifier: Apache-2.0
#include "sirilab/dataset.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sirilab/rng.hpp"

namespace sirilab::synth {

namespace fs = std::filesystem;
using nlohmann::json;

GroundingSample build_sample(std::uint64_t seed, const GenOptions& opt, int h,
                             int w) {
  constexpr int kResampleBudget = 16;
  std::string last_err;
  for (int attempt = 0; attempt < kResampleBudget; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : hash_combine(seed, std::uint64_t(attempt));
    try {
      SceneSpec scene = generate_scene(s, opt);
      GroundingSample sample;
      sample.expression = realize_expression(scene, opt);
      require(int(sample.expression.size()) <= kMaxExprLen,
              "build_sample: expression too long");
      sample.target_box = shape_bbox(
          scene.objects[std::size_t(scene.target_index)]);
      sample.image = render(scene, h, w);
      sample.scene = std::move(scene);
      return sample;
    } catch (const Error& e) {
      last_err = e.what();
    }
  }
  fail("build_sample: persistent generation failure for seed " +
       std::to_string(seed) + " (" + last_err + ")");
}

Dataset build_split(std::uint64_t seed, int n, const GenOptions& opt, int h,
                    int w, const std::string& name) {
  require(n >= 1, "build_split: n must be >= 1");
  Dataset d;
  d.name = name;
  d.base_seed = seed;
  d.image_h = h;
  d.image_w = w;
  d.samples.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i)
    d.samples.push_back(build_sample(seed + std::uint64_t(i), opt, h, w));
  return d;
}

Dataset subsample_fraction(const Dataset& d, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0,
          "subsample_fraction: fraction must be in (0, 1]");
  Dataset out;
  out.name = d.name;
  out.base_seed = d.base_seed;
  out.image_h = d.image_h;
  out.image_w = d.image_w;
  const int keep = std::max(1, int(std::lround(fraction * d.size())));
  out.samples.assign(d.samples.begin(), d.samples.begin() + keep);
  return out;
}

DatasetBundle build_bundle(std::uint64_t seed, int n_train, int n_val,
                           int n_test, const GenOptions& opt, int h, int w) {
  DatasetBundle b;
  b.train = build_split(seed, n_train, opt, h, w, "train");
  b.val = build_split(seed + std::uint64_t(n_train), n_val, opt, h, w, "val");
  b.test = build_split(seed + std::uint64_t(n_train) + std::uint64_t(n_val),
                       n_test, opt, h, w, "test");
  return b;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return std::uint16_t(b[0] | (std::uint16_t(b[1]) << 8));
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

float get_f32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= std::uint32_t(b[i]) << (8 * i);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

json scene_to_json(const SceneSpec& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    objs.push_back({{"kind", to_string(o.kind)},
                    {"color", to_string(o.color)},
                    {"size", to_string(o.size)},
                    {"cx", o.cx},
                    {"cy", o.cy},
                    {"r", o.radius}});
  }
  return json{{"seed", s.rng_seed}, {"target", s.target_index}, {"objects", objs}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.rng_seed = j.at("seed").get<std::uint64_t>();
  s.target_index = j.at("target").get<int>();
  for (const auto& o : j.at("objects")) {
    ShapeInstance si;
    si.kind = kind_from_string(o.at("kind").get<std::string>());
    si.color = color_from_string(o.at("color").get<std::string>());
    si.size = size_from_string(o.at("size").get<std::string>());
    si.cx = o.at("cx").get<double>();
    si.cy = o.at("cy").get<double>();
    si.radius = o.at("r").get<double>();
    s.objects.push_back(si);
  }
  return s;
}

void write_record(std::ostream& rec, const GroundingSample& s) {
  require(int(s.expression.size()) <= kMaxExprLen, "record: expression too long");
  put_u16(rec, std::uint16_t(s.expression.size()));
  for (int i = 0; i < kMaxExprLen; ++i) {
    const int id = i < int(s.expression.size()) ? s.expression[std::size_t(i)] : 0;
    put_u16(rec, std::uint16_t(id));
  }
  put_f32(rec, float(s.target_box.x1));
  put_f32(rec, float(s.target_box.y1));
  put_f32(rec, float(s.target_box.x2));
  put_f32(rec, float(s.target_box.y2));
}

}  // namespace

void save_dataset(const DatasetBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  const Dataset* splits[3] = {&bundle.train, &bundle.val, &bundle.test};

  json manifest;
  manifest["version"] = kDatasetVersion;
  manifest["vocabulary"] = {{"version", bundle.vocab.version()},
                            {"tokens", bundle.vocab.tokens()}};
  manifest["image"] = {{"h", bundle.train.image_h}, {"w", bundle.train.image_w}};
  manifest["max_expr_len"] = kMaxExprLen;
  json counts, seeds;
  for (const Dataset* d : splits) {
    counts[d->name] = d->size();
    seeds[d->name] = d->base_seed;
  }
  manifest["counts"] = counts;
  manifest["seed_ranges"] = seeds;
  {
    std::ofstream mf(fs::path(dir) / "manifest.json");
    require(bool(mf), "save_dataset: cannot write manifest in " + dir);
    mf << manifest.dump(2) << "\n";
  }

  std::ofstream rec(fs::path(dir) / "records.bin", std::ios::binary);
  std::ofstream scenes(fs::path(dir) / "scenes.jsonl");
  require(bool(rec) && bool(scenes), "save_dataset: cannot open output files");
  for (const Dataset* d : splits) {
    for (const GroundingSample& s : d->samples) {
      write_record(rec, s);
      scenes << scene_to_json(s.scene).dump() << "\n";
    }
  }
}

DatasetBundle load_dataset(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  require(bool(mf), "load_dataset: missing manifest.json in " + dir);
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    fail("load_dataset: corrupt manifest.json: " + std::string(e.what()));
  }
  const int version = manifest.at("version").get<int>();
  require(version == kDatasetVersion,
          "load_dataset: unsupported dataset version " + std::to_string(version) +
              " (expected " + std::to_string(kDatasetVersion) + ")");

  DatasetBundle b;
  b.vocab = Vocabulary(
      manifest.at("vocabulary").at("version").get<std::string>(),
      manifest.at("vocabulary").at("tokens").get<std::vector<std::string>>());
  const int h = manifest.at("image").at("h").get<int>();
  const int w = manifest.at("image").at("w").get<int>();

  std::ifstream rec(fs::path(dir) / "records.bin", std::ios::binary);
  std::ifstream scenes(fs::path(dir) / "scenes.jsonl");
  require(bool(rec) && bool(scenes), "load_dataset: missing records/scenes");

  Dataset* splits[3] = {&b.train, &b.val, &b.test};
  const char* names[3] = {"train", "val", "test"};
  int line_no = 0;
  for (int si = 0; si < 3; ++si) {
    Dataset& d = *splits[si];
    d.name = names[si];
    d.image_h = h;
    d.image_w = w;
    d.base_seed =
        manifest.at("seed_ranges").at(names[si]).get<std::uint64_t>();
    const int count = manifest.at("counts").at(names[si]).get<int>();
    d.samples.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
      GroundingSample s;
      const int len = get_u16(rec);
      require(len <= kMaxExprLen, "load_dataset: bad expression length");
      for (int k = 0; k < kMaxExprLen; ++k) {
        const int id = get_u16(rec);
        if (k < len) s.expression.push_back(id);
      }
      s.target_box.x1 = get_f32(rec);
      s.target_box.y1 = get_f32(rec);
      s.target_box.x2 = get_f32(rec);
      s.target_box.y2 = get_f32(rec);
      require(bool(rec), "load_dataset: truncated records.bin");

      std::string line;
      ++line_no;
      require(bool(std::getline(scenes, line)),
              "load_dataset: scenes.jsonl truncated at line " +
                  std::to_string(line_no));
      try {
        s.scene = scene_from_json(json::parse(line));
      } catch (const json::exception& e) {
        fail("load_dataset: corrupt scene at line " + std::to_string(line_no) +
             ": " + e.what());
      }
      s.image = render(s.scene, h, w);
      d.samples.push_back(std::move(s));
    }
  }
  return b;
}

bool dataset_equal(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    const auto& x = a.samples[std::size_t(i)];
    const auto& y = b.samples[std::size_t(i)];
    if (x.expression != y.expression) return false;
    if (float(x.target_box.x1) != float(y.target_box.x1) ||
        float(x.target_box.y1) != float(y.target_box.y1) ||
        float(x.target_box.x2) != float(y.target_box.x2) ||
        float(x.target_box.y2) != float(y.target_box.y2))
      return false;
    if (!(x.scene == y.scene)) return false;
  }
  return true;
}

}  // namespace sirilab::synth

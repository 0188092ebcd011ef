// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sirilab/box.hpp"
#include "sirilab/render.hpp"
#include "sirilab/scene.hpp"
#include "sirilab/vocab.hpp"

namespace sirilab::synth {

inline constexpr int kMaxExprLen = 16;
inline constexpr int kDatasetVersion = 1;

struct GroundingSample {
  Image image;
  std::vector<int> expression;  // token ids, length <= kMaxExprLen, no pads
  Box target_box;               // tight bbox of the referred object
  SceneSpec scene;
};

struct Dataset {
  std::string name;  // "train" / "val" / "test"
  std::uint64_t base_seed = 0;
  int image_h = 64, image_w = 64;
  std::vector<GroundingSample> samples;

  int size() const { return int(samples.size()); }
};

// n samples from base seeds seed..seed+n-1. A seed whose scene or expression
// generation fails is resampled with derived sub-seeds; a seed that keeps
// failing raises an Error naming it.
Dataset build_split(std::uint64_t seed, int n, const GenOptions& opt = {},
                    int h = 64, int w = 64, const std::string& name = "");

// One sample for one base seed (the unit build_split iterates).
GroundingSample build_sample(std::uint64_t seed, const GenOptions& opt = {},
                             int h = 64, int w = 64);

// Prefix of the split in seed order, round(F * n) samples. F in (0, 1].
Dataset subsample_fraction(const Dataset& d, double fraction);

struct DatasetBundle {
  Dataset train, val, test;
  Vocabulary vocab = Vocabulary::standard();
};

// Generates train/val/test from disjoint base-seed ranges starting at seed.
DatasetBundle build_bundle(std::uint64_t seed, int n_train, int n_val,
                           int n_test, const GenOptions& opt = {}, int h = 64,
                           int w = 64);

// Container layout: manifest.json + records.bin (little-endian fixed-layout
// token ids / boxes) + scenes.jsonl (scene metadata, one JSON per line).
// Images are not stored; load re-renders them from the scenes.
void save_dataset(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_dataset(const std::string& dir);

// Equality over the serialized content (tokens, boxes, scenes).
bool dataset_equal(const Dataset& a, const Dataset& b);

}  // namespace sirilab::synth

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "sirilab/scene.hpp"

namespace sirilab::synth {

// H x W x 3 image, values in [0,1], row-major with interleaved channels.
struct Image {
  int h = 0, w = 0;
  std::vector<float> data;

  float& at(int y, int x, int c) {
    return data[std::size_t(y * w + x) * 3 + std::size_t(c)];
  }
  float at(int y, int x, int c) const {
    return data[std::size_t(y * w + x) * 3 + std::size_t(c)];
  }
};

std::array<float, 3> color_rgb(Color c);

// Hard-edged rasterization on a constant 0.5 gray background; objects are
// painted in scene order (later objects on top). Pixel centers are sampled
// at ((x+0.5)/W, (y+0.5)/H). Deterministic.
Image render(const SceneSpec& scene, int h = 64, int w = 64);

bool covers(const ShapeInstance& s, double px, double py);

}  // namespace sirilab::synth

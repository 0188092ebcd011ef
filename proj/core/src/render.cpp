// SPDX-License-Identifier: Apache-2.0
#include "sirilab/render.hpp"

#include <cmath>

namespace sirilab::synth {

std::array<float, 3> color_rgb(Color c) {
  switch (c) {
    case Color::red: return {0.85f, 0.10f, 0.10f};
    case Color::green: return {0.10f, 0.70f, 0.20f};
    case Color::blue: return {0.15f, 0.25f, 0.90f};
    case Color::yellow: return {0.95f, 0.85f, 0.10f};
  }
  return {0.f, 0.f, 0.f};
}

namespace {

double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

}  // namespace

bool covers(const ShapeInstance& s, double px, double py) {
  const double dx = px - s.cx, dy = py - s.cy;
  switch (s.kind) {
    case Kind::circle:
      return dx * dx + dy * dy <= s.radius * s.radius;
    case Kind::square: {
      const double h = s.radius / std::sqrt(2.0);
      return std::abs(dx) <= h && std::abs(dy) <= h;
    }
    case Kind::triangle: {
      // Apex up in image coordinates (y grows downward).
      const double ax = s.cx, ay = s.cy - s.radius;
      const double hx = s.radius * std::sqrt(3.0) / 2.0;
      const double bx = s.cx + hx, by = s.cy + s.radius / 2.0;
      const double cx = s.cx - hx, cy = s.cy + s.radius / 2.0;
      const double d1 = cross(ax, ay, bx, by, px, py);
      const double d2 = cross(bx, by, cx, cy, px, py);
      const double d3 = cross(cx, cy, ax, ay, px, py);
      const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
      const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
      return !(has_neg && has_pos);
    }
  }
  return false;
}

Image render(const SceneSpec& scene, int h, int w) {
  require(h >= 32 && w >= 32, "render: image must be at least 32x32");
  Image img;
  img.h = h;
  img.w = w;
  img.data.assign(std::size_t(h) * w * 3, 0.5f);
  for (const ShapeInstance& s : scene.objects) {
    const auto rgb = color_rgb(s.color);
    const Box bb = shape_bbox(s);
    const int y0 = std::max(0, int(std::floor(bb.y1 * h)) - 1);
    const int y1 = std::min(h - 1, int(std::ceil(bb.y2 * h)) + 1);
    const int x0 = std::max(0, int(std::floor(bb.x1 * w)) - 1);
    const int x1 = std::min(w - 1, int(std::ceil(bb.x2 * w)) + 1);
    for (int y = y0; y <= y1; ++y) {
      const double py = (y + 0.5) / h;
      for (int x = x0; x <= x1; ++x) {
        const double px = (x + 0.5) / w;
        if (covers(s, px, py)) {
          img.at(y, x, 0) = rgb[0];
          img.at(y, x, 1) = rgb[1];
          img.at(y, x, 2) = rgb[2];
        }
      }
    }
  }
  return img;
}

}  // namespace sirilab::synth

// SPDX-License-Identifier: Apache-2.0
#include "sirilab/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sirilab/png.hpp"

namespace sirilab::report {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  unsigned char r, g, b;
};

constexpr Rgb kBackground{255, 255, 255};
constexpr Rgb kAxis{60, 60, 60};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kMarker{160, 160, 160};

const Rgb kPalette[] = {
    {31, 119, 180}, {214, 39, 40},  {44, 160, 44},  {255, 127, 14},
    {148, 103, 189}, {23, 190, 207}, {140, 86, 75},  {227, 119, 194},
};

// 5x7 bitmap font; 7 rows of 5 bits, MSB on the left.
struct Glyph {
  char c;
  unsigned char rows[7];
};

const Glyph kFont[] = {
    {' ', {0, 0, 0, 0, 0, 0, 0}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
    {'@', {0x0E, 0x11, 0x17, 0x15, 0x17, 0x10, 0x0E}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
};

const unsigned char* glyph_rows(char c) {
  if (c >= 'a' && c <= 'z') c = char(c - 'a' + 'A');
  for (const Glyph& g : kFont)
    if (g.c == c) return g.rows;
  return kFont[0].rows;  // unknown -> blank
}

struct Raster {
  int w, h;
  std::vector<unsigned char> rgb;

  Raster(int w_, int h_) : w(w_), h(h_) {
    rgb.assign(std::size_t(w) * h * 3, 255);
  }
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (std::size_t(y) * w + std::size_t(x)) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }
  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) hline(x0, x1, y, c);
  }
  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const unsigned char* rows = glyph_rows(ch);
      for (int ry = 0; ry < 7; ++ry)
        for (int rx = 0; rx < 5; ++rx)
          if (rows[ry] & (1 << (4 - rx))) set(x + rx, y + ry, c);
      x += 6;
    }
  }
  void save(const std::string& path) const { write_png(path, w, h, rgb); }
};

std::string fmt(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct Axes {
  int x0, y0, x1, y1;  // plot rectangle, y0 = top
  double xmin, xmax, ymin, ymax;

  int px(double x) const {
    if (xmax <= xmin) return x0;
    return x0 + int(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0)));
  }
  int py(double y) const {
    if (ymax <= ymin) return y1;
    return y1 - int(std::lround((y - ymin) / (ymax - ymin) * (y1 - y0)));
  }
};

void draw_axes(Raster& img, const Axes& ax, const std::string& xlabel,
               const std::string& ylabel) {
  for (int i = 0; i <= 4; ++i) {
    const double fy = ax.ymin + (ax.ymax - ax.ymin) * i / 4.0;
    const int y = ax.py(fy);
    img.hline(ax.x0, ax.x1, y, kGrid);
    img.text(4, y - 3, fmt(fy), kAxis);
  }
  for (int i = 0; i <= 4; ++i) {
    const double fx = ax.xmin + (ax.xmax - ax.xmin) * i / 4.0;
    const int x = ax.px(fx);
    img.vline(x, ax.y1, ax.y1 + 3, kAxis);
    img.text(x - 8, ax.y1 + 6, fmt(fx, ax.xmax - ax.xmin > 8 ? 0 : 1), kAxis);
  }
  img.hline(ax.x0, ax.x1, ax.y1, kAxis);
  img.vline(ax.x0, ax.y0, ax.y1, kAxis);
  img.text(ax.x1 - 6 * int(xlabel.size()), ax.y1 + 16, xlabel, kAxis);
  img.text(ax.x0 + 4, ax.y0 - 12, ylabel, kAxis);
}

}  // namespace

PlotInfo plot_period_curve(
    const std::vector<std::pair<std::string, RunHistory>>& runs,
    const std::string& path) {
  require(!runs.empty(), "plot_period_curve: no runs");
  int max_period = 1;
  for (const auto& [label, h] : runs) {
    require(!h.records.empty(), "plot_period_curve: empty history");
    max_period = std::max(max_period, h.records.back().period);
  }
  Raster img(640, 420);
  Axes ax{56, 28, 616, 376, 0.0, double(max_period), 0.0, 1.0};
  draw_axes(img, ax, "PERIOD", "VAL PREC@0.5");
  PlotInfo info{path, img.w, img.h, int(runs.size()), 0};
  int si = 0;
  for (const auto& [label, h] : runs) {
    const Rgb c = kPalette[std::size_t(si) % std::size(kPalette)];
    int lx = -1, ly = -1;
    for (const auto& r : h.records) {
      const int x = ax.px(double(r.period)), y = ax.py(r.val.prec_at_05);
      if (lx >= 0) img.line(lx, ly, x, y, c);
      img.fill_rect(x - 1, y - 1, x + 1, y + 1, c);
      lx = x;
      ly = y;
    }
    img.fill_rect(460, 36 + 12 * si, 468, 42 + 12 * si, c);
    img.text(474, 36 + 12 * si, label, kAxis);
    ++si;
  }
  img.save(path);
  return info;
}

PlotInfo plot_loss_curve(const RunHistory& history, const std::string& path) {
  require(!history.records.empty(), "plot_loss_curve: empty history");
  std::vector<double> losses;
  std::vector<int> boundaries;  // epoch index where each retrain period starts
  for (const auto& r : history.records) {
    if (r.period > 0) boundaries.push_back(int(losses.size()));
    for (const auto& b : r.train_curve) losses.push_back(b.total);
  }
  require(!losses.empty(), "plot_loss_curve: no train curve data");
  double lo = losses[0], hi = losses[0];
  for (double v : losses) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;

  Raster img(640, 420);
  Axes ax{56, 28, 616, 376, 0.0, double(std::max<std::size_t>(losses.size() - 1, 1)),
          lo, hi};
  draw_axes(img, ax, "EPOCH", "TRAIN LOSS");
  for (int b : boundaries) {
    const int x = ax.px(double(b));
    for (int y = ax.y0; y <= ax.y1; y += 4) img.vline(x, y, y + 1, kMarker);
  }
  const Rgb c = kPalette[0];
  for (std::size_t i = 1; i < losses.size(); ++i)
    img.line(ax.px(double(i - 1)), ax.py(losses[i - 1]), ax.px(double(i)),
             ax.py(losses[i]), c);
  img.save(path);
  return {path, img.w, img.h, 1, int(boundaries.size())};
}

PlotInfo plot_attention(const AttentionMap& map, const std::string& path,
                        int upscale) {
  require(map.grid.size() > 0, "plot_attention: empty map");
  require(upscale >= 1, "plot_attention: bad upscale");
  const int gh = int(map.grid.rows()), gw = int(map.grid.cols());
  const int w = gw * upscale, h = gh * upscale;
  std::vector<unsigned char> rgb(std::size_t(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = map.grid(y / upscale, x / upscale);
      // Dark blue -> warm yellow ramp.
      const auto lerp = [v](float a, float b) {
        return static_cast<unsigned char>(std::lround(a + (b - a) * v));
      };
      const std::size_t i = (std::size_t(y) * w + std::size_t(x)) * 3;
      rgb[i] = lerp(15, 252);
      rgb[i + 1] = lerp(18, 210);
      rgb[i + 2] = lerp(80, 40);
    }
  write_png(path, w, h, rgb);
  return {path, w, h, 1, 0};
}

std::vector<PlotInfo> emit_plots(const std::vector<std::string>& history_paths,
                                 const std::string& out_dir) {
  require(!history_paths.empty(), "emit_plots: no histories");
  fs::create_directories(out_dir);
  std::vector<std::pair<std::string, RunHistory>> runs;
  for (const auto& p : history_paths) {
    const RunHistory h = read_history(p);
    require(!h.records.empty(), "emit_plots: empty history " + p);
    std::string label = fs::path(p).parent_path().filename().string();
    if (label.empty()) label = "run" + std::to_string(runs.size());
    runs.emplace_back(label, h);
  }
  std::vector<PlotInfo> out;
  out.push_back(plot_period_curve(
      runs, (fs::path(out_dir) / "period_curve.png").string()));
  for (const auto& [label, h] : runs)
    out.push_back(plot_loss_curve(
        h, (fs::path(out_dir) / ("loss_" + label + ".png")).string()));
  return out;
}

}  // namespace sirilab::report

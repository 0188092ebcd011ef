// SPDX-License-Identifier: Apache-2.0
#include "sirilab/scene.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "sirilab/rng.hpp"

namespace sirilab::synth {

const char* to_string(Kind k) {
  switch (k) {
    case Kind::circle: return "circle";
    case Kind::square: return "square";
    case Kind::triangle: return "triangle";
  }
  return "?";
}
const char* to_string(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
  }
  return "?";
}
const char* to_string(Size s) { return s == Size::small ? "small" : "large"; }

Kind kind_from_string(const std::string& s) {
  if (s == "circle") return Kind::circle;
  if (s == "square") return Kind::square;
  if (s == "triangle") return Kind::triangle;
  fail("unknown kind: " + s);
}
Color color_from_string(const std::string& s) {
  if (s == "red") return Color::red;
  if (s == "green") return Color::green;
  if (s == "blue") return Color::blue;
  if (s == "yellow") return Color::yellow;
  fail("unknown color: " + s);
}
Size size_from_string(const std::string& s) {
  if (s == "small") return Size::small;
  if (s == "large") return Size::large;
  fail("unknown size: " + s);
}

Box shape_bbox(const ShapeInstance& s) {
  switch (s.kind) {
    case Kind::circle:
      return {s.cx - s.radius, s.cy - s.radius, s.cx + s.radius,
              s.cy + s.radius};
    case Kind::square: {
      const double h = s.radius / std::sqrt(2.0);  // inscribed in the disc
      return {s.cx - h, s.cy - h, s.cx + h, s.cy + h};
    }
    case Kind::triangle: {
      // Equilateral, apex up (y grows downward), circumradius r.
      const double hx = s.radius * std::sqrt(3.0) / 2.0;
      return {s.cx - hx, s.cy - s.radius, s.cx + hx, s.cy + s.radius / 2.0};
    }
  }
  fail("shape_bbox: bad kind");
}

bool operator==(const ShapeInstance& a, const ShapeInstance& b) {
  return a.kind == b.kind && a.color == b.color && a.size == b.size &&
         a.cx == b.cx && a.cy == b.cy && a.radius == b.radius;
}
bool operator==(const SceneSpec& a, const SceneSpec& b) {
  return a.objects == b.objects && a.target_index == b.target_index &&
         a.rng_seed == b.rng_seed;
}

// ---------------------------------------------------------------------------
// Generation

SceneSpec generate_scene(std::uint64_t seed, const GenOptions& opt) {
  Rng rng(hash_combine(seed, 0x5CE9Eull));
  SceneSpec scene;
  scene.rng_seed = seed;

  const int n = int(rng.uniform_int(opt.min_objects, opt.max_objects));
  scene.target_index = int(rng.uniform_int(0, n - 1));

  std::vector<ShapeInstance> objs(static_cast<std::size_t>(n));
  for (auto& o : objs) {
    o.kind = Kind(rng.uniform_int(0, 2));
    o.color = Color(rng.uniform_int(0, 3));
    o.size = Size(rng.uniform_int(0, 1));
  }

  // Dataset property: the target usually has a same-kind distractor, and at
  // least two objects always share a kind.
  if (rng.bernoulli(opt.p_same_kind_distractor)) {
    int j = int(rng.uniform_int(0, n - 2));
    if (j >= scene.target_index) ++j;
    objs[std::size_t(j)].kind = objs[std::size_t(scene.target_index)].kind;
  } else {
    bool any_pair = false;
    for (int i = 0; i < n && !any_pair; ++i)
      for (int j = i + 1; j < n; ++j)
        if (objs[std::size_t(i)].kind == objs[std::size_t(j)].kind) {
          any_pair = true;
          break;
        }
    if (!any_pair) {
      // Force a pair among the distractors.
      std::vector<int> others;
      for (int i = 0; i < n; ++i)
        if (i != scene.target_index) others.push_back(i);
      const int a = others[std::size_t(rng.uniform_int(0, int(others.size()) - 1))];
      int b = a;
      while (b == a)
        b = others[std::size_t(rng.uniform_int(0, int(others.size()) - 1))];
      objs[std::size_t(b)].kind = objs[std::size_t(a)].kind;
    }
  }

  for (auto& o : objs) {
    o.radius = o.size == Size::small
                   ? rng.uniform(opt.small_radius_lo, opt.small_radius_hi)
                   : rng.uniform(opt.large_radius_lo, opt.large_radius_hi);
  }

  // Dart-throwing placement with per-object retry budget.
  for (int i = 0; i < n; ++i) {
    ShapeInstance& o = objs[std::size_t(i)];
    bool placed = false;
    for (int attempt = 0; attempt < opt.place_retries && !placed; ++attempt) {
      o.cx = rng.uniform(o.radius, 1.0 - o.radius);
      o.cy = rng.uniform(o.radius, 1.0 - o.radius);
      placed = true;
      for (int j = 0; j < i; ++j) {
        const ShapeInstance& p = objs[std::size_t(j)];
        const double need =
            opt.separation_factor * std::max(o.radius, p.radius);
        const double dx = o.cx - p.cx, dy = o.cy - p.cy;
        if (dx * dx + dy * dy < need * need) {
          placed = false;
          break;
        }
      }
    }
    if (!placed)
      fail("generate_scene: placement retry budget exhausted for seed " +
           std::to_string(seed));
  }

  scene.objects = std::move(objs);
  return scene;
}

// ---------------------------------------------------------------------------
// Oracle resolver

namespace {

struct Clause {
  int sup = -1;    // 0 leftmost, 1 rightmost, 2 topmost, 3 bottommost
  int size = -1;   // Size enum value
  int color = -1;  // Color enum value
  int kind = -1;   // Kind enum value
  bool empty() const { return sup < 0 && size < 0 && color < 0 && kind < 0; }
};

struct TokenInfo {
  enum Cat { kThe, kSup, kSize, kColor, kKind, kRel, kOther } cat = kOther;
  int value = -1;
};

TokenInfo classify(const std::string& w) {
  static const char* sups[] = {"leftmost", "rightmost", "topmost", "bottommost"};
  static const char* rels[] = {"left-of", "right-of", "above", "below"};
  if (w == "the") return {TokenInfo::kThe, 0};
  for (int i = 0; i < 4; ++i)
    if (w == sups[i]) return {TokenInfo::kSup, i};
  if (w == "small") return {TokenInfo::kSize, int(Size::small)};
  if (w == "large") return {TokenInfo::kSize, int(Size::large)};
  for (int i = 0; i < 4; ++i)
    if (w == to_string(Color(i))) return {TokenInfo::kColor, i};
  for (int i = 0; i < 3; ++i)
    if (w == to_string(Kind(i))) return {TokenInfo::kKind, i};
  for (int i = 0; i < 4; ++i)
    if (w == rels[i]) return {TokenInfo::kRel, i};
  return {TokenInfo::kOther, -1};
}

// clause := [the] [superlative] [size] [color] [kind], each slot at most once.
Clause parse_clause(const std::vector<TokenInfo>& toks, std::size_t& pos) {
  Clause c;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kThe) ++pos;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kSup) c.sup = toks[pos++].value;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kSize) c.size = toks[pos++].value;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kColor) c.color = toks[pos++].value;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kKind) c.kind = toks[pos++].value;
  return c;
}

std::vector<int> attr_filter(const Clause& c, const std::vector<ShapeInstance>& objs) {
  std::vector<int> out;
  for (int i = 0; i < int(objs.size()); ++i) {
    const ShapeInstance& o = objs[std::size_t(i)];
    if (c.size >= 0 && int(o.size) != c.size) continue;
    if (c.color >= 0 && int(o.color) != c.color) continue;
    if (c.kind >= 0 && int(o.kind) != c.kind) continue;
    out.push_back(i);
  }
  return out;
}

double sup_coord(const ShapeInstance& o, int sup) {
  return (sup == 0 || sup == 1) ? o.cx : o.cy;
}

std::vector<int> sup_reduce(int sup, const std::vector<int>& cand,
                            const std::vector<ShapeInstance>& objs) {
  if (sup < 0 || cand.empty()) return cand;
  const bool want_min = (sup == 0 || sup == 2);  // leftmost / topmost
  double best = sup_coord(objs[std::size_t(cand[0])], sup);
  for (int i : cand) {
    const double v = sup_coord(objs[std::size_t(i)], sup);
    best = want_min ? std::min(best, v) : std::max(best, v);
  }
  std::vector<int> out;
  for (int i : cand)
    if (sup_coord(objs[std::size_t(i)], sup) == best) out.push_back(i);
  return out;
}

bool relates(const ShapeInstance& a, const ShapeInstance& b, int rel) {
  switch (rel) {
    case 0: return a.cx < b.cx;  // left-of
    case 1: return a.cx > b.cx;  // right-of
    case 2: return a.cy < b.cy;  // above (y grows downward)
    case 3: return a.cy > b.cy;  // below
  }
  return false;
}

}  // namespace

std::vector<int> resolve_expression(const SceneSpec& scene,
                                    const std::vector<int>& tokens,
                                    const Vocabulary& vocab) {
  std::vector<TokenInfo> toks;
  toks.reserve(tokens.size());
  for (int id : tokens) {
    require(id >= 0 && id < vocab.size(),
            "resolve_expression: token id out of vocabulary");
    if (id == Vocabulary::kPadId) continue;  // pads carry no content
    const TokenInfo ti = classify(vocab.word(id));
    require(ti.cat != TokenInfo::kOther,
            "resolve_expression: token '" + vocab.word(id) + "' has no clause role");
    toks.push_back(ti);
  }

  std::size_t pos = 0;
  const Clause c1 = parse_clause(toks, pos);
  int rel = -1;
  Clause c2;
  if (pos < toks.size() && toks[pos].cat == TokenInfo::kRel) {
    rel = toks[pos++].value;
    c2 = parse_clause(toks, pos);
  }
  require(pos == toks.size(), "resolve_expression: unparseable clause");

  const auto& objs = scene.objects;
  std::vector<int> cand = attr_filter(c1, objs);
  if (rel >= 0) {
    std::vector<int> refs = sup_reduce(c2.sup, attr_filter(c2, objs), objs);
    std::vector<int> kept;
    for (int i : cand) {
      bool ok = false;
      for (int j : refs) {
        if (j == i) continue;
        ok = true;
        if (!relates(objs[std::size_t(i)], objs[std::size_t(j)], rel)) {
          ok = false;
          break;
        }
      }
      if (ok) kept.push_back(i);
    }
    cand = std::move(kept);
  }
  return sup_reduce(c1.sup, cand, objs);
}

// ---------------------------------------------------------------------------
// Expression realization

namespace {

using Words = std::vector<std::string>;

bool resolves_to(const SceneSpec& scene, const Words& words, int idx,
                 const Vocabulary& vocab) {
  const auto r = resolve_expression(scene, vocab.encode(words), vocab);
  return r.size() == 1 && r[0] == idx;
}

// Attribute-only descriptions, shortest first.
std::vector<Words> attr_descriptions(const ShapeInstance& o) {
  const std::string k = to_string(o.kind), c = to_string(o.color),
                    s = to_string(o.size);
  return {{k}, {c, k}, {s, k}, {s, c, k}};
}

}  // namespace

std::vector<int> realize_expression(const SceneSpec& scene,
                                    const GenOptions& opt,
                                    const Vocabulary& vocab) {
  require(scene.target_index >= 0 &&
              scene.target_index < int(scene.objects.size()),
          "realize_expression: invalid target index");
  Rng rng(hash_combine(scene.rng_seed, 0xE59Full));
  const int tgt = scene.target_index;
  const ShapeInstance& t = scene.objects[std::size_t(tgt)];

  auto try_attribute = [&]() -> std::optional<Words> {
    for (const Words& d : attr_descriptions(t)) {
      Words w = {"the"};
      w.insert(w.end(), d.begin(), d.end());
      if (resolves_to(scene, w, tgt, vocab)) return w;
    }
    return std::nullopt;
  };

  auto try_relation = [&]() -> std::optional<Words> {
    static const char* sups[] = {"leftmost", "rightmost", "topmost", "bottommost"};
    static const char* rels[] = {"left-of", "right-of", "above", "below"};
    std::vector<int> sup_order = {0, 1, 2, 3};
    rng.shuffle(sup_order);
    const Words tgt_descs[] = {{to_string(t.kind)},
                               {to_string(t.color), to_string(t.kind)}};
    for (int s : sup_order) {
      for (const Words& d : tgt_descs) {
        Words w = {"the", sups[s]};
        w.insert(w.end(), d.begin(), d.end());
        if (resolves_to(scene, w, tgt, vocab)) return w;
      }
    }
    std::vector<int> rel_order = {0, 1, 2, 3};
    rng.shuffle(rel_order);
    std::vector<int> others;
    for (int i = 0; i < int(scene.objects.size()); ++i)
      if (i != tgt) others.push_back(i);
    rng.shuffle(others);
    for (int r : rel_order) {
      for (int oi : others) {
        const ShapeInstance& o = scene.objects[std::size_t(oi)];
        // Reference must itself be uniquely describable.
        std::optional<Words> ref;
        for (const Words& d : attr_descriptions(o)) {
          if (resolves_to(scene, d, oi, vocab)) {
            ref = d;
            break;
          }
        }
        if (!ref) {
          for (int s = 0; s < 4 && !ref; ++s) {
            Words d = {sups[s], to_string(o.kind)};
            if (resolves_to(scene, d, oi, vocab)) ref = d;
          }
        }
        if (!ref) continue;
        for (const Words& d : tgt_descs) {
          Words w = {"the"};
          w.insert(w.end(), d.begin(), d.end());
          w.push_back(rels[r]);
          w.push_back("the");
          w.insert(w.end(), ref->begin(), ref->end());
          if (resolves_to(scene, w, tgt, vocab)) return w;
        }
      }
    }
    return std::nullopt;
  };

  std::optional<Words> words;
  if (rng.bernoulli(opt.p_attribute_route)) {
    words = try_attribute();
    if (!words) words = try_relation();
  } else {
    words = try_relation();
    if (!words) words = try_attribute();
  }
  if (!words)
    fail("realize_expression: no unique description for seed " +
         std::to_string(scene.rng_seed));
  return vocab.encode(*words);
}

}  // namespace sirilab::synth

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sirilab/box.hpp"
#include "sirilab/common.hpp"
#include "sirilab/vocab.hpp"

namespace sirilab::synth {

enum class Kind { circle, square, triangle };
enum class Color { red, green, blue, yellow };
enum class Size { small, large };

const char* to_string(Kind k);
const char* to_string(Color c);
const char* to_string(Size s);
Kind kind_from_string(const std::string& s);
Color color_from_string(const std::string& s);
Size size_from_string(const std::string& s);

struct ShapeInstance {
  Kind kind = Kind::circle;
  Color color = Color::red;
  Size size = Size::small;
  double cx = 0.5, cy = 0.5;  // normalized center, y grows downward
  double radius = 0.1;        // circumradius; the shape fits in this disc
};

// Tight axis-aligned bounding box of the shape, normalized corner form.
Box shape_bbox(const ShapeInstance& s);

struct SceneSpec {
  std::vector<ShapeInstance> objects;  // 3..6
  int target_index = 0;
  std::uint64_t rng_seed = 0;
};

struct GenOptions {
  int min_objects = 3;
  int max_objects = 6;
  double small_radius_lo = 0.055, small_radius_hi = 0.075;
  double large_radius_lo = 0.100, large_radius_hi = 0.140;
  // Generator-side center separation, as a multiple of the larger radius.
  // Kept above the 1.5x invariant so generated scenes hold it with margin.
  double separation_factor = 2.0;
  int place_retries = 400;
  // Probability that the target shares its kind with a distractor.
  double p_same_kind_distractor = 0.75;
  // Probability of preferring an attribute clause over a relation clause.
  double p_attribute_route = 0.5;
};

// Deterministic scene construction: a pure function of the seed.
// Guarantees: all shapes fully inside the unit image, pairwise separation,
// at least two objects of the same kind, valid target index. Throws Error
// naming the seed when the placement retry budget is exhausted.
SceneSpec generate_scene(std::uint64_t seed, const GenOptions& opt = {});

// Ground-truth oracle. Returns all object indices consistent with every
// clause of the expression; empty expression -> all indices. Relation
// semantics are defined on object centers with strict inequalities; a
// candidate must relate to every object matched by the reference clause.
// Throws Error on unparseable input.
std::vector<int> resolve_expression(const SceneSpec& scene,
                                    const std::vector<int>& tokens,
                                    const Vocabulary& vocab = Vocabulary::standard());

// Emits a templated expression whose oracle resolution is exactly
// {scene.target_index}. Throws Error when no unique description exists
// under the template grammar (caller resamples the scene).
std::vector<int> realize_expression(const SceneSpec& scene,
                                    const GenOptions& opt = {},
                                    const Vocabulary& vocab = Vocabulary::standard());

bool operator==(const ShapeInstance& a, const ShapeInstance& b);
bool operator==(const SceneSpec& a, const SceneSpec& b);

}  // namespace sirilab::synth

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "sirilab/common.hpp"
#include "sirilab/rng.hpp"

namespace sirilab::queries {

enum class QueryKind { learnable, constant };

QueryKind query_kind_from_string(const std::string& s);
std::string to_string(QueryKind k);

struct QuerySpec {
  QueryKind kind = QueryKind::learnable;
  int n = 16;
  int dim = 64;
};

struct ConstantQueryGrid {
  MatXd points;     // n x 2, strictly inside (0,1)^2
  MatXd encodings;  // n x dim, bounded in [-1, 1]
};

// n must be a perfect square. Returns the sqrt(n) x sqrt(n) interior grid
//   P = (k1 / (sqrt(n)+1), k2 / (sqrt(n)+1)),  k1, k2 in {1..sqrt(n)},
// enumerated row-major in (k1, k2).
MatXd grid_points(int n);

// Sine-cosine encoding of n points (n x 2) into n x c. Each coordinate gets
// c/2 dims: pairs (sin(p / 10000^(2i/c')), cos(p / 10000^(2i/c'))) with
// c' = c/2; the x encoding occupies the first half, y the second.
// c must be divisible by 4.
MatXd sinusoidal_encode(const MatXd& points, int c);

ConstantQueryGrid make_constant_grid(int n, int dim);

struct QueryTensor {
  MatXf values;  // n x dim
  bool trainable = false;
};

// learnable -> Xavier draw seeded by `seed` (trainable, owned by role D);
// constant -> sinusoidal grid encodings, frozen, independent of `seed`.
QueryTensor make_queries(const QuerySpec& spec, std::uint64_t seed);

// Returns k >= 0 with k*k == n, or -1.
int exact_sqrt(int n);

}  // namespace sirilab::queries

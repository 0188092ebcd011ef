// SPDX-License-Identifier: Apache-2.0
#include "sirilab/query_bank.hpp"

#include <cmath>

namespace sirilab::queries {

QueryKind query_kind_from_string(const std::string& s) {
  if (s == "learnable" || s == "L") return QueryKind::learnable;
  if (s == "constant" || s == "C") return QueryKind::constant;
  fail("unknown query kind: " + s);
}

std::string to_string(QueryKind k) {
  return k == QueryKind::learnable ? "learnable" : "constant";
}

int exact_sqrt(int n) {
  if (n < 0) return -1;
  const int r = int(std::lround(std::sqrt(double(n))));
  return r * r == n ? r : -1;
}

MatXd grid_points(int n) {
  const int root = exact_sqrt(n);
  require(root > 0, "grid_points: n must be a positive perfect square, got " +
                        std::to_string(n));
  MatXd p(n, 2);
  const double denom = double(root) + 1.0;
  int k = 0;
  for (int k1 = 1; k1 <= root; ++k1) {
    for (int k2 = 1; k2 <= root; ++k2, ++k) {
      p(k, 0) = double(k1) / denom;
      p(k, 1) = double(k2) / denom;
    }
  }
  return p;
}

MatXd sinusoidal_encode(const MatXd& points, int c) {
  require(points.cols() == 2, "sinusoidal_encode: points must be n x 2");
  require(c > 0 && c % 4 == 0,
          "sinusoidal_encode: dim must be divisible by 4, got " +
              std::to_string(c));
  const int half = c / 2;  // dims per coordinate
  MatXd enc(points.rows(), c);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (int coord = 0; coord < 2; ++coord) {
      const double p = points(r, coord);
      for (int i = 0; i < half / 2; ++i) {
        const double freq = std::pow(10000.0, 2.0 * double(i) / double(half));
        enc(r, coord * half + 2 * i) = std::sin(p / freq);
        enc(r, coord * half + 2 * i + 1) = std::cos(p / freq);
      }
    }
  }
  return enc;
}

ConstantQueryGrid make_constant_grid(int n, int dim) {
  ConstantQueryGrid g;
  g.points = grid_points(n);
  g.encodings = sinusoidal_encode(g.points, dim);
  return g;
}

QueryTensor make_queries(const QuerySpec& spec, std::uint64_t seed) {
  QueryTensor out;
  if (spec.kind == QueryKind::constant) {
    out.values = make_constant_grid(spec.n, spec.dim).encodings.cast<float>();
    out.trainable = false;
  } else {
    out.values.resize(spec.n, spec.dim);
    Rng rng(hash_str(seed, "queries"));
    fill_xavier(out.values, spec.n, spec.dim, rng);
    out.trainable = true;
  }
  return out;
}

}  // namespace sirilab::queries

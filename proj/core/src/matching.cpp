// SPDX-License-Identifier: Apache-2.0
#include "sirilab/matching.hpp"

#include <cmath>
#include <limits>

namespace sirilab {

std::vector<int> hungarian(const MatXd& cost) {
  const int n = int(cost.rows());
  const int m = int(cost.cols());
  require(n <= m, "hungarian: more rows than columns");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      require(std::isfinite(cost(i, j)), "hungarian: non-finite cost");

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual row/column 0.
  std::vector<double> u(std::size_t(n) + 1, 0.0), v(std::size_t(m) + 1, 0.0);
  std::vector<int> p(std::size_t(m) + 1, 0), way(std::size_t(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(std::size_t(m) + 1, inf);
    std::vector<char> used(std::size_t(m) + 1, 0);
    do {
      used[std::size_t(j0)] = 1;
      const int i0 = p[std::size_t(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[std::size_t(j)]) continue;
        const double cur =
            cost(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
        if (cur < minv[std::size_t(j)]) {
          minv[std::size_t(j)] = cur;
          way[std::size_t(j)] = j0;
        }
        if (minv[std::size_t(j)] < delta) {  // strict: first minimum wins
          delta = minv[std::size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      const int j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(std::size_t(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[std::size_t(j)] != 0) row_to_col[std::size_t(p[std::size_t(j)]) - 1] = j - 1;
  return row_to_col;
}

double match_cost(const Prediction& pred, int q, const Box& target,
                  const LossWeights& w) {
  const auto t_cs = target.to_center_size();
  double l1 = 0.0;
  for (int k = 0; k < 4; ++k)
    l1 += std::abs(double(pred.boxes(q, k)) - t_cs[std::size_t(k)]);
  const BoxF bf = pred.box_corners(q);
  const Box b{double(bf.x1), double(bf.y1), double(bf.x2), double(bf.y2)};
  const double g = giou(b, target);
  return w.l1 * l1 + w.giou * (1.0 - g) + w.ce * (-pred.prob_belongs(q));
}

MatchResult match_multi(const Prediction& pred, const std::vector<Box>& targets,
                        const LossWeights& w) {
  const int n = int(targets.size());
  const int m = pred.n_queries();
  require(n >= 1, "match: need at least one target");
  require(n <= m, "match: more targets than queries");
  MatXd cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < m; ++q)
      cost(i, q) = match_cost(pred, q, targets[std::size_t(i)], w);

  MatchResult r;
  r.query_for_target = hungarian(cost);
  r.pair_cost.resize(std::size_t(n));
  for (int i = 0; i < n; ++i)
    r.pair_cost[std::size_t(i)] = cost(i, r.query_for_target[std::size_t(i)]);
  return r;
}

MatchResult match(const Prediction& pred, const Box& target,
                  const LossWeights& w) {
  return match_multi(pred, {target}, w);
}

}  // namespace sirilab

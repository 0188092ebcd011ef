// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <doctest.h>

#include <functional>

#include "sirilab/rng.hpp"
#include "sirilab/tape.hpp"

namespace sirilab::testutil {

inline MatXd random_mat(int rows, int cols, Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  MatXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

// Central-difference check of d(loss)/d(input) for a graph builder that maps
// an owned input leaf to a 1x1 loss node. Runs in double precision.
template <typename BuildFn>
void check_input_grad(const MatXd& x0, BuildFn build, double step = 1e-6,
                      double tol = 1e-6) {
  Tape<double> tape;
  const int x = tape.variable(x0);
  const int loss = build(tape, x);
  REQUIRE(tape.val(loss).size() == 1);
  tape.backward(loss);
  const MatXd analytic = tape.grad(x);

  auto eval = [&](const MatXd& xv) {
    Tape<double> t;
    const int xi = t.variable(xv);
    return t.val(build(t, xi))(0, 0);
  };

  for (int r = 0; r < x0.rows(); ++r) {
    for (int c = 0; c < x0.cols(); ++c) {
      MatXd xp = x0, xm = x0;
      xp(r, c) += step;
      xm(r, c) -= step;
      const double fd = (eval(xp) - eval(xm)) / (2.0 * step);
      const double err = std::abs(analytic(r, c) - fd) /
                         std::max(1.0, std::abs(fd));
      INFO("entry (", r, ",", c, "): analytic=", analytic(r, c), " fd=", fd);
      CHECK(err < tol);
    }
  }
}

}  // namespace sirilab::testutil

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sirilab/rng.hpp"
#include "sirilab/tape.hpp"
#include "test_util.hpp"

using namespace sirilab;
using testutil::check_input_grad;
using testutil::random_mat;

TEST_CASE("rng streams are deterministic and platform-pinned") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(7);
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u != prev);
    prev = u;
  }
}

TEST_CASE("uniform_int covers its range inclusively") {
  Rng rng(3);
  bool saw_lo = false, saw_hi = false;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(2, 5);
    CHECK(v >= 2);
    CHECK(v <= 5);
    saw_lo = saw_lo || v == 2;
    saw_hi = saw_hi || v == 5;
  }
  CHECK(saw_lo);
  CHECK(saw_hi);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  Rng r1(9), r2(9);
  r1.shuffle(v);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[std::size_t(i)] == i);
}

TEST_CASE("xavier fill respects the bound") {
  MatXf m(64, 64);
  Rng rng(5);
  fill_xavier(m, 64, 64, rng);
  const double bound = xavier_bound(64, 64);
  CHECK(bound == doctest::Approx(0.21650635094610965).epsilon(1e-12));
  CHECK(double(m.cwiseAbs().maxCoeff()) <= bound);
  CHECK(double(m.cwiseAbs().maxCoeff()) > 0.5 * bound);  // not degenerate
}

TEST_CASE("tape: matmul/add/bias gradients") {
  Rng rng(11);
  const MatXd a0 = random_mat(3, 4, rng);
  const MatXd b0 = random_mat(4, 5, rng);
  const MatXd bias0 = random_mat(1, 5, rng);

  check_input_grad(a0, [&](Tape<double>& t, int x) {
    const int b = t.constant(b0);
    const int bias = t.constant(bias0);
    return t.sum_all(t.add_rowvec(t.matmul(x, b), bias));
  });
  check_input_grad(b0, [&](Tape<double>& t, int x) {
    const int a = t.constant(a0);
    return t.sum_all(t.matmul(a, x));
  });
  check_input_grad(bias0, [&](Tape<double>& t, int x) {
    const int a = t.constant(a0);
    const int b = t.constant(b0);
    return t.sum_all(t.hadamard(t.add_rowvec(t.matmul(a, b), x),
                                t.add_rowvec(t.matmul(a, b), x)));
  });
}

TEST_CASE("tape: matmul_nt gradients") {
  Rng rng(13);
  const MatXd a0 = random_mat(3, 4, rng);
  const MatXd b0 = random_mat(5, 4, rng);
  check_input_grad(a0, [&](Tape<double>& t, int x) {
    return t.sum_all(t.matmul_nt(x, t.constant(b0)));
  });
  check_input_grad(b0, [&](Tape<double>& t, int x) {
    return t.sum_all(t.hadamard(t.matmul_nt(t.constant(a0), x),
                                t.matmul_nt(t.constant(a0), x)));
  });
}

TEST_CASE("tape: relu/sigmoid/softmax/layer_norm gradients") {
  Rng rng(17);
  const MatXd x0 = random_mat(4, 6, rng);
  check_input_grad(x0, [](Tape<double>& t, int x) {
    return t.sum_all(t.relu(x));
  });
  check_input_grad(x0, [](Tape<double>& t, int x) {
    return t.sum_all(t.sigmoid(x));
  });
  // Weighted sums expose off-diagonal softmax and layer-norm terms.
  const MatXd w = random_mat(4, 6, rng);
  check_input_grad(x0, [&](Tape<double>& t, int x) {
    return t.sum_all(t.hadamard(t.softmax_rows(x), t.constant(w)));
  }, 1e-6, 1e-5);
  const MatXd g0 = random_mat(1, 6, rng, 0.5, 1.5);
  const MatXd b0 = random_mat(1, 6, rng);
  check_input_grad(x0, [&](Tape<double>& t, int x) {
    return t.sum_all(t.hadamard(
        t.layer_norm(x, t.constant(g0), t.constant(b0)), t.constant(w)));
  }, 1e-6, 1e-5);
  check_input_grad(g0, [&](Tape<double>& t, int g) {
    return t.sum_all(t.hadamard(
        t.layer_norm(t.constant(x0), g, t.constant(b0)), t.constant(w)));
  });
}

TEST_CASE("tape: softmax rows are probability vectors") {
  Rng rng(19);
  Tape<double> t;
  const int x = t.constant(random_mat(5, 7, rng, -3, 3));
  const int y = t.softmax_rows(x);
  for (int r = 0; r < 5; ++r)
    CHECK(t.val(y).row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tape: slice and concat gradients") {
  Rng rng(23);
  const MatXd x0 = random_mat(4, 8, rng);
  check_input_grad(x0, [](Tape<double>& t, int x) {
    const int a = t.slice_cols(x, 0, 4);
    const int b = t.slice_cols(x, 4, 4);
    return t.sum_all(t.hadamard(t.concat_cols({b, a}), t.concat_cols({a, b})));
  });
  check_input_grad(x0, [](Tape<double>& t, int x) {
    const int a = t.slice_rows(x, 1, 2);
    return t.sum_all(t.hadamard(t.concat_rows({a, a}), t.concat_rows({a, a})));
  });
}

TEST_CASE("tape: embedding gradient scatters into the table") {
  Rng rng(29);
  const MatXd table0 = random_mat(6, 3, rng);
  const std::vector<int> ids = {1, 4, 1, 0};
  const MatXd w = random_mat(4, 3, rng);
  check_input_grad(table0, [&](Tape<double>& t, int tab) {
    return t.sum_all(t.hadamard(t.embedding(tab, ids), t.constant(w)));
  });
}

TEST_CASE("tape: conv2d matches finite differences, with and without dilation") {
  Rng rng(31);
  const int h = 6, w = 6, cin = 2, cout = 3;
  const MatXd x0 = random_mat(h * w, cin, rng);

  for (const auto& [k, stride, dil, pad] :
       std::vector<std::array<int, 4>>{{3, 1, 1, 1}, {3, 2, 2, 2}, {2, 2, 1, 0}}) {
    const Conv2dPlan plan = Conv2dPlan::make(h, w, cin, cout, k, stride, dil, pad);
    const MatXd w0 = random_mat(plan.patch_cols(), cout, rng);
    const MatXd b0 = random_mat(1, cout, rng);
    check_input_grad(x0, [&](Tape<double>& t, int x) {
      return t.sum_all(t.conv2d(x, t.constant(w0), t.constant(b0), plan));
    });
    check_input_grad(w0, [&](Tape<double>& t, int wv) {
      return t.sum_all(t.conv2d(t.constant(x0), wv, t.constant(b0), plan));
    });
  }
}

TEST_CASE("tape: cs_to_corners and l1 gradients") {
  Rng rng(37);
  MatXd box0(1, 4);
  box0 << 0.4, 0.5, 0.3, 0.2;
  MatXd target(1, 4);
  target << 0.35, 0.55, 0.25, 0.3;
  check_input_grad(box0, [&](Tape<double>& t, int x) {
    return t.l1_to(t.cs_to_corners(x), target);
  });
}

TEST_CASE("tape: cross entropy gradient and value") {
  MatXd logits0(3, 2);
  logits0 << 0.5, -0.2, 1.0, 1.2, -0.7, 0.3;
  const std::vector<int> labels = {0, 1, 1};
  const std::vector<double> weights = {1.0, 0.1, 0.1};
  check_input_grad(logits0, [&](Tape<double>& t, int x) {
    return t.cross_entropy_rows(x, labels, weights);
  });
}

TEST_CASE("tape: grad_enabled=false records no backward graph") {
  Tape<double> t;
  t.grad_enabled = false;
  const int x = t.variable(MatXd::Ones(2, 2));
  const int y = t.sum_all(t.relu(x));
  CHECK(!t.needs_grad(x));
  CHECK(!t.needs_grad(y));
}

TEST_CASE("tape: external param leaves reference storage without copying") {
  MatXd storage = MatXd::Ones(2, 2);
  Tape<double> t;
  const int p = t.param(&storage);
  storage(0, 0) = 5.0;
  CHECK(t.val(p)(0, 0) == 5.0);
  const int loss = t.sum_all(t.hadamard(p, p));
  t.backward(loss);
  CHECK(t.grad(p)(0, 0) == doctest::Approx(10.0));
}

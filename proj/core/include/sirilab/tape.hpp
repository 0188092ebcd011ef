// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "sirilab/box.hpp"
#include "sirilab/common.hpp"

namespace sirilab {

// Spatial plan for a 2D convolution on a (H*W) x C feature matrix.
// Precomputed once per layer geometry and shared across samples.
struct Conv2dPlan {
  int h_in = 0, w_in = 0, c_in = 0, c_out = 0;
  int kh = 0, kw = 0, stride = 1, dilation = 1, pad = 0;
  int h_out = 0, w_out = 0;
  // For each output pixel and kernel slot: source pixel index, or -1 if the
  // tap falls outside the input.
  std::vector<int> src;

  static Conv2dPlan make(int h_in, int w_in, int c_in, int c_out, int k,
                         int stride, int dilation, int pad) {
    Conv2dPlan p;
    p.h_in = h_in;
    p.w_in = w_in;
    p.c_in = c_in;
    p.c_out = c_out;
    p.kh = k;
    p.kw = k;
    p.stride = stride;
    p.dilation = dilation;
    p.pad = pad;
    const int span = dilation * (k - 1) + 1;
    p.h_out = (h_in + 2 * pad - span) / stride + 1;
    p.w_out = (w_in + 2 * pad - span) / stride + 1;
    require(p.h_out > 0 && p.w_out > 0, "Conv2dPlan: empty output");
    p.src.assign(std::size_t(p.h_out) * p.w_out * k * k, -1);
    std::size_t idx = 0;
    for (int oy = 0; oy < p.h_out; ++oy) {
      for (int ox = 0; ox < p.w_out; ++ox) {
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = oy * stride - pad + ky * dilation;
            const int ix = ox * stride - pad + kx * dilation;
            if (iy >= 0 && iy < h_in && ix >= 0 && ix < w_in)
              p.src[idx] = iy * w_in + ix;
            ++idx;
          }
        }
      }
    }
    return p;
  }

  int kernel_slots() const { return kh * kw; }
  int patch_cols() const { return kh * kw * c_in; }
};

// Reverse-mode autodiff over matrix-valued nodes. Node values are either
// owned by the tape or referenced from external storage (parameters), so a
// forward pass never copies weight matrices. Creation order is a valid
// topological order; backward() walks it in reverse.
//
// Templated on the scalar so the same graph code runs in float for training
// and in double for finite-difference oracle tests.
template <typename S>
class Tape {
 public:
  using Mat = MatX<S>;

  bool grad_enabled = true;

  int size() const { return int(nodes_.size()); }
  void reset() { nodes_.clear(); }

  const Mat& val(int id) const {
    const Node& n = nodes_[std::size_t(id)];
    return n.external ? *n.external : n.value;
  }

  bool needs_grad(int id) const { return nodes_[std::size_t(id)].needs_grad; }

  Mat& grad(int id) {
    Node& n = nodes_[std::size_t(id)];
    if (!n.has_grad) {
      n.grad.setZero(val(id).rows(), val(id).cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  // True once backward() has touched this node (its grad is meaningful).
  bool has_grad(int id) const { return nodes_[std::size_t(id)].has_grad; }

  // ---- leaves ------------------------------------------------------------

  // Trainable leaf whose value lives in external storage (a parameter).
  int param(const Mat* storage) {
    Node n;
    n.external = storage;
    n.needs_grad = grad_enabled;
    return push(std::move(n));
  }

  // Non-trainable leaf referencing external storage (cached encodings etc.).
  int constant_ref(const Mat* storage) {
    Node n;
    n.external = storage;
    return push(std::move(n));
  }

  int constant(Mat v) {
    Node n;
    n.value = std::move(v);
    return push(std::move(n));
  }

  // Owned leaf that participates in gradients (inputs under test).
  int variable(Mat v) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = grad_enabled;
    return push(std::move(n));
  }

  // ---- ops ---------------------------------------------------------------

  int matmul(int a, int b) {
    Mat y = val(a) * val(b);
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a).noalias() += g * t.val(b).transpose();
      if (t.needs_grad(b)) t.grad(b).noalias() += t.val(a).transpose() * g;
    });
  }

  // A * B^T without materializing the transpose.
  int matmul_nt(int a, int b) {
    Mat y = val(a) * val(b).transpose();
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a).noalias() += g * t.val(b);
      if (t.needs_grad(b)) t.grad(b).noalias() += g.transpose() * t.val(a);
    });
  }

  int add(int a, int b) {
    Mat y = val(a) + val(b);
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a) += g;
      if (t.needs_grad(b)) t.grad(b) += g;
    });
  }

  int sub(int a, int b) {
    Mat y = val(a) - val(b);
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a) += g;
      if (t.needs_grad(b)) t.grad(b) -= g;
    });
  }

  // Adds a fixed (non-differentiated) matrix, e.g. positional encodings.
  int add_fixed(int a, const Mat* c) {
    Mat y = val(a) + *c;
    return unary(std::move(y), a, [a](Tape& t) {
      t.grad(a) += t.grad_of_self(t.cur_);
    });
  }

  // Broadcasts a 1 x C row (bias) over all rows of a.
  int add_rowvec(int a, int b) {
    require(val(b).rows() == 1 && val(b).cols() == val(a).cols(),
            "add_rowvec: bias shape mismatch");
    Mat y = val(a).rowwise() + val(b).row(0);
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a) += g;
      if (t.needs_grad(b)) t.grad(b).row(0) += g.colwise().sum();
    });
  }

  int scale(int a, S c) {
    Mat y = val(a) * c;
    return unary(std::move(y), a, [a, c](Tape& t) {
      t.grad(a) += t.grad_of_self(t.cur_) * c;
    });
  }

  int hadamard(int a, int b) {
    Mat y = val(a).cwiseProduct(val(b));
    return unary_or_binary(std::move(y), a, b, [a, b](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      if (t.needs_grad(a)) t.grad(a) += g.cwiseProduct(t.val(b));
      if (t.needs_grad(b)) t.grad(b) += g.cwiseProduct(t.val(a));
    });
  }

  int relu(int a) {
    Mat y = val(a).cwiseMax(S(0));
    const int id = unary(std::move(y), a, [a](Tape& t) {
      const int self = t.cur_;
      const Mat& g = t.grad_of_self(self);
      t.grad(a) += (t.val(self).array() > S(0)).template cast<S>().matrix().cwiseProduct(g);
    });
    return id;
  }

  int sigmoid(int a) {
    Mat y = (S(1) / (S(1) + (-val(a).array()).exp())).matrix();
    return unary(std::move(y), a, [a](Tape& t) {
      const int self = t.cur_;
      const Mat& yv = t.val(self);
      const Mat& g = t.grad_of_self(self);
      t.grad(a).array() += g.array() * yv.array() * (S(1) - yv.array());
    });
  }

  // Row-wise softmax with max-subtraction for stability.
  int softmax_rows(int a) {
    Mat y = val(a);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const S m = y.row(r).maxCoeff();
      y.row(r) = (y.row(r).array() - m).exp();
      y.row(r) /= y.row(r).sum();
    }
    return unary(std::move(y), a, [a](Tape& t) {
      const int self = t.cur_;
      const Mat& yv = t.val(self);
      const Mat& g = t.grad_of_self(self);
      Mat& ga = t.grad(a);
      for (Eigen::Index r = 0; r < yv.rows(); ++r) {
        const S dot = g.row(r).dot(yv.row(r));
        ga.row(r).array() +=
            yv.row(r).array() * (g.row(r).array() - dot);
      }
    });
  }

  // Row-wise layer norm with learnable 1 x C gain/shift.
  int layer_norm(int x, int gamma, int beta, S eps = S(1e-5)) {
    const Mat& xv = val(x);
    const Eigen::Index n = xv.rows(), d = xv.cols();
    Mat xhat(n, d);
    Eigen::Matrix<S, Eigen::Dynamic, 1> inv_sigma(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const S mu = xv.row(r).mean();
      const S var = (xv.row(r).array() - mu).square().mean();
      const S is = S(1) / std::sqrt(var + eps);
      inv_sigma(r) = is;
      xhat.row(r) = (xv.row(r).array() - mu) * is;
    }
    Mat y = (xhat.array().rowwise() * val(gamma).row(0).array()).rowwise() +
            val(beta).row(0).array();
    Node node;
    node.value = std::move(y);
    node.needs_grad =
        grad_enabled && (needs_grad(x) || needs_grad(gamma) || needs_grad(beta));
    if (node.needs_grad) {
      node.back = [x, gamma, beta, xhat = std::move(xhat),
                   inv_sigma = std::move(inv_sigma)](Tape& t) {
        const int self = t.cur_;
        const Mat& g = t.grad_of_self(self);
        if (t.needs_grad(gamma))
          t.grad(gamma).row(0) += g.cwiseProduct(xhat).colwise().sum();
        if (t.needs_grad(beta)) t.grad(beta).row(0) += g.colwise().sum();
        if (t.needs_grad(x)) {
          Mat& gx = t.grad(x);
          const auto gamma_row = t.val(gamma).row(0);
          const S d = S(xhat.cols());
          for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            Eigen::Matrix<S, 1, Eigen::Dynamic> dxhat =
                g.row(r).cwiseProduct(gamma_row);
            const S mean_dxhat = dxhat.mean();
            const S mean_dxhat_xhat = dxhat.dot(xhat.row(r)) / d;
            gx.row(r).array() +=
                inv_sigma(r) * (dxhat.array() - mean_dxhat -
                                xhat.row(r).array() * mean_dxhat_xhat);
          }
        }
      };
    }
    return push(std::move(node));
  }

  // Gathers rows of `table` at `ids`.
  int embedding(int table, std::vector<int> ids) {
    const Mat& tv = val(table);
    Mat y(Eigen::Index(ids.size()), tv.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      require(ids[i] >= 0 && ids[i] < tv.rows(), "embedding: id out of range");
      y.row(Eigen::Index(i)) = tv.row(ids[i]);
    }
    return unary(std::move(y), table, [table, ids = std::move(ids)](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      Mat& gt = t.grad(table);
      for (std::size_t i = 0; i < ids.size(); ++i)
        gt.row(ids[i]) += g.row(Eigen::Index(i));
    });
  }

  int slice_rows(int a, int r0, int n) {
    Mat y = val(a).middleRows(r0, n);
    return unary(std::move(y), a, [a, r0, n](Tape& t) {
      t.grad(a).middleRows(r0, n) += t.grad_of_self(t.cur_);
    });
  }

  int slice_cols(int a, int c0, int n) {
    Mat y = val(a).middleCols(c0, n);
    return unary(std::move(y), a, [a, c0, n](Tape& t) {
      t.grad(a).middleCols(c0, n) += t.grad_of_self(t.cur_);
    });
  }

  int concat_rows(const std::vector<int>& parts) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = val(parts.at(0)).cols();
    for (int p : parts) rows += val(p).rows();
    Mat y(rows, cols);
    Eigen::Index r = 0;
    for (int p : parts) {
      y.middleRows(r, val(p).rows()) = val(p);
      r += val(p).rows();
    }
    return nary(std::move(y), parts, [parts](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      Eigen::Index r = 0;
      for (int p : parts) {
        const Eigen::Index n = t.val(p).rows();
        if (t.needs_grad(p)) t.grad(p) += g.middleRows(r, n);
        r += n;
      }
    });
  }

  int concat_cols(const std::vector<int>& parts) {
    Eigen::Index cols = 0;
    const Eigen::Index rows = val(parts.at(0)).rows();
    for (int p : parts) cols += val(p).cols();
    Mat y(rows, cols);
    Eigen::Index c = 0;
    for (int p : parts) {
      y.middleCols(c, val(p).cols()) = val(p);
      c += val(p).cols();
    }
    return nary(std::move(y), parts, [parts](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      Eigen::Index c = 0;
      for (int p : parts) {
        const Eigen::Index n = t.val(p).cols();
        if (t.needs_grad(p)) t.grad(p) += g.middleCols(c, n);
        c += n;
      }
    });
  }

  // x: (h_in*w_in) x c_in, w: (kh*kw*c_in) x c_out, b: 1 x c_out.
  // Returns (h_out*w_out) x c_out. im2col + GEMM.
  int conv2d(int x, int w, int b, const Conv2dPlan& plan) {
    const Mat& xv = val(x);
    require(xv.rows() == Eigen::Index(plan.h_in) * plan.w_in &&
                xv.cols() == plan.c_in,
            "conv2d: input shape mismatch");
    const int slots = plan.kernel_slots();
    Mat patches(Eigen::Index(plan.h_out) * plan.w_out, plan.patch_cols());
    std::size_t idx = 0;
    for (Eigen::Index o = 0; o < patches.rows(); ++o) {
      for (int k = 0; k < slots; ++k, ++idx) {
        const int sp = plan.src[idx];
        if (sp >= 0)
          patches.block(o, Eigen::Index(k) * plan.c_in, 1, plan.c_in) =
              xv.row(sp);
        else
          patches.block(o, Eigen::Index(k) * plan.c_in, 1, plan.c_in).setZero();
      }
    }
    Mat y = patches * val(w);
    y.rowwise() += val(b).row(0);
    Node node;
    node.value = std::move(y);
    node.needs_grad =
        grad_enabled && (needs_grad(x) || needs_grad(w) || needs_grad(b));
    if (node.needs_grad) {
      node.back = [x, w, b, &plan, patches = std::move(patches)](Tape& t) {
        const int self = t.cur_;
        const Mat& g = t.grad_of_self(self);
        if (t.needs_grad(w)) t.grad(w).noalias() += patches.transpose() * g;
        if (t.needs_grad(b)) t.grad(b).row(0) += g.colwise().sum();
        if (t.needs_grad(x)) {
          Mat dpatches = g * t.val(w).transpose();
          Mat& gx = t.grad(x);
          const int slots = plan.kernel_slots();
          std::size_t idx = 0;
          for (Eigen::Index o = 0; o < dpatches.rows(); ++o) {
            for (int k = 0; k < slots; ++k, ++idx) {
              const int sp = plan.src[idx];
              if (sp >= 0)
                gx.row(sp) +=
                    dpatches.block(o, Eigen::Index(k) * plan.c_in, 1, plan.c_in);
            }
          }
        }
      };
    }
    return push(std::move(node));
  }

  // Scalar (1x1) linear combination of 1x1 nodes.
  int lincomb(const std::vector<int>& ids, const std::vector<S>& coeffs) {
    require(ids.size() == coeffs.size(), "lincomb: size mismatch");
    S acc = S(0);
    for (std::size_t i = 0; i < ids.size(); ++i)
      acc += coeffs[i] * val(ids[i])(0, 0);
    Mat y(1, 1);
    y(0, 0) = acc;
    return nary(std::move(y), ids, [ids, coeffs](Tape& t) {
      const S g = t.grad_of_self(t.cur_)(0, 0);
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (t.needs_grad(ids[i])) t.grad(ids[i])(0, 0) += g * coeffs[i];
    });
  }

  // Sum of absolute differences against a fixed target (L1 loss). 1x1.
  int l1_to(int a, Mat target) {
    require(val(a).rows() == target.rows() && val(a).cols() == target.cols(),
            "l1_to: shape mismatch");
    Mat y(1, 1);
    y(0, 0) = (val(a) - target).cwiseAbs().sum();
    return unary(std::move(y), a, [a, target = std::move(target)](Tape& t) {
      const S g = t.grad_of_self(t.cur_)(0, 0);
      t.grad(a).array() +=
          g * (t.val(a) - target).array().unaryExpr([](S v) {
            return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0));
          });
    });
  }

  // Converts a 1x4 center-size box (cx, cy, w, h) to corner form.
  int cs_to_corners(int a) {
    const Mat& v = val(a);
    require(v.rows() == 1 && v.cols() == 4, "cs_to_corners: expect 1x4");
    Mat y(1, 4);
    y(0, 0) = v(0, 0) - v(0, 2) / S(2);
    y(0, 1) = v(0, 1) - v(0, 3) / S(2);
    y(0, 2) = v(0, 0) + v(0, 2) / S(2);
    y(0, 3) = v(0, 1) + v(0, 3) / S(2);
    return unary(std::move(y), a, [a](Tape& t) {
      const Mat& g = t.grad_of_self(t.cur_);
      Mat& ga = t.grad(a);
      ga(0, 0) += g(0, 0) + g(0, 2);
      ga(0, 1) += g(0, 1) + g(0, 3);
      ga(0, 2) += (g(0, 2) - g(0, 0)) / S(2);
      ga(0, 3) += (g(0, 3) - g(0, 1)) / S(2);
    });
  }

  // GIoU loss (1 - giou) between a 1x4 corner-form box node and a fixed box.
  int giou_loss(int corners, BoxT<S> target) {
    const Mat& v = val(corners);
    require(v.rows() == 1 && v.cols() == 4, "giou_loss: expect 1x4");
    const BoxT<S> a{v(0, 0), v(0, 1), v(0, 2), v(0, 3)};
    const auto gg = giou_with_grad(a, target);
    Mat y(1, 1);
    y(0, 0) = S(1) - gg.value;
    return unary(std::move(y), corners, [corners, d = gg.d](Tape& t) {
      const S g = t.grad_of_self(t.cur_)(0, 0);
      Mat& gc = t.grad(corners);
      for (int i = 0; i < 4; ++i) gc(0, i) -= g * d[std::size_t(i)];
    });
  }

  // Weighted mean 2-way cross entropy over rows of an N x 2 logit matrix.
  // Row q is scored against labels[q] with weight weights[q]; the result is
  // sum_q w_q * ce_q / N.
  int cross_entropy_rows(int logits, std::vector<int> labels,
                         std::vector<S> weights) {
    const Mat& lv = val(logits);
    require(lv.cols() == 2, "cross_entropy_rows: expect N x 2 logits");
    require(std::size_t(lv.rows()) == labels.size() &&
                labels.size() == weights.size(),
            "cross_entropy_rows: label/weight count mismatch");
    const Eigen::Index n = lv.rows();
    S acc = S(0);
    Mat probs(n, 2);
    for (Eigen::Index r = 0; r < n; ++r) {
      const S m = std::max(lv(r, 0), lv(r, 1));
      const S e0 = std::exp(lv(r, 0) - m), e1 = std::exp(lv(r, 1) - m);
      const S z = e0 + e1;
      probs(r, 0) = e0 / z;
      probs(r, 1) = e1 / z;
      const S logz = m + std::log(z);
      acc += weights[std::size_t(r)] * (logz - lv(r, labels[std::size_t(r)]));
    }
    Mat y(1, 1);
    y(0, 0) = acc / S(n);
    return unary(std::move(y), logits,
                 [logits, labels = std::move(labels),
                  weights = std::move(weights), probs = std::move(probs)](Tape& t) {
                   const S g = t.grad_of_self(t.cur_)(0, 0);
                   Mat& gl = t.grad(logits);
                   const S inv_n = S(1) / S(probs.rows());
                   for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                     const S w = weights[std::size_t(r)] * g * inv_n;
                     gl(r, 0) += w * (probs(r, 0) - (labels[std::size_t(r)] == 0 ? S(1) : S(0)));
                     gl(r, 1) += w * (probs(r, 1) - (labels[std::size_t(r)] == 1 ? S(1) : S(0)));
                   }
                 });
  }

  int mean_all(int a) {
    Mat y(1, 1);
    y(0, 0) = val(a).mean();
    return unary(std::move(y), a, [a](Tape& t) {
      const S g = t.grad_of_self(t.cur_)(0, 0);
      const Mat& v = t.val(a);
      t.grad(a).array() += g / S(v.size());
    });
  }

  int sum_all(int a) {
    Mat y(1, 1);
    y(0, 0) = val(a).sum();
    return unary(std::move(y), a, [a](Tape& t) {
      t.grad(a).array() += t.grad_of_self(t.cur_)(0, 0);
    });
  }

  // ---- backward ----------------------------------------------------------

  // Seeds d(loss)/d(loss) = 1 at a 1x1 node and back-propagates through the
  // whole tape. Nodes whose grad was never touched are skipped.
  void backward(int loss_id) {
    require(val(loss_id).size() == 1, "backward: loss must be 1x1");
    for (Node& n : nodes_) n.has_grad = false;
    grad(loss_id)(0, 0) = S(1);
    for (int i = loss_id; i >= 0; --i) {
      Node& n = nodes_[std::size_t(i)];
      if (n.back && n.needs_grad && n.has_grad) {
        cur_ = i;
        n.back(*this);
      }
    }
  }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;
    std::function<void(Tape&)> back;
    bool needs_grad = false;
    bool has_grad = false;
  };

  // Gradient of the node currently executing its backward fn.
  const Mat& grad_of_self(int id) { return nodes_[std::size_t(id)].grad; }

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  template <typename F>
  int unary(Mat y, int a, F&& back) {
    Node n;
    n.value = std::move(y);
    n.needs_grad = grad_enabled && needs_grad(a);
    if (n.needs_grad) n.back = std::forward<F>(back);
    return push(std::move(n));
  }

  template <typename F>
  int unary_or_binary(Mat y, int a, int b, F&& back) {
    Node n;
    n.value = std::move(y);
    n.needs_grad = grad_enabled && (needs_grad(a) || needs_grad(b));
    if (n.needs_grad) n.back = std::forward<F>(back);
    return push(std::move(n));
  }

  template <typename F>
  int nary(Mat y, const std::vector<int>& parts, F&& back) {
    Node n;
    n.value = std::move(y);
    bool any = false;
    for (int p : parts) any = any || needs_grad(p);
    n.needs_grad = grad_enabled && any;
    if (n.needs_grad) n.back = std::forward<F>(back);
    return push(std::move(n));
  }

  std::vector<Node> nodes_;
  int cur_ = -1;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace sirilab

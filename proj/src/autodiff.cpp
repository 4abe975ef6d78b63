// Copyright 2026 The MSAE Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "msae/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace msae {

namespace {

thread_local bool g_grad_enabled = true;

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> pullback) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool need = false;
    for (const auto& p : parents) need = need || p->requires_grad;
    if (need) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->pullback = std::move(pullback);
    }
  }
  return n;
}

void accum(Node& p, const Tensor& g) {
  p.ensure_grad();
  Scalar* dst = p.grad.data();
  const Scalar* src = g.data();
  for (std::int64_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) throw Error(std::string(op) + ": shape mismatch");
}

struct Tap {
  int i0, i1;
  Scalar w0, w1;
};

std::vector<Tap> resample_taps(int out_len, int in_len, Scalar step) {
  std::vector<Tap> taps(static_cast<std::size_t>(out_len));
  for (int o = 0; o < out_len; ++o) {
    Scalar src = (o + Scalar(0.5)) * step - Scalar(0.5);
    Scalar fl = std::floor(src);
    int i0 = static_cast<int>(fl);
    Scalar f = src - fl;
    int i0c = std::min(std::max(i0, 0), in_len - 1);
    int i1c = std::min(std::max(i0 + 1, 0), in_len - 1);
    taps[static_cast<std::size_t>(o)] = {i0c, i1c, Scalar(1) - f, f};
  }
  return taps;
}

Tensor resample_apply(const Tensor& x, int oh, int ow,
                      const std::vector<Tap>& th, const std::vector<Tap>& tw) {
  const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  Tensor out({n, c, oh, ow});
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const Scalar* src = x.data() + (static_cast<std::int64_t>(ni) * c + ci) * ih * iw;
      Scalar* dst = out.data() + (static_cast<std::int64_t>(ni) * c + ci) * oh * ow;
      for (int y = 0; y < oh; ++y) {
        const Tap& a = th[static_cast<std::size_t>(y)];
        const Scalar* r0 = src + static_cast<std::int64_t>(a.i0) * iw;
        const Scalar* r1 = src + static_cast<std::int64_t>(a.i1) * iw;
        for (int xo = 0; xo < ow; ++xo) {
          const Tap& b = tw[static_cast<std::size_t>(xo)];
          dst[static_cast<std::int64_t>(y) * ow + xo] =
              a.w0 * (b.w0 * r0[b.i0] + b.w1 * r0[b.i1]) +
              a.w1 * (b.w0 * r1[b.i0] + b.w1 * r1[b.i1]);
        }
      }
    }
  }
  return out;
}

void resample_scatter(const Tensor& gout, Tensor& gin,
                      const std::vector<Tap>& th, const std::vector<Tap>& tw) {
  const int n = gout.dim(0), c = gout.dim(1), oh = gout.dim(2), ow = gout.dim(3);
  const int ih = gin.dim(2), iw = gin.dim(3);
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      Scalar* dst = gin.data() + (static_cast<std::int64_t>(ni) * c + ci) * ih * iw;
      const Scalar* src = gout.data() + (static_cast<std::int64_t>(ni) * c + ci) * oh * ow;
      for (int y = 0; y < oh; ++y) {
        const Tap& a = th[static_cast<std::size_t>(y)];
        for (int xo = 0; xo < ow; ++xo) {
          const Tap& b = tw[static_cast<std::size_t>(xo)];
          Scalar g = src[static_cast<std::int64_t>(y) * ow + xo];
          dst[static_cast<std::int64_t>(a.i0) * iw + b.i0] += a.w0 * b.w0 * g;
          dst[static_cast<std::int64_t>(a.i0) * iw + b.i1] += a.w0 * b.w1 * g;
          dst[static_cast<std::int64_t>(a.i1) * iw + b.i0] += a.w1 * b.w0 * g;
          dst[static_cast<std::int64_t>(a.i1) * iw + b.i1] += a.w1 * b.w1 * g;
        }
      }
    }
  }
}

int conv_out_len(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// col: (C*kh*kw) x (Hout*Wout), conv geometry (in -> out)
void im2col(const Scalar* x, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, Scalar* col) {
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        Scalar* dst = col + (static_cast<std::int64_t>(ci) * kh * kw + ki * kw + kj) *
                                (static_cast<std::int64_t>(oh) * ow);
        for (int y = 0; y < oh; ++y) {
          int iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) {
            for (int xo = 0; xo < ow; ++xo) dst[static_cast<std::int64_t>(y) * ow + xo] = 0;
            continue;
          }
          const Scalar* row = x + (static_cast<std::int64_t>(ci) * h + iy) * w;
          for (int xo = 0; xo < ow; ++xo) {
            int ix = xo * stride - pad + kj;
            dst[static_cast<std::int64_t>(y) * ow + xo] =
                (ix >= 0 && ix < w) ? row[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

// scatter-add of col back onto the conv input grid
void col2im(const Scalar* col, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, Scalar* x) {
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const Scalar* src = col + (static_cast<std::int64_t>(ci) * kh * kw + ki * kw + kj) *
                                      (static_cast<std::int64_t>(oh) * ow);
        for (int y = 0; y < oh; ++y) {
          int iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          Scalar* row = x + (static_cast<std::int64_t>(ci) * h + iy) * w;
          for (int xo = 0; xo < ow; ++xo) {
            int ix = xo * stride - pad + kj;
            if (ix >= 0 && ix < w) row[ix] += src[static_cast<std::int64_t>(y) * ow + xo];
          }
        }
      }
    }
  }
}

}  // namespace

NodePtr make_constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

NodePtr make_param(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

bool grad_enabled() { return g_grad_enabled; }

NoGrad::NoGrad() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGrad::~NoGrad() { g_grad_enabled = prev_; }

void backward(const NodePtr& root) {
  if (root->value.numel() != 1) throw Error("backward: root must be a scalar");
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    Node* node = top.first;
    if (top.second < node->parents.size()) {
      Node* p = node->parents[top.second].get();
      ++top.second;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad.fill(0);
  root->grad[0] = 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->requires_grad && n->pullback) n->pullback(*n);
  }
}

// ---------------------------------------------------------------- elementwise

NodePtr add(NodePtr a, NodePtr b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
  return make_node(std::move(out), {std::move(a), std::move(b)}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node& p = *self.parents[static_cast<std::size_t>(k)];
      if (p.requires_grad) accum(p, self.grad);
    }
  });
}

NodePtr sub(NodePtr a, NodePtr b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
  return make_node(std::move(out), {std::move(a), std::move(b)}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) accum(pa, self.grad);
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::int64_t i = 0; i < self.grad.numel(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

NodePtr mul(NodePtr a, NodePtr b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
  return make_node(std::move(out), {std::move(a), std::move(b)}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::int64_t i = 0; i < self.grad.numel(); ++i)
        pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::int64_t i = 0; i < self.grad.numel(); ++i)
        pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

NodePtr add_scalar(NodePtr a, Scalar s) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + s;
  return make_node(std::move(out), {std::move(a)}, [](Node& self) {
    Node& p = *self.parents[0];
    if (p.requires_grad) accum(p, self.grad);
  });
}

NodePtr mul_scalar(NodePtr a, Scalar s) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * s;
  return make_node(std::move(out), {std::move(a)}, [s](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) p.grad[i] += s * self.grad[i];
  });
}

NodePtr sum_all(NodePtr a) {
  Scalar s = 0;
  for (std::int64_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
  return make_node(Tensor::scalar(s), {std::move(a)}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    Scalar g = self.grad[0];
    for (std::int64_t i = 0; i < p.grad.numel(); ++i) p.grad[i] += g;
  });
}

NodePtr mean_all(NodePtr a) {
  std::int64_t n = a->value.numel();
  return mul_scalar(sum_all(std::move(a)), Scalar(1) / static_cast<Scalar>(n));
}

namespace {
template <typename FwdFn, typename GradFn>
NodePtr pointwise(NodePtr a, FwdFn fwd, GradFn grad_from_xy) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = fwd(a->value[i]);
  return make_node(std::move(out), {std::move(a)}, [grad_from_xy](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i)
      p.grad[i] += self.grad[i] * grad_from_xy(p.value[i], self.value[i]);
  });
}
}  // namespace

NodePtr relu(NodePtr a) {
  return pointwise(
      std::move(a), [](Scalar x) { return x > 0 ? x : Scalar(0); },
      [](Scalar x, Scalar) { return x > 0 ? Scalar(1) : Scalar(0); });
}

NodePtr leaky_relu(NodePtr a, Scalar slope) {
  return pointwise(
      std::move(a), [slope](Scalar x) { return x > 0 ? x : slope * x; },
      [slope](Scalar x, Scalar) { return x > 0 ? Scalar(1) : slope; });
}

NodePtr tanh_act(NodePtr a) {
  return pointwise(
      std::move(a), [](Scalar x) { return std::tanh(x); },
      [](Scalar, Scalar y) { return Scalar(1) - y * y; });
}

NodePtr sigmoid_act(NodePtr a) {
  return pointwise(
      std::move(a), [](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); },
      [](Scalar, Scalar y) { return y * (Scalar(1) - y); });
}

NodePtr softplus_act(NodePtr a) {
  // log1p(exp(x)) with the standard overflow-safe split
  return pointwise(
      std::move(a),
      [](Scalar x) { return x > 30 ? x : std::log1p(std::exp(x)); },
      [](Scalar x, Scalar) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
}

NodePtr log2_clamped(NodePtr a, Scalar floor_val) {
  const Scalar inv_ln2 = Scalar(1) / std::log(Scalar(2));
  return pointwise(
      std::move(a),
      [floor_val](Scalar x) { return std::log2(x > floor_val ? x : floor_val); },
      [floor_val, inv_ln2](Scalar x, Scalar) {
        return x > floor_val ? inv_ln2 / x : Scalar(0);
      });
}

// --------------------------------------------------------------------- shape

NodePtr reshape(NodePtr a, std::vector<int> shape) {
  if (Tensor::count(shape) != a->value.numel()) throw Error("reshape: element count");
  Tensor out = a->value;
  out = Tensor::from(std::move(shape), std::vector<Scalar>(out.data(), out.data() + out.numel()));
  return make_node(std::move(out), {std::move(a)}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) p.grad[i] += self.grad[i];
  });
}

NodePtr slice_channels(NodePtr a, int c0, int c1) {
  const Tensor& x = a->value;
  if (x.ndim() != 4 || c0 < 0 || c1 > x.dim(1) || c0 >= c1)
    throw Error("slice_channels: bad range");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int cs = c1 - c0;
  Tensor out({n, cs, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < cs; ++ci)
      std::copy_n(x.data() + ((static_cast<std::int64_t>(ni) * c + c0 + ci) * plane), plane,
                  out.data() + ((static_cast<std::int64_t>(ni) * cs + ci) * plane));
  return make_node(std::move(out), {std::move(a)}, [c0](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    const int n = self.value.dim(0), cs = self.value.dim(1);
    const int c = p.value.dim(1);
    const std::int64_t plane =
        static_cast<std::int64_t>(self.value.dim(2)) * self.value.dim(3);
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < cs; ++ci) {
        const Scalar* g = self.grad.data() + (static_cast<std::int64_t>(ni) * cs + ci) * plane;
        Scalar* d = p.grad.data() + (static_cast<std::int64_t>(ni) * c + c0 + ci) * plane;
        for (std::int64_t i = 0; i < plane; ++i) d[i] += g[i];
      }
  });
}

// ------------------------------------------------------------- dense algebra

NodePtr matmul(NodePtr a, NodePtr b) {
  const Tensor& A = a->value;
  const Tensor& B = b->value;
  if (A.ndim() != 2 || B.ndim() != 2 || A.dim(1) != B.dim(0))
    throw Error("matmul: shape mismatch");
  const int m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor out({m, n});
  gemm(false, false, m, n, k, 1, A.data(), B.data(), 0, out.data());
  return make_node(std::move(out), {std::move(a), std::move(b)}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      gemm(false, true, m, k, n, 1, self.grad.data(), pb.value.data(), 1, pa.grad.data());
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      gemm(true, false, k, n, m, 1, pa.value.data(), self.grad.data(), 1, pb.grad.data());
    }
  });
}

NodePtr add_col(NodePtr x, NodePtr col) {
  const Tensor& X = x->value;
  const Tensor& C = col->value;
  if (X.ndim() != 2 || C.numel() != X.dim(0)) throw Error("add_col: shape mismatch");
  const int m = X.dim(0), n = X.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::int64_t>(i) * n + j] = X[static_cast<std::int64_t>(i) * n + j] + C[i];
  return make_node(std::move(out), {std::move(x), std::move(col)}, [m, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pc = *self.parents[1];
    if (px.requires_grad) accum(px, self.grad);
    if (pc.requires_grad) {
      pc.ensure_grad();
      for (int i = 0; i < m; ++i) {
        Scalar s = 0;
        for (int j = 0; j < n; ++j) s += self.grad[static_cast<std::int64_t>(i) * n + j];
        pc.grad[i] += s;
      }
    }
  });
}

NodePtr mul_col(NodePtr x, NodePtr col) {
  const Tensor& X = x->value;
  const Tensor& C = col->value;
  if (X.ndim() != 2 || C.numel() != X.dim(0)) throw Error("mul_col: shape mismatch");
  const int m = X.dim(0), n = X.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::int64_t>(i) * n + j] = X[static_cast<std::int64_t>(i) * n + j] * C[i];
  return make_node(std::move(out), {std::move(x), std::move(col)}, [m, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pc = *self.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          px.grad[static_cast<std::int64_t>(i) * n + j] +=
              self.grad[static_cast<std::int64_t>(i) * n + j] * pc.value[i];
    }
    if (pc.requires_grad) {
      pc.ensure_grad();
      for (int i = 0; i < m; ++i) {
        Scalar s = 0;
        for (int j = 0; j < n; ++j)
          s += self.grad[static_cast<std::int64_t>(i) * n + j] *
               px.value[static_cast<std::int64_t>(i) * n + j];
        pc.grad[i] += s;
      }
    }
  });
}

// ----------------------------------------------------------------- conv etc.

Tensor conv2d_t(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                int pad) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin) throw Error("conv2d: channel mismatch");
  const int oh = conv_out_len(h, kh, stride, pad);
  const int ow = conv_out_len(wd, kw, stride, pad);
  if (oh <= 0 || ow <= 0) throw Error("conv2d: output would be empty");
  const int K = cin * kh * kw;
  const std::int64_t L = static_cast<std::int64_t>(oh) * ow;
  Tensor out({n, cout, oh, ow});
  std::vector<Scalar> col(static_cast<std::size_t>(K) * L);
  for (int ni = 0; ni < n; ++ni) {
    im2col(x.data() + static_cast<std::int64_t>(ni) * cin * h * wd, cin, h, wd, kh, kw,
           stride, pad, oh, ow, col.data());
    Scalar* o = out.data() + static_cast<std::int64_t>(ni) * cout * L;
    gemm(false, false, cout, static_cast<int>(L), K, 1, w.data(), col.data(), 0, o);
    if (b.numel() == cout)
      for (int co = 0; co < cout; ++co)
        for (std::int64_t i = 0; i < L; ++i) o[co * L + i] += b[co];
  }
  return out;
}

NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad) {
  Tensor out = conv2d_t(x->value, w->value, b ? b->value : Tensor(), stride, pad);
  std::vector<NodePtr> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents), [stride, pad](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    const Tensor& x = px.value;
    const Tensor& w = pw.value;
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = self.value.dim(2), ow = self.value.dim(3);
    const int K = cin * kh * kw;
    const std::int64_t L = static_cast<std::int64_t>(oh) * ow;
    std::vector<Scalar> col(static_cast<std::size_t>(K) * L);
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    if (pb && pb->requires_grad) pb->ensure_grad();
    for (int ni = 0; ni < n; ++ni) {
      const Scalar* g = self.grad.data() + static_cast<std::int64_t>(ni) * cout * L;
      if (pw.requires_grad || px.requires_grad)
        im2col(x.data() + static_cast<std::int64_t>(ni) * cin * h * wd, cin, h, wd, kh,
               kw, stride, pad, oh, ow, col.data());
      if (pw.requires_grad)
        gemm(false, true, cout, K, static_cast<int>(L), 1, g, col.data(), 1,
             pw.grad.data());
      if (px.requires_grad) {
        // reuse col as W^T * g
        gemm(true, false, K, static_cast<int>(L), cout, 1, w.data(), g, 0, col.data());
        col2im(col.data(), cin, h, wd, kh, kw, stride, pad, oh, ow,
               px.grad.data() + static_cast<std::int64_t>(ni) * cin * h * wd);
      }
      if (pb && pb->requires_grad) {
        for (int co = 0; co < cout; ++co) {
          Scalar s = 0;
          for (std::int64_t i = 0; i < L; ++i) s += g[co * L + i];
          pb->grad[co] += s;
        }
      }
    }
  });
}

Tensor conv_transpose2d_t(const Tensor& x, const Tensor& w, const Tensor& b,
                          int stride, int pad, int out_pad) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  if (w.dim(0) != cin) throw Error("conv_transpose2d: channel mismatch");
  const int cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int oh = stride * (h - 1) + kh - 2 * pad + out_pad;
  const int ow = stride * (wd - 1) + kw - 2 * pad + out_pad;
  if (oh <= 0 || ow <= 0) throw Error("conv_transpose2d: output would be empty");
  const int K = cout * kh * kw;
  const std::int64_t L = static_cast<std::int64_t>(h) * wd;
  Tensor out({n, cout, oh, ow});
  std::vector<Scalar> col(static_cast<std::size_t>(K) * L);
  for (int ni = 0; ni < n; ++ni) {
    // col = W^T (K x Cin) * x_n (Cin x L)
    gemm(true, false, K, static_cast<int>(L), cin, 1, w.data(),
         x.data() + static_cast<std::int64_t>(ni) * cin * L, 0, col.data());
    Scalar* o = out.data() + static_cast<std::int64_t>(ni) * cout * oh * ow;
    col2im(col.data(), cout, oh, ow, kh, kw, stride, pad, h, wd, o);
    if (b.numel() == cout) {
      const std::int64_t plane = static_cast<std::int64_t>(oh) * ow;
      for (int co = 0; co < cout; ++co)
        for (std::int64_t i = 0; i < plane; ++i) o[co * plane + i] += b[co];
    }
  }
  return out;
}

NodePtr conv_transpose2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad,
                         int out_pad) {
  Tensor out =
      conv_transpose2d_t(x->value, w->value, b ? b->value : Tensor(), stride, pad, out_pad);
  std::vector<NodePtr> parents{x, w};
  if (b) parents.push_back(b);
  return make_node(std::move(out), std::move(parents), [stride, pad](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    const Tensor& x = px.value;
    const Tensor& w = pw.value;
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const int oh = self.value.dim(2), ow = self.value.dim(3);
    const int K = cout * kh * kw;
    const std::int64_t L = static_cast<std::int64_t>(h) * wd;
    std::vector<Scalar> col(static_cast<std::size_t>(K) * L);
    if (px.requires_grad) px.ensure_grad();
    if (pw.requires_grad) pw.ensure_grad();
    if (pb && pb->requires_grad) pb->ensure_grad();
    for (int ni = 0; ni < n; ++ni) {
      const Scalar* g = self.grad.data() + static_cast<std::int64_t>(ni) * cout * oh * ow;
      im2col(g, cout, oh, ow, kh, kw, stride, pad, h, wd, col.data());
      if (px.requires_grad)
        gemm(false, false, cin, static_cast<int>(L), K, 1, w.data(), col.data(), 1,
             px.grad.data() + static_cast<std::int64_t>(ni) * cin * L);
      if (pw.requires_grad)
        gemm(false, true, cin, K, static_cast<int>(L), 1,
             x.data() + static_cast<std::int64_t>(ni) * cin * L, col.data(), 1,
             pw.grad.data());
      if (pb && pb->requires_grad) {
        const std::int64_t plane = static_cast<std::int64_t>(oh) * ow;
        for (int co = 0; co < cout; ++co) {
          Scalar s = 0;
          for (std::int64_t i = 0; i < plane; ++i) s += g[co * plane + i];
          pb->grad[co] += s;
        }
      }
    }
  });
}

Tensor instance_norm_t(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       Scalar eps) {
  const int n = x.dim(0), c = x.dim(1);
  const std::int64_t m = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c) throw Error("instance_norm: param size");
  Tensor out(x.shape());
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const Scalar* src = x.data() + (static_cast<std::int64_t>(ni) * c + ci) * m;
      Scalar* dst = out.data() + (static_cast<std::int64_t>(ni) * c + ci) * m;
      Scalar mu = 0;
      for (std::int64_t i = 0; i < m; ++i) mu += src[i];
      mu /= static_cast<Scalar>(m);
      Scalar var = 0;
      for (std::int64_t i = 0; i < m; ++i) {
        Scalar d = src[i] - mu;
        var += d * d;
      }
      var /= static_cast<Scalar>(m);
      const Scalar inv = Scalar(1) / std::sqrt(var + eps);
      const Scalar g = gamma[ci], b = beta[ci];
      for (std::int64_t i = 0; i < m; ++i) dst[i] = g * (src[i] - mu) * inv + b;
    }
  }
  return out;
}

NodePtr instance_norm(NodePtr x, NodePtr gamma, NodePtr beta, Scalar eps) {
  Tensor out = instance_norm_t(x->value, gamma->value, beta->value, eps);
  return make_node(std::move(out), {std::move(x), std::move(gamma), std::move(beta)},
                   [eps](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pb = *self.parents[2];
    const Tensor& x = px.value;
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t m = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    if (px.requires_grad) px.ensure_grad();
    if (pg.requires_grad) pg.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    std::vector<Scalar> xhat(static_cast<std::size_t>(m));
    for (int ni = 0; ni < n; ++ni) {
      for (int ci = 0; ci < c; ++ci) {
        const std::int64_t base = (static_cast<std::int64_t>(ni) * c + ci) * m;
        const Scalar* src = x.data() + base;
        const Scalar* gy = self.grad.data() + base;
        Scalar mu = 0;
        for (std::int64_t i = 0; i < m; ++i) mu += src[i];
        mu /= static_cast<Scalar>(m);
        Scalar var = 0;
        for (std::int64_t i = 0; i < m; ++i) {
          Scalar d = src[i] - mu;
          var += d * d;
        }
        var /= static_cast<Scalar>(m);
        const Scalar inv = Scalar(1) / std::sqrt(var + eps);
        for (std::int64_t i = 0; i < m; ++i)
          xhat[static_cast<std::size_t>(i)] = (src[i] - mu) * inv;
        if (pg.requires_grad) {
          Scalar s = 0;
          for (std::int64_t i = 0; i < m; ++i) s += gy[i] * xhat[static_cast<std::size_t>(i)];
          pg.grad[ci] += s;
        }
        if (pb.requires_grad) {
          Scalar s = 0;
          for (std::int64_t i = 0; i < m; ++i) s += gy[i];
          pb.grad[ci] += s;
        }
        if (px.requires_grad) {
          const Scalar gscale = pg.value[ci] * inv;
          Scalar mean_d = 0, mean_dx = 0;
          for (std::int64_t i = 0; i < m; ++i) {
            mean_d += gy[i];
            mean_dx += gy[i] * xhat[static_cast<std::size_t>(i)];
          }
          mean_d /= static_cast<Scalar>(m);
          mean_dx /= static_cast<Scalar>(m);
          Scalar* dx = px.grad.data() + base;
          for (std::int64_t i = 0; i < m; ++i)
            dx[i] += gscale *
                     (gy[i] - mean_d - xhat[static_cast<std::size_t>(i)] * mean_dx);
        }
      }
    }
  });
}

Tensor upsample_bilinear_t(const Tensor& x, int s) {
  if (s < 2) throw Error("upsample: scale must be >= 2");
  const int oh = x.dim(2) * s, ow = x.dim(3) * s;
  auto th = resample_taps(oh, x.dim(2), Scalar(1) / s);
  auto tw = resample_taps(ow, x.dim(3), Scalar(1) / s);
  return resample_apply(x, oh, ow, th, tw);
}

Tensor downsample_bilinear_t(const Tensor& x, int s) {
  if (s < 2) throw Error("downsample: scale must be >= 2");
  if (x.dim(2) % s != 0 || x.dim(3) % s != 0)
    throw Error("downsample: dimensions not divisible by scale");
  const int oh = x.dim(2) / s, ow = x.dim(3) / s;
  auto th = resample_taps(oh, x.dim(2), static_cast<Scalar>(s));
  auto tw = resample_taps(ow, x.dim(3), static_cast<Scalar>(s));
  return resample_apply(x, oh, ow, th, tw);
}

NodePtr upsample_bilinear(NodePtr x, int s) {
  Tensor out = upsample_bilinear_t(x->value, s);
  return make_node(std::move(out), {std::move(x)}, [s](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    auto th = resample_taps(self.value.dim(2), p.value.dim(2), Scalar(1) / s);
    auto tw = resample_taps(self.value.dim(3), p.value.dim(3), Scalar(1) / s);
    resample_scatter(self.grad, p.grad, th, tw);
  });
}

NodePtr downsample_bilinear(NodePtr x, int s) {
  Tensor out = downsample_bilinear_t(x->value, s);
  return make_node(std::move(out), {std::move(x)}, [s](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    auto th = resample_taps(self.value.dim(2), p.value.dim(2), static_cast<Scalar>(s));
    auto tw = resample_taps(self.value.dim(3), p.value.dim(3), static_cast<Scalar>(s));
    resample_scatter(self.grad, p.grad, th, tw);
  });
}

}  // namespace msae

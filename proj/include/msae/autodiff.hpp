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

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "msae/tensor.hpp"

namespace msae {

// Reverse-mode autodiff over eagerly evaluated tensor ops. Each op returns a
// Node holding its value; when grad mode is on and any input requires
// gradients, the node records its parents and a pullback that accumulates
// into parent->grad. backward() walks the graph once in reverse topological
// order. Pullbacks must skip parents with requires_grad == false, which is
// how discriminator weights stay untouched during generator updates.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> pullback;

  void ensure_grad() {
    if (grad.numel() != value.numel()) grad = Tensor(value.shape());
  }
  void zero_grad() {
    if (grad.numel() > 0) grad.fill(0);
  }
};

using NodePtr = std::shared_ptr<Node>;

NodePtr make_constant(Tensor v);
NodePtr make_param(Tensor v);

bool grad_enabled();

// RAII guard: disables graph recording in scope (inference / detached passes).
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool prev_;
};

// Seeds root->grad with 1 (root must be scalar) and runs all pullbacks.
void backward(const NodePtr& root);

// ---- elementwise / reductions ----
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr add_scalar(NodePtr a, Scalar s);
NodePtr mul_scalar(NodePtr a, Scalar s);
NodePtr sum_all(NodePtr a);
NodePtr mean_all(NodePtr a);
NodePtr relu(NodePtr a);
NodePtr leaky_relu(NodePtr a, Scalar slope);
NodePtr tanh_act(NodePtr a);
NodePtr sigmoid_act(NodePtr a);
NodePtr softplus_act(NodePtr a);
// log2(max(x, floor)); zero gradient on the clamped region
NodePtr log2_clamped(NodePtr a, Scalar floor_val);

// ---- shape ----
NodePtr reshape(NodePtr a, std::vector<int> shape);
// channels [c0, c1) of an NCHW tensor
NodePtr slice_channels(NodePtr a, int c0, int c1);

// ---- small dense algebra (entropy model) ----
NodePtr matmul(NodePtr a, NodePtr b);        // (m,k) x (k,n)
NodePtr add_col(NodePtr x, NodePtr col);     // (m,n) + broadcast (m,1)
NodePtr mul_col(NodePtr x, NodePtr col);     // (m,n) * broadcast (m,1)

// ---- image ops (NCHW) ----
// w: (Cout, Cin, kh, kw), b: (Cout) or empty node
NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad);
// w: (Cin, Cout, kh, kw)
NodePtr conv_transpose2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad,
                         int out_pad);
// gamma/beta: (C); statistics per (n, c) over spatial dims
NodePtr instance_norm(NodePtr x, NodePtr gamma, NodePtr beta, Scalar eps = 1e-5);
NodePtr upsample_bilinear(NodePtr x, int s);
NodePtr downsample_bilinear(NodePtr x, int s);

// ---- plain-tensor kernels shared by graph ops and the codec path ----
// (the upscaling operator must be bit-identical in training and coding)
Tensor upsample_bilinear_t(const Tensor& x, int s);
Tensor downsample_bilinear_t(const Tensor& x, int s);
Tensor conv2d_t(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                int pad);
Tensor conv_transpose2d_t(const Tensor& x, const Tensor& w, const Tensor& b,
                          int stride, int pad, int out_pad);
Tensor instance_norm_t(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       Scalar eps = 1e-5);

}  // namespace msae

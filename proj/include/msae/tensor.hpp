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

#include <cassert>
#include <cstdint>
#include <vector>

#include "msae/common.hpp"

namespace msae {

// Dense row-major tensor. Images and feature maps use NCHW; matrices use
// two dims; scalars use {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(count(shape_)), Scalar(0));
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, Scalar v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<Scalar> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    assert(static_cast<std::int64_t>(values.size()) == count(t.shape_));
    t.data_ = std::move(values);
    return t;
  }

  static Tensor scalar(Scalar v) { return full({1}, v); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // NCHW access.
  Scalar& at(int n, int c, int h, int w) {
    return data_[static_cast<std::size_t>(offset(n, c, h, w))];
  }
  Scalar at(int n, int c, int h, int w) const {
    return data_[static_cast<std::size_t>(offset(n, c, h, w))];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(Scalar v) {
    for (auto& x : data_) x = v;
  }

  static std::int64_t count(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

 private:
  std::int64_t offset(int n, int c, int h, int w) const {
    assert(ndim() == 4);
    return ((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  std::vector<int> shape_;
  std::vector<Scalar> data_;
};

// C (m x n) += / = alpha * op(A) * op(B); row-major buffers.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, Scalar alpha,
          const Scalar* a, const Scalar* b, Scalar beta, Scalar* c);

bool all_finite(const Tensor& t);

}  // namespace msae

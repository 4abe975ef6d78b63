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

#include "msae/tensor.hpp"

#include <cmath>

#include <Eigen/Core>

namespace msae {

namespace {
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using MapC = Eigen::Map<const Mat>;
}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, Scalar alpha,
          const Scalar* a, const Scalar* b, Scalar beta, Scalar* c) {
  MapM C(c, m, n);
  if (beta == Scalar(0)) {
    C.setZero();
  } else if (beta != Scalar(1)) {
    C *= beta;
  }
  if (!trans_a && !trans_b) {
    MapC A(a, m, k), B(b, k, n);
    C.noalias() += alpha * (A * B);
  } else if (trans_a && !trans_b) {
    MapC A(a, k, m), B(b, k, n);
    C.noalias() += alpha * (A.transpose() * B);
  } else if (!trans_a && trans_b) {
    MapC A(a, m, k), B(b, n, k);
    C.noalias() += alpha * (A * B.transpose());
  } else {
    MapC A(a, k, m), B(b, n, k);
    C.noalias() += alpha * (A.transpose() * B.transpose());
  }
}

bool all_finite(const Tensor& t) {
  const Scalar* p = t.data();
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

}  // namespace msae

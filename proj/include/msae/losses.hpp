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

#include <array>

#include "msae/networks.hpp"

namespace msae {

struct LossBundle {
  Scalar l_f = 0;
  Scalar l_g = 0;
  Scalar l_d = 0;
  std::array<Scalar, 3> distortion{};  // per scale: [k, k/2, k/4]
  std::array<Scalar, 3> rate{};        // bits per image, same order
  Scalar l_rd = 0;

  bool finite() const;
};

// Rate-distortion trade-off knobs; per-scale arrays ordered [k, k/2, k/4].
struct RDConfig {
  Scalar lambda = 10;
  std::array<Scalar, 3> alpha{1, 100, 100};
  std::array<Scalar, 3> beta{100, 1, 1};
  int s = 2;
  std::array<int, 3> c_neck{4, 1, 1};
  // Extension flag: attach adversarial + feature losses per scale instead of
  // the written form (full-resolution terms re-entering each scale's sum).
  bool per_scale_adversarial = false;

  void validate() const;
};

// Least-squares GAN objectives: f(y) = mean (y-1)^2, g(y) = mean y^2;
// the multi-map overloads average per-map means across discriminator scales.
NodePtr lsgan_f(const NodePtr& y);
NodePtr lsgan_g(const NodePtr& y);
NodePtr lsgan_f(const std::vector<NodePtr>& ys);
NodePtr lsgan_g(const std::vector<NodePtr>& ys);

// Mean squared error over all elements, in normalized pixel units.
NodePtr mse(const NodePtr& a, const NodePtr& b);
Scalar mse_t(const Tensor& a, const Tensor& b);

// lambda * mean over discriminator scales of sum over taps of the
// channel-summed, spatially averaged squared feature difference. Real taps
// enter as constants; gradients reach only the fake branch.
NodePtr feature_matching_loss(const std::vector<std::vector<Tensor>>& real_taps,
                              const std::vector<std::vector<NodePtr>>& fake_taps,
                              Scalar lambda);

// f over the discriminator's scores of the composed full-resolution fake.
NodePtr generator_adv_loss(const NodePtr& fake_full_res,
                           const MultiScaleDiscriminator& d);

// f(D(real)) + g(D(fake)); fake enters as a plain tensor, detached.
NodePtr discriminator_loss(const Tensor& real, const Tensor& fake,
                           const MultiScaleDiscriminator& d);

// Components feeding Eq-style compose of the compound loss: one adversarial /
// feature term per scale (all three alias the full-resolution node unless
// per-scale mode filled them separately).
struct RdParts {
  std::array<NodePtr, 3> l_g{};
  std::array<NodePtr, 3> l_f{};
  std::array<NodePtr, 3> dist{};
  std::array<NodePtr, 3> rate{};
};

// sum over scales i of (L_G + alpha_i d_i + L_f + beta_i H_i)
NodePtr rd_total(const RdParts& parts, const RDConfig& cfg);

}  // namespace msae

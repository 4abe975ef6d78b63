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

#include <vector>

#include "msae/tensor.hpp"

namespace msae {

// Normalized image: (N, 3, H, W) values in [-1, 1]. orig_* remember the size
// before alignment padding so decode can crop back.
struct ImageTensor {
  Tensor data;
  int orig_h = 0;
  int orig_w = 0;

  int height() const { return data.dim(2); }
  int width() const { return data.dim(3); }
};

// Three scale levels, finest first: [X_k, X_{k/s}, X_{k/(s*s)}].
struct ImagePyramid {
  std::vector<Tensor> levels;
  int scale_factor = 2;
};

constexpr int kPyramidLevels = 3;
// Encoder downsamples by 16; the coarsest level is the image / s^2.
constexpr int kEncoderStride = 16;

int alignment_multiple(int s);  // 16 * s * s

// Replicate-pads right/bottom so both spatial dims are multiples of m.
Tensor pad_to_multiple_t(const Tensor& x, int m);
ImageTensor pad_to_multiple(const ImageTensor& x, int m);

// Top-left crop back to (h, w).
Tensor crop_t(const Tensor& x, int h, int w);

// Fixed deterministic resamplers (bilinear, half-pixel centers). upscale is
// the operator used both in reconstruction and in the adversarial loss.
Tensor upscale(const Tensor& x, int s);
Tensor downscale(const Tensor& x, int s);

// Requires dims divisible by 16*s*s; level 0 is x unchanged.
ImagePyramid build_pyramid(const Tensor& x, int s);

// decoded = [A-output at k/s^2, residual decode at k/s, residual decode at k].
// Returns the level-k reconstruction, clamped to [-1, 1] at the final step
// only. Fewer than 3 entries compose a partial (lower-layer) reconstruction,
// upscaled to full resolution with zero residuals.
Tensor compose_reconstruction(const std::vector<Tensor>& decoded, int s);

Tensor clamp_unit(const Tensor& x);

}  // namespace msae

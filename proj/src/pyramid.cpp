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

#include "msae/pyramid.hpp"

#include <algorithm>

#include "msae/autodiff.hpp"

namespace msae {

int alignment_multiple(int s) { return kEncoderStride * s * s; }

Tensor pad_to_multiple_t(const Tensor& x, int m) {
  if (m < 1) throw Error("pad_to_multiple: m must be >= 1");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ph = (h + m - 1) / m * m;
  const int pw = (w + m - 1) / m * m;
  if (ph == h && pw == w) return x;
  Tensor out({n, c, ph, pw});
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, h - 1);
        for (int xo = 0; xo < pw; ++xo) {
          out.at(ni, ci, y, xo) = x.at(ni, ci, sy, std::min(xo, w - 1));
        }
      }
    }
  }
  return out;
}

ImageTensor pad_to_multiple(const ImageTensor& x, int m) {
  ImageTensor out;
  out.data = pad_to_multiple_t(x.data, m);
  out.orig_h = x.orig_h;
  out.orig_w = x.orig_w;
  return out;
}

Tensor crop_t(const Tensor& x, int h, int w) {
  const int n = x.dim(0), c = x.dim(1);
  if (h > x.dim(2) || w > x.dim(3)) throw Error("crop: target larger than source");
  if (h == x.dim(2) && w == x.dim(3)) return x;
  Tensor out({n, c, h, w});
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < h; ++y)
        for (int xo = 0; xo < w; ++xo) out.at(ni, ci, y, xo) = x.at(ni, ci, y, xo);
  return out;
}

Tensor upscale(const Tensor& x, int s) {
  if (s < 2) throw Error("upscale: scale factor must be >= 2");
  return upsample_bilinear_t(x, s);
}

Tensor downscale(const Tensor& x, int s) {
  if (s < 2) throw Error("downscale: scale factor must be >= 2");
  return downsample_bilinear_t(x, s);
}

ImagePyramid build_pyramid(const Tensor& x, int s) {
  if (s < 2) throw Error("build_pyramid: scale factor must be >= 2");
  const int m = alignment_multiple(s);
  if (x.dim(2) % m != 0 || x.dim(3) % m != 0)
    throw Error("build_pyramid: dimensions must be multiples of " + std::to_string(m) +
                "; pad first");
  ImagePyramid p;
  p.scale_factor = s;
  p.levels.reserve(kPyramidLevels);
  p.levels.push_back(x);
  for (int i = 1; i < kPyramidLevels; ++i) p.levels.push_back(downscale(p.levels.back(), s));
  return p;
}

Tensor clamp_unit(const Tensor& x) {
  Tensor out = x;
  Scalar* p = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i)
    p[i] = std::min(Scalar(1), std::max(Scalar(-1), p[i]));
  return out;
}

Tensor compose_reconstruction(const std::vector<Tensor>& decoded, int s) {
  if (decoded.empty() || decoded.size() > kPyramidLevels)
    throw Error("compose_reconstruction: need 1..3 decoded levels");
  Tensor recon = decoded[0];
  for (std::size_t i = 1; i < kPyramidLevels; ++i) {
    Tensor up = upscale(recon, s);
    if (i < decoded.size()) {
      const Tensor& res = decoded[i];
      if (!up.same_shape(res))
        throw Error("compose_reconstruction: residual shape mismatch at level " +
                    std::to_string(i));
      Scalar* p = up.data();
      const Scalar* r = res.data();
      for (std::int64_t j = 0; j < up.numel(); ++j) p[j] += r[j];
    }
    recon = std::move(up);
  }
  return clamp_unit(recon);
}

}  // namespace msae

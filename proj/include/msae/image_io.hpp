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

#include <string>
#include <vector>

#include "msae/pyramid.hpp"

namespace msae {

// Interleaved 8-bit RGB.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height
};

// PNG, JPEG or PPM (P6), picked by content. Throws DataError.
ImageU8 read_image(const std::string& path);

// PNG or PPM, picked by extension (.ppm/.pgm write PPM, everything else PNG).
void write_image(const std::string& path, const ImageU8& img);

// u8 [0,255] <-> normalized [-1,1]
ImageTensor to_image_tensor(const ImageU8& img);
ImageU8 to_image_u8(const Tensor& t);

}  // namespace msae

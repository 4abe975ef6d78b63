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

#include <cstdint>
#include <vector>

#include "msae/entropy.hpp"

namespace msae {

// Byte-oriented renormalizing range coder: 32-bit range register, 64-bit low
// with carry propagation through a pending-0xFF run, 16-bit total
// frequencies. Encoder and decoder renormalize identically, so a well-formed
// stream is consumed exactly.
class RangeEncoder {
 public:
  // [cum_lo, cum_hi) out of kCdfTotal
  void encode(std::uint32_t cum_lo, std::uint32_t cum_hi);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  RangeDecoder(const std::uint8_t* data, std::size_t size);

  // Scaled threshold in [0, kCdfTotal); search the CDF for the symbol whose
  // [cum_lo, cum_hi) contains it, then consume() that interval.
  std::uint32_t decode_threshold();
  void consume(std::uint32_t cum_lo, std::uint32_t cum_hi);

 private:
  std::uint8_t read_byte();

  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

void encode_symbol(RangeEncoder& enc, const CdfTable& table, int value);
int decode_symbol(RangeDecoder& dec, const CdfTable& table);

// values[i] coded with cdfs[i]; every value must lie inside its table's
// alphabet (the encoder clips latents before coding).
std::vector<std::uint8_t> range_encode(const std::vector<int>& values,
                                       const std::vector<const CdfTable*>& cdfs);
std::vector<int> range_decode(const std::vector<std::uint8_t>& bytes, std::size_t n,
                              const std::vector<const CdfTable*>& cdfs);

}  // namespace msae

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

#include "msae/range_coder.hpp"

#include <algorithm>

namespace msae {

namespace {
constexpr std::uint32_t kTopValue = 1u << 24;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t byte = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(byte + carry));
      byte = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
  }
  ++cache_size_;
  low_ = (low_ << 8) & 0xFFFFFFFFull;
}

void RangeEncoder::encode(std::uint32_t cum_lo, std::uint32_t cum_hi) {
  if (finished_) throw Error("range encoder already finished");
  if (cum_lo >= cum_hi || cum_hi > kCdfTotal) throw Error("range encoder: bad interval");
  range_ /= kCdfTotal;
  low_ += static_cast<std::uint64_t>(cum_lo) * range_;
  range_ *= cum_hi - cum_lo;
  while (range_ < kTopValue) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  if (finished_) throw Error("range encoder already finished");
  finished_ = true;
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const std::uint8_t* data, std::size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | read_byte();
}

std::uint8_t RangeDecoder::read_byte() {
  if (pos_ >= size_) throw CorruptStreamError("range decoder: truncated payload");
  return data_[pos_++];
}

std::uint32_t RangeDecoder::decode_threshold() {
  range_ /= kCdfTotal;
  const std::uint32_t t = code_ / range_;
  if (t >= kCdfTotal) throw CorruptStreamError("range decoder: corrupt payload");
  return t;
}

void RangeDecoder::consume(std::uint32_t cum_lo, std::uint32_t cum_hi) {
  // uint32 wraparound pairs with the encoder's carry propagation
  code_ -= cum_lo * range_;
  range_ *= cum_hi - cum_lo;
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | read_byte();
    range_ <<= 8;
  }
}

void encode_symbol(RangeEncoder& enc, const CdfTable& table, int value) {
  if (value < table.v_min - 1 || value > table.v_max + 1)
    throw Error("range encoder: symbol outside table support");
  const int sym = table.symbol_of(value);
  enc.encode(table.cum[static_cast<std::size_t>(sym)],
             table.cum[static_cast<std::size_t>(sym) + 1]);
}

int decode_symbol(RangeDecoder& dec, const CdfTable& table) {
  const std::uint32_t t = dec.decode_threshold();
  // last index i with cum[i] <= t
  const auto it = std::upper_bound(table.cum.begin(), table.cum.end(), t);
  const int sym = static_cast<int>(it - table.cum.begin()) - 1;
  dec.consume(table.cum[static_cast<std::size_t>(sym)],
              table.cum[static_cast<std::size_t>(sym) + 1]);
  return table.value_of(sym);
}

std::vector<std::uint8_t> range_encode(const std::vector<int>& values,
                                       const std::vector<const CdfTable*>& cdfs) {
  if (values.size() != cdfs.size()) throw Error("range_encode: table/value count mismatch");
  RangeEncoder enc;
  for (std::size_t i = 0; i < values.size(); ++i) encode_symbol(enc, *cdfs[i], values[i]);
  return enc.finish();
}

std::vector<int> range_decode(const std::vector<std::uint8_t>& bytes, std::size_t n,
                              const std::vector<const CdfTable*>& cdfs) {
  if (n != cdfs.size()) throw Error("range_decode: table/count mismatch");
  RangeDecoder dec(bytes.data(), bytes.size());
  std::vector<int> values;
  values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) values.push_back(decode_symbol(dec, *cdfs[i]));
  return values;
}

}  // namespace msae

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
#include <random>
#include <stdexcept>
#include <string>

namespace msae {

// All numerical work runs in double precision: gradient checks against
// central differences and bit-exact encoder/decoder agreement both depend
// on it, and the desk-scale networks are small enough that it is cheap.
using Scalar = double;

using Rng = std::mt19937_64;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable inputs, empty datasets, malformed files.
struct DataError : Error {
  using Error::Error;
};

// Bad command lines and invalid configuration values.
struct UsageError : Error {
  using Error::Error;
};

// Bitstream does not belong to the loaded model (fingerprint or bottleneck
// layout disagrees).
struct ModelMismatchError : Error {
  using Error::Error;
};

// Damaged or truncated bitstream payloads.
struct CorruptStreamError : DataError {
  using DataError::DataError;
};

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace msae

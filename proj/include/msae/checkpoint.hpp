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

#include <map>
#include <string>
#include <vector>

#include "msae/tensor.hpp"

namespace msae {

// Flat binary archive keyed by module path. Tensors round-trip bit-exactly
// (raw little-endian doubles). Entries are written in key order, so two
// archives with equal contents are byte-identical.
class Archive {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  void put_tensor(const std::string& key, const Tensor& t);
  void put_bytes(const std::string& key, std::vector<std::uint8_t> bytes);
  void put_string(const std::string& key, const std::string& s);
  void put_u64(const std::string& key, std::uint64_t v);
  void put_i64(const std::string& key, std::int64_t v);
  void put_f64(const std::string& key, Scalar v);

  bool has(const std::string& key) const;
  const Tensor& get_tensor(const std::string& key) const;
  const std::vector<std::uint8_t>& get_bytes(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  Scalar get_f64(const std::string& key) const;

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  void save(const std::string& path) const;
  static Archive load(const std::string& path);

 private:
  struct Entry {
    std::uint8_t kind = 0;  // 0 tensor, 1 bytes, 2 string, 3 u64, 4 i64, 5 f64
    Tensor tensor;
    std::vector<std::uint8_t> bytes;
    std::string str;
    std::uint64_t u64 = 0;
    std::int64_t i64 = 0;
    Scalar f64 = 0;
  };

  const Entry& find(const std::string& key, std::uint8_t kind) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace msae

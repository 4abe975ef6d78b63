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

#include "msae/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace msae {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'A', 'E', 'C', 'K', 'P', 'T'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void Archive::put_tensor(const std::string& key, const Tensor& t) {
  Entry e;
  e.kind = 0;
  e.tensor = t;
  entries_[key] = std::move(e);
}

void Archive::put_bytes(const std::string& key, std::vector<std::uint8_t> bytes) {
  Entry e;
  e.kind = 1;
  e.bytes = std::move(bytes);
  entries_[key] = std::move(e);
}

void Archive::put_string(const std::string& key, const std::string& s) {
  Entry e;
  e.kind = 2;
  e.str = s;
  entries_[key] = std::move(e);
}

void Archive::put_u64(const std::string& key, std::uint64_t v) {
  Entry e;
  e.kind = 3;
  e.u64 = v;
  entries_[key] = std::move(e);
}

void Archive::put_i64(const std::string& key, std::int64_t v) {
  Entry e;
  e.kind = 4;
  e.i64 = v;
  entries_[key] = std::move(e);
}

void Archive::put_f64(const std::string& key, Scalar v) {
  Entry e;
  e.kind = 5;
  e.f64 = v;
  entries_[key] = std::move(e);
}

bool Archive::has(const std::string& key) const { return entries_.count(key) != 0; }

const Archive::Entry& Archive::find(const std::string& key, std::uint8_t kind) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw DataError("checkpoint: missing key " + key);
  if (it->second.kind != kind) throw DataError("checkpoint: wrong type for key " + key);
  return it->second;
}

const Tensor& Archive::get_tensor(const std::string& key) const { return find(key, 0).tensor; }
const std::vector<std::uint8_t>& Archive::get_bytes(const std::string& key) const {
  return find(key, 1).bytes;
}
const std::string& Archive::get_string(const std::string& key) const { return find(key, 2).str; }
std::uint64_t Archive::get_u64(const std::string& key) const { return find(key, 3).u64; }
std::int64_t Archive::get_i64(const std::string& key) const { return find(key, 4).i64; }
Scalar Archive::get_f64(const std::string& key) const { return find(key, 5).f64; }

std::vector<std::string> Archive::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    (void)entry;
    if (key.compare(0, prefix.size(), prefix) == 0) out.push_back(key);
  }
  return out;
}

void Archive::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  write_u32(out, kFormatVersion);
  write_u64(out, entries_.size());
  for (const auto& [key, e] : entries_) {
    write_u32(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    out.put(static_cast<char>(e.kind));
    switch (e.kind) {
      case 0: {
        out.put(static_cast<char>(e.tensor.ndim()));
        for (int i = 0; i < e.tensor.ndim(); ++i)
          write_u32(out, static_cast<std::uint32_t>(e.tensor.dim(i)));
        out.write(reinterpret_cast<const char*>(e.tensor.data()),
                  static_cast<std::streamsize>(e.tensor.numel() * sizeof(Scalar)));
        break;
      }
      case 1:
        write_u64(out, e.bytes.size());
        out.write(reinterpret_cast<const char*>(e.bytes.data()),
                  static_cast<std::streamsize>(e.bytes.size()));
        break;
      case 2:
        write_u64(out, e.str.size());
        out.write(e.str.data(), static_cast<std::streamsize>(e.str.size()));
        break;
      case 3:
        write_u64(out, e.u64);
        break;
      case 4:
        write_u64(out, static_cast<std::uint64_t>(e.i64));
        break;
      case 5: {
        std::uint64_t bits;
        std::memcpy(&bits, &e.f64, 8);
        write_u64(out, bits);
        break;
      }
      default:
        throw Error("checkpoint: unknown entry kind");
    }
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    throw DataError("unsupported checkpoint version in " + path);
  const std::uint64_t count = read_u64(in);
  Archive a;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t klen = read_u32(in);
    std::string key(klen, '\0');
    in.read(key.data(), klen);
    const int kind = in.get();
    if (!in || kind < 0) throw DataError("checkpoint: truncated");
    Entry e;
    e.kind = static_cast<std::uint8_t>(kind);
    switch (kind) {
      case 0: {
        const int ndim = in.get();
        if (ndim < 0 || ndim > 8) throw DataError("checkpoint: bad tensor rank");
        std::vector<int> shape(static_cast<std::size_t>(ndim));
        for (auto& d : shape) d = static_cast<int>(read_u32(in));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(Scalar)));
        if (!in) throw DataError("checkpoint: truncated tensor");
        e.tensor = std::move(t);
        break;
      }
      case 1: {
        e.bytes.resize(read_u64(in));
        in.read(reinterpret_cast<char*>(e.bytes.data()),
                static_cast<std::streamsize>(e.bytes.size()));
        break;
      }
      case 2: {
        e.str.resize(read_u64(in));
        in.read(e.str.data(), static_cast<std::streamsize>(e.str.size()));
        break;
      }
      case 3:
        e.u64 = read_u64(in);
        break;
      case 4:
        e.i64 = static_cast<std::int64_t>(read_u64(in));
        break;
      case 5: {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&e.f64, &bits, 8);
        break;
      }
      default:
        throw DataError("checkpoint: unknown entry kind");
    }
    if (!in) throw DataError("checkpoint: truncated");
    a.entries_[key] = std::move(e);
  }
  return a;
}

}  // namespace msae

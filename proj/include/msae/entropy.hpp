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

#include <functional>
#include <optional>

#include "msae/networks.hpp"

namespace msae {

enum class QuantizerMode { kNoise, kRound };

// Noise relaxation during training, half-away-from-zero rounding at
// inference. Noise mode requires an rng.
LatentCode quantize(const LatentCode& w, QuantizerMode mode, Rng* rng = nullptr);

// Graph-side noise relaxation: x + u, u ~ U(-0.5, 0.5) i.i.d. (the noise is a
// constant w.r.t. gradients).
NodePtr add_uniform_noise(const NodePtr& x, Rng& rng);

constexpr std::uint32_t kCdfTotal = 1u << 16;
constexpr Scalar kProbabilityFloor = Scalar(1) / kCdfTotal;

// p(v) = c(v + 0.5) - c(v - 0.5) for an arbitrary univariate CDF; the same
// interval-mass rule the model uses, exposed so tests can drive it with
// closed-form CDFs.
inline Scalar cdf_interval_mass(const std::function<Scalar(Scalar)>& c, Scalar v) {
  return c(v + Scalar(0.5)) - c(v - Scalar(0.5));
}

// Quantized per-channel CDF for the range coder. The alphabet spans
// [v_min - 1, v_max + 1]; the two extremes absorb the tail mass. cum has
// alphabet()+1 entries, cum[0] = 0, cum.back() = 2^16, strictly increasing.
struct CdfTable {
  int v_min = 0;
  int v_max = 0;
  std::vector<std::uint32_t> cum;

  int alphabet() const { return v_max - v_min + 3; }
  int symbol_of(int v) const {
    const int lo = v_min - 1, hi = v_max + 1;
    return std::min(std::max(v, lo), hi) - lo;
  }
  int value_of(int sym) const { return sym + v_min - 1; }
  std::uint32_t count(int sym) const {
    return cum[static_cast<std::size_t>(sym) + 1] - cum[static_cast<std::size_t>(sym)];
  }
};

// Learned univariate density per bottleneck channel: a monotone composition
// of 4 learnable layers squashed by a sigmoid, following the usual
// nonparametric factorized-prior construction.
class EntropyModel {
 public:
  static constexpr int kLayers = 4;

  EntropyModel() = default;
  EntropyModel(int channels, Rng& rng, int hidden = 3, Scalar init_scale = 10);

  int channels() const { return channels_; }
  int hidden() const { return hidden_; }

  // Analytic CDF c_j(x); shared by the rate term, the support scan and the
  // coding tables.
  Scalar cdf_value(int channel, Scalar x) const;

  // Graph CDF of a (1, M) row of values for one channel.
  NodePtr cdf(NodePtr row, int channel) const;

  // Total bits -sum log2 p over every element of an (N, C, h, w) latent node.
  NodePtr rate_bits_node(const NodePtr& latent) const;

  // Frozen coding support, per channel (set by freeze()).
  bool frozen() const { return !supports_.empty(); }
  const std::vector<std::pair<int, int>>& supports() const { return supports_; }
  void set_supports(std::vector<std::pair<int, int>> s) { supports_ = std::move(s); }

  // Smallest integer interval holding all but 2^-16 of the mass per channel.
  // Throws if a channel needs more than 2^15 symbols.
  void freeze();

  void collect(const std::string& prefix, ParamList& out) const;
  ParamList params(const std::string& prefix) const;

 private:
  struct ChannelParams {
    std::vector<NodePtr> h_raw;  // kLayers matrices
    std::vector<NodePtr> b;      // kLayers columns
    std::vector<NodePtr> a_raw;  // kLayers-1 columns
  };

  int channels_ = 0;
  int hidden_ = 3;
  std::vector<ChannelParams> ch_;
  std::vector<std::pair<int, int>> supports_;
};

// Per-element probabilities of a quantized latent (clipped to the frozen
// support when present); values in (0, 1], floored at 2^-16.
Tensor likelihood(const LatentCode& w_hat, const EntropyModel& model);

// -sum log2 likelihood, in bits.
Scalar rate_bits(const LatentCode& w_hat, const EntropyModel& model);

// Quantized 16-bit-total CDF tables for every channel; requires a frozen
// model. Deterministic given the model parameters.
std::vector<CdfTable> build_cdf_tables(const EntropyModel& model);

// Ideal codelength of a symbol sequence under the quantized table
// probabilities (the reference the coded length is compared against).
Scalar table_rate_bits(const std::vector<int>& values, const CdfTable& table);

// Clip latent values into the table alphabet; returns how many were clipped.
std::int64_t clip_to_support(Tensor& values, int channel_dim_index,
                             const std::vector<std::pair<int, int>>& supports);

}  // namespace msae

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

#include "msae/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace msae {

namespace {

constexpr Scalar kGraphProbFloor = 1e-12;  // keeps rate gradients alive
constexpr Scalar kTailPerSide = Scalar(1) / (2 * kCdfTotal);  // 2^-17
constexpr int kSupportScanLimit = 1 << 15;

Scalar softplus(Scalar x) { return x > 30 ? x : std::log1p(std::exp(x)); }
Scalar sigmoid(Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); }

}  // namespace

LatentCode quantize(const LatentCode& w, QuantizerMode mode, Rng* rng) {
  if (w.quantized) throw Error("quantize: latent already quantized");
  LatentCode out;
  out.scale_id = w.scale_id;
  out.values = w.values;
  Scalar* p = out.values.data();
  if (mode == QuantizerMode::kNoise) {
    if (rng == nullptr) throw Error("quantize: noise mode requires an rng");
    std::uniform_real_distribution<Scalar> u(-0.5, 0.5);
    for (std::int64_t i = 0; i < out.values.numel(); ++i) p[i] += u(*rng);
    out.quantized = false;
  } else {
    for (std::int64_t i = 0; i < out.values.numel(); ++i) p[i] = std::round(p[i]);
    out.quantized = true;
  }
  return out;
}

NodePtr add_uniform_noise(const NodePtr& x, Rng& rng) {
  Tensor noise(x->value.shape());
  std::uniform_real_distribution<Scalar> u(-0.5, 0.5);
  for (std::int64_t i = 0; i < noise.numel(); ++i) noise[i] = u(rng);
  return add(x, make_constant(std::move(noise)));
}

// ------------------------------------------------------------ EntropyModel

EntropyModel::EntropyModel(int channels, Rng& rng, int hidden, Scalar init_scale)
    : channels_(channels), hidden_(hidden) {
  const Scalar scale = std::pow(init_scale, Scalar(1) / kLayers);
  std::uniform_real_distribution<Scalar> u(-0.5, 0.5);
  ch_.resize(static_cast<std::size_t>(channels));
  for (auto& cp : ch_) {
    for (int l = 0; l < kLayers; ++l) {
      const int rin = (l == 0) ? 1 : hidden;
      const int rout = (l == kLayers - 1) ? 1 : hidden;
      const Scalar init = std::log(std::expm1(Scalar(1) / scale / rout));
      cp.h_raw.push_back(make_param(Tensor::full({rout, rin}, init)));
      Tensor bias({rout, 1});
      for (std::int64_t i = 0; i < bias.numel(); ++i) bias[i] = u(rng);
      cp.b.push_back(make_param(std::move(bias)));
      if (l < kLayers - 1) cp.a_raw.push_back(make_param(Tensor({rout, 1})));
    }
  }
}

Scalar EntropyModel::cdf_value(int channel, Scalar x) const {
  const auto& cp = ch_[static_cast<std::size_t>(channel)];
  std::vector<Scalar> v{x}, next;
  for (int l = 0; l < kLayers; ++l) {
    const Tensor& h = cp.h_raw[static_cast<std::size_t>(l)]->value;
    const Tensor& b = cp.b[static_cast<std::size_t>(l)]->value;
    const int rout = h.dim(0), rin = h.dim(1);
    next.assign(static_cast<std::size_t>(rout), 0);
    for (int i = 0; i < rout; ++i) {
      Scalar s = b[i];
      for (int j = 0; j < rin; ++j)
        s += softplus(h[static_cast<std::int64_t>(i) * rin + j]) * v[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = s;
    }
    if (l < kLayers - 1) {
      const Tensor& a = cp.a_raw[static_cast<std::size_t>(l)]->value;
      for (int i = 0; i < rout; ++i)
        next[static_cast<std::size_t>(i)] +=
            std::tanh(a[i]) * std::tanh(next[static_cast<std::size_t>(i)]);
    }
    v.swap(next);
  }
  return sigmoid(v[0]);
}

NodePtr EntropyModel::cdf(NodePtr row, int channel) const {
  const auto& cp = ch_[static_cast<std::size_t>(channel)];
  NodePtr v = std::move(row);
  for (int l = 0; l < kLayers; ++l) {
    NodePtr hp = softplus_act(cp.h_raw[static_cast<std::size_t>(l)]);
    v = add_col(matmul(hp, v), cp.b[static_cast<std::size_t>(l)]);
    if (l < kLayers - 1) {
      NodePtr gate = tanh_act(cp.a_raw[static_cast<std::size_t>(l)]);
      v = add(v, mul_col(tanh_act(v), gate));
    }
  }
  return sigmoid_act(v);
}

NodePtr EntropyModel::rate_bits_node(const NodePtr& latent) const {
  const Tensor& v = latent->value;
  if (v.dim(1) != channels_) throw Error("rate_bits: channel count mismatch");
  const int m = static_cast<int>(v.numel() / v.dim(1));
  NodePtr total;
  for (int c = 0; c < channels_; ++c) {
    NodePtr row = reshape(slice_channels(latent, c, c + 1), {1, m});
    NodePtr hi = cdf(add_scalar(row, Scalar(0.5)), c);
    NodePtr lo = cdf(add_scalar(row, Scalar(-0.5)), c);
    NodePtr bits = mul_scalar(sum_all(log2_clamped(sub(hi, lo), kGraphProbFloor)), -1);
    total = total ? add(total, bits) : bits;
  }
  return total;
}

void EntropyModel::freeze() {
  supports_.clear();
  supports_.reserve(static_cast<std::size_t>(channels_));
  for (int c = 0; c < channels_; ++c) {
    int lo = 0, hi = 0;
    while (cdf_value(c, lo - Scalar(0.5)) > kTailPerSide && lo > -kSupportScanLimit) --lo;
    while (Scalar(1) - cdf_value(c, hi + Scalar(0.5)) > kTailPerSide &&
           hi < kSupportScanLimit)
      ++hi;
    while (lo < hi && cdf_value(c, lo + Scalar(0.5)) <= kTailPerSide) ++lo;
    while (hi > lo && Scalar(1) - cdf_value(c, hi - Scalar(0.5)) <= kTailPerSide) --hi;
    if (hi - lo + 3 > (1 << 15))
      throw Error("entropy model: channel support wider than the coder limit");
    supports_.emplace_back(lo, hi);
  }
}

void EntropyModel::collect(const std::string& prefix, ParamList& out) const {
  for (int c = 0; c < channels_; ++c) {
    const auto& cp = ch_[static_cast<std::size_t>(c)];
    const std::string cpfx = prefix + "/ch" + std::to_string(c);
    for (int l = 0; l < kLayers; ++l) {
      out.push_back({cpfx + "/h" + std::to_string(l), cp.h_raw[static_cast<std::size_t>(l)]});
      out.push_back({cpfx + "/b" + std::to_string(l), cp.b[static_cast<std::size_t>(l)]});
      if (l < kLayers - 1)
        out.push_back({cpfx + "/a" + std::to_string(l), cp.a_raw[static_cast<std::size_t>(l)]});
    }
  }
}

ParamList EntropyModel::params(const std::string& prefix) const {
  ParamList out;
  collect(prefix, out);
  return out;
}

// -------------------------------------------------------------- evaluation

Tensor likelihood(const LatentCode& w_hat, const EntropyModel& model) {
  const Tensor& v = w_hat.values;
  if (v.dim(1) != model.channels()) throw Error("likelihood: channel count mismatch");
  Tensor out(v.shape());
  const int n = v.dim(0), c = v.dim(1);
  const std::int64_t plane = static_cast<std::int64_t>(v.dim(2)) * v.dim(3);
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const std::int64_t base = (static_cast<std::int64_t>(ni) * c + ci) * plane;
      Scalar lo_clip = -std::numeric_limits<Scalar>::infinity();
      Scalar hi_clip = std::numeric_limits<Scalar>::infinity();
      if (model.frozen()) {
        lo_clip = model.supports()[static_cast<std::size_t>(ci)].first - 1;
        hi_clip = model.supports()[static_cast<std::size_t>(ci)].second + 1;
      }
      auto c_fn = [&](Scalar x) { return model.cdf_value(ci, x); };
      for (std::int64_t i = 0; i < plane; ++i) {
        Scalar x = std::min(std::max(v[base + i], lo_clip), hi_clip);
        out[base + i] = std::max(cdf_interval_mass(c_fn, x), kProbabilityFloor);
      }
    }
  }
  return out;
}

Scalar rate_bits(const LatentCode& w_hat, const EntropyModel& model) {
  Tensor p = likelihood(w_hat, model);
  Scalar bits = 0;
  for (std::int64_t i = 0; i < p.numel(); ++i) bits -= std::log2(p[i]);
  return bits;
}

std::vector<CdfTable> build_cdf_tables(const EntropyModel& model) {
  if (!model.frozen()) throw Error("build_cdf_tables: model support not frozen");
  std::vector<CdfTable> tables;
  tables.reserve(static_cast<std::size_t>(model.channels()));
  for (int c = 0; c < model.channels(); ++c) {
    const auto [lo, hi] = model.supports()[static_cast<std::size_t>(c)];
    CdfTable t;
    t.v_min = lo;
    t.v_max = hi;
    const int n = t.alphabet();
    std::vector<Scalar> prob(static_cast<std::size_t>(n));
    prob[0] = model.cdf_value(c, lo - Scalar(0.5));
    for (int v = lo; v <= hi; ++v)
      prob[static_cast<std::size_t>(v - lo + 1)] =
          model.cdf_value(c, v + Scalar(0.5)) - model.cdf_value(c, v - Scalar(0.5));
    prob[static_cast<std::size_t>(n - 1)] = Scalar(1) - model.cdf_value(c, hi + Scalar(0.5));

    // floor then fix the sum to exactly 2^16, every symbol keeping >= 1
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(n));
    std::int64_t sum = 0;
    for (int i = 0; i < n; ++i) {
      Scalar p = std::max(prob[static_cast<std::size_t>(i)], Scalar(0));
      auto q = static_cast<std::uint32_t>(std::floor(p * kCdfTotal));
      counts[static_cast<std::size_t>(i)] = std::max(q, 1u);
      sum += counts[static_cast<std::size_t>(i)];
    }
    std::int64_t diff = static_cast<std::int64_t>(kCdfTotal) - sum;
    while (diff != 0) {
      auto it = std::max_element(counts.begin(), counts.end());
      if (diff > 0) {
        *it += static_cast<std::uint32_t>(diff);
        diff = 0;
      } else {
        std::int64_t take = std::min<std::int64_t>(-diff, *it - 1);
        if (take == 0) throw Error("build_cdf_tables: cannot normalize counts");
        *it -= static_cast<std::uint32_t>(take);
        diff += take;
      }
    }
    t.cum.resize(static_cast<std::size_t>(n) + 1);
    t.cum[0] = 0;
    for (int i = 0; i < n; ++i)
      t.cum[static_cast<std::size_t>(i) + 1] =
          t.cum[static_cast<std::size_t>(i)] + counts[static_cast<std::size_t>(i)];
    tables.push_back(std::move(t));
  }
  return tables;
}

Scalar table_rate_bits(const std::vector<int>& values, const CdfTable& table) {
  Scalar bits = 0;
  for (int v : values) {
    const int sym = table.symbol_of(v);
    bits -= std::log2(static_cast<Scalar>(table.count(sym)) / kCdfTotal);
  }
  return bits;
}

std::int64_t clip_to_support(Tensor& values, int /*channel_dim_index*/,
                             const std::vector<std::pair<int, int>>& supports) {
  const int n = values.dim(0), c = values.dim(1);
  const std::int64_t plane = static_cast<std::int64_t>(values.dim(2)) * values.dim(3);
  std::int64_t clipped = 0;
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const Scalar lo = supports[static_cast<std::size_t>(ci)].first - 1;
      const Scalar hi = supports[static_cast<std::size_t>(ci)].second + 1;
      Scalar* p = values.data() + (static_cast<std::int64_t>(ni) * c + ci) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        if (p[i] < lo || p[i] > hi) {
          p[i] = std::min(std::max(p[i], lo), hi);
          ++clipped;
        }
      }
    }
  }
  return clipped;
}

}  // namespace msae

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

#include "msae/networks.hpp"

#include <algorithm>

namespace msae {

namespace {

constexpr Scalar kLeakySlope = 0.2;
constexpr Scalar kInitStd = 0.02;

Tensor normal_init(std::vector<int> shape, Rng& rng, Scalar stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<Scalar> dist(0, stddev);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace

std::int64_t param_count(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.node->value.numel();
  return n;
}

void set_requires_grad(const ParamList& params, bool on) {
  for (const auto& p : params) p.node->requires_grad = on;
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) p.node->zero_grad();
}

std::array<int, 5> encoder_channels(const AutoencoderSpec& spec) {
  std::array<int, 5> ch{};
  for (int i = 0; i < 4; ++i) ch[static_cast<std::size_t>(i)] = std::min(spec.base_channels << i, spec.trunk_channels);
  ch[4] = spec.trunk_channels;
  return ch;
}

Conv2dLayer::Conv2dLayer(int cin, int cout, int k, int stride_, int pad_, Rng& rng)
    : w(make_param(normal_init({cout, cin, k, k}, rng, kInitStd))),
      b(make_param(Tensor({cout}))),
      stride(stride_),
      pad(pad_) {}

void Conv2dLayer::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "/w", w});
  out.push_back({prefix + "/b", b});
}

ConvT2dLayer::ConvT2dLayer(int cin, int cout, int k, int stride_, int pad_,
                           int out_pad_, Rng& rng)
    : w(make_param(normal_init({cin, cout, k, k}, rng, kInitStd))),
      b(make_param(Tensor({cout}))),
      stride(stride_),
      pad(pad_),
      out_pad(out_pad_) {}

void ConvT2dLayer::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "/w", w});
  out.push_back({prefix + "/b", b});
}

InstanceNormLayer::InstanceNormLayer(int channels)
    : gamma(make_param(Tensor::full({channels}, 1))), beta(make_param(Tensor({channels}))) {}

void InstanceNormLayer::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "/gamma", gamma});
  out.push_back({prefix + "/beta", beta});
}

// ----------------------------------------------------------------- Encoder

Encoder::Encoder(const AutoencoderSpec& spec, Rng& rng) : spec_(spec) {
  const auto ch = encoder_channels(spec);
  conv_in_ = Conv2dLayer(3, ch[0], 7, 1, 3, rng);
  norm_in_ = InstanceNormLayer(ch[0]);
  for (int i = 0; i < 4; ++i) {
    down_[static_cast<std::size_t>(i)] =
        Conv2dLayer(ch[static_cast<std::size_t>(i)], ch[static_cast<std::size_t>(i) + 1], 3, 2, 1, rng);
    down_norm_[static_cast<std::size_t>(i)] = InstanceNormLayer(ch[static_cast<std::size_t>(i) + 1]);
  }
  to_neck_ = Conv2dLayer(ch[4], spec.c_neck, 3, 1, 1, rng);
}

Encoder::Result Encoder::forward(const NodePtr& x) const {
  const Tensor& v = x->value;
  if (v.dim(2) % kEncoderStride != 0 || v.dim(3) % kEncoderStride != 0)
    throw Error("encode: input dimensions must be multiples of 16");
  NodePtr h = leaky_relu(norm_in_(conv_in_(x)), kLeakySlope);
  for (std::size_t i = 0; i < down_.size(); ++i)
    h = leaky_relu(down_norm_[i](down_[i](h)), kLeakySlope);
  Result r;
  r.trunk_shape = {h->value.dim(1), h->value.dim(2), h->value.dim(3)};
  r.latent = to_neck_(h);
  return r;
}

Tensor Encoder::forward_t(const Tensor& x) const {
  NoGrad ng;
  return forward(make_constant(x)).latent->value;
}

void Encoder::collect(const std::string& prefix, ParamList& out) const {
  conv_in_.collect(prefix + "/conv_in", out);
  norm_in_.collect(prefix + "/norm_in", out);
  for (std::size_t i = 0; i < down_.size(); ++i) {
    down_[i].collect(prefix + "/down" + std::to_string(i), out);
    down_norm_[i].collect(prefix + "/down_norm" + std::to_string(i), out);
  }
  to_neck_.collect(prefix + "/to_neck", out);
}

// ----------------------------------------------------------------- Decoder

Decoder::Decoder(const AutoencoderSpec& spec, Rng& rng) : spec_(spec) {
  const auto ch = encoder_channels(spec);
  from_neck_ = Conv2dLayer(spec.c_neck, ch[4], 3, 1, 1, rng);
  norm_in_ = InstanceNormLayer(ch[4]);
  blocks_.resize(static_cast<std::size_t>(spec.n_res_blocks));
  for (auto& blk : blocks_) {
    blk.conv1 = Conv2dLayer(ch[4], ch[4], 3, 1, 1, rng);
    blk.norm1 = InstanceNormLayer(ch[4]);
    blk.conv2 = Conv2dLayer(ch[4], ch[4], 3, 1, 1, rng);
    blk.norm2 = InstanceNormLayer(ch[4]);
  }
  for (int i = 0; i < 4; ++i) {
    up_[static_cast<std::size_t>(i)] =
        ConvT2dLayer(ch[static_cast<std::size_t>(4 - i)], ch[static_cast<std::size_t>(3 - i)], 3, 2, 1, 1, rng);
    up_norm_[static_cast<std::size_t>(i)] = InstanceNormLayer(ch[static_cast<std::size_t>(3 - i)]);
  }
  conv_out_ = Conv2dLayer(ch[0], 3, 7, 1, 3, rng);
}

NodePtr Decoder::forward(const NodePtr& latent) const {
  NodePtr h = relu(norm_in_(from_neck_(latent)));
  for (const auto& blk : blocks_) {
    NodePtr r = relu(blk.norm1(blk.conv1(h)));
    r = blk.norm2(blk.conv2(r));
    h = add(h, r);
  }
  for (std::size_t i = 0; i < up_.size(); ++i) h = relu(up_norm_[i](up_[i](h)));
  return tanh_act(conv_out_(h));
}

Tensor Decoder::forward_t(const Tensor& latent) const {
  NoGrad ng;
  return forward(make_constant(latent))->value;
}

void Decoder::collect(const std::string& prefix, ParamList& out) const {
  from_neck_.collect(prefix + "/from_neck", out);
  norm_in_.collect(prefix + "/norm_in", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string bp = prefix + "/res" + std::to_string(i);
    blocks_[i].conv1.collect(bp + "/conv1", out);
    blocks_[i].norm1.collect(bp + "/norm1", out);
    blocks_[i].conv2.collect(bp + "/conv2", out);
    blocks_[i].norm2.collect(bp + "/norm2", out);
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    up_[i].collect(prefix + "/up" + std::to_string(i), out);
    up_norm_[i].collect(prefix + "/up_norm" + std::to_string(i), out);
  }
  conv_out_.collect(prefix + "/conv_out", out);
}

void Autoencoder::collect(const std::string& prefix, ParamList& out) const {
  enc_.collect(prefix + "/enc", out);
  dec_.collect(prefix + "/dec", out);
}

LatentCode encode(const Tensor& x, const Autoencoder& ae, ScaleId scale) {
  LatentCode code;
  code.values = ae.encoder().forward_t(x);
  code.scale_id = scale;
  code.quantized = false;
  return code;
}

Tensor decode(const LatentCode& w, const Autoencoder& ae) {
  return ae.decoder().forward_t(w.values);
}

// ----------------------------------------------------- PatchDiscriminator

PatchDiscriminator::PatchDiscriminator(const DiscriminatorSpec& spec, Rng& rng)
    : spec_(spec) {
  int cin = 3;
  for (int i = 0; i < spec.n_layers; ++i) {
    const int cout = std::min(spec.base_channels << i, spec.base_channels * 8);
    convs_.emplace_back(cin, cout, 3, 2, 1, rng);
    if (i > 0) norms_.emplace_back(cout);
    cin = cout;
  }
  score_ = Conv2dLayer(cin, 1, 3, 1, 1, rng);
}

PatchDiscriminator::Result PatchDiscriminator::forward(const NodePtr& x) const {
  Result r;
  NodePtr h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    if (i > 0) h = norms_[i - 1](h);
    h = leaky_relu(h, kLeakySlope);
    r.taps.push_back(h);
  }
  r.score = score_(h);
  return r;
}

void PatchDiscriminator::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(prefix + "/conv" + std::to_string(i), out);
    if (i > 0) norms_[i - 1].collect(prefix + "/norm" + std::to_string(i), out);
  }
  score_.collect(prefix + "/score", out);
}

// ------------------------------------------------ MultiScaleDiscriminator

MultiScaleDiscriminator::MultiScaleDiscriminator(const DiscriminatorSpec& spec, Rng& rng)
    : spec_(spec) {
  for (int i = 0; i < spec.n_scales; ++i) subs_.emplace_back(spec, rng);
}

std::vector<PatchDiscriminator::Result> MultiScaleDiscriminator::forward(
    const NodePtr& x) const {
  if (x->value.dim(2) % 4 != 0 || x->value.dim(3) % 4 != 0)
    throw Error("discriminate: input dimensions must be divisible by 4");
  std::vector<PatchDiscriminator::Result> results;
  NodePtr input = x;
  for (std::size_t i = 0; i < subs_.size(); ++i) {
    if (i > 0) input = downsample_bilinear(input, 2);
    results.push_back(subs_[i].forward(input));
  }
  return results;
}

void MultiScaleDiscriminator::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < subs_.size(); ++i)
    subs_[i].collect(prefix + "/scale" + std::to_string(i), out);
}

std::vector<PatchDiscriminator::Result> discriminate(const Tensor& x,
                                                     const MultiScaleDiscriminator& d) {
  return d.forward(make_constant(x));
}

}  // namespace msae

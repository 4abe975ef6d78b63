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

#include <array>
#include <string>
#include <vector>

#include "msae/autodiff.hpp"
#include "msae/pyramid.hpp"

namespace msae {

struct ParamEntry {
  std::string name;
  NodePtr node;
};
using ParamList = std::vector<ParamEntry>;

std::int64_t param_count(const ParamList& params);
void set_requires_grad(const ParamList& params, bool on);
void zero_grads(const ParamList& params);

struct AutoencoderSpec {
  int c_neck = 4;
  int base_channels = 60;   // width of the stride-1 input conv
  int n_res_blocks = 9;
  int trunk_channels = 480; // feature width at 1/16 resolution
};

struct DiscriminatorSpec {
  int n_scales = 3;
  int n_layers = 4;         // stride-2 convolutions per sub-discriminator
  int base_channels = 64;
};

enum class ScaleId { k = 0, k_2 = 1, k_4 = 2 };

struct LatentCode {
  Tensor values;            // (N, c_neck, H/16, W/16)
  ScaleId scale_id = ScaleId::k;
  bool quantized = false;
};

// Channel widths after the input conv and each of the 4 stride-2 convs:
// base doubling per downsample, capped at the trunk width.
std::array<int, 5> encoder_channels(const AutoencoderSpec& spec);

struct Conv2dLayer {
  NodePtr w, b;
  int stride = 1, pad = 0;
  Conv2dLayer() = default;
  Conv2dLayer(int cin, int cout, int k, int stride, int pad, Rng& rng);
  NodePtr operator()(const NodePtr& x) const { return conv2d(x, w, b, stride, pad); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct ConvT2dLayer {
  NodePtr w, b;
  int stride = 2, pad = 1, out_pad = 1;
  ConvT2dLayer() = default;
  ConvT2dLayer(int cin, int cout, int k, int stride, int pad, int out_pad, Rng& rng);
  NodePtr operator()(const NodePtr& x) const {
    return conv_transpose2d(x, w, b, stride, pad, out_pad);
  }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct InstanceNormLayer {
  NodePtr gamma, beta;
  InstanceNormLayer() = default;
  explicit InstanceNormLayer(int channels);
  NodePtr operator()(const NodePtr& x) const { return instance_norm(x, gamma, beta); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// E: stride-1 conv then 4 stride-2 convs down to the trunk, projected to the
// bottleneck. Leaky-rectified activations, instance norm everywhere except
// the bottleneck projection.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const AutoencoderSpec& spec, Rng& rng);

  struct Result {
    NodePtr latent;
    std::array<int, 3> trunk_shape;  // (C, H, W) of the pre-projection trunk
  };
  Result forward(const NodePtr& x) const;
  Tensor forward_t(const Tensor& x) const;  // inference, no graph

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  AutoencoderSpec spec_;
  Conv2dLayer conv_in_;
  InstanceNormLayer norm_in_;
  std::array<Conv2dLayer, 4> down_;
  std::array<InstanceNormLayer, 4> down_norm_;
  Conv2dLayer to_neck_;
};

// G: bottleneck back to trunk width, nine residual blocks (information
// augmentation), then the mirror of the encoder with transposed convs and a
// tanh-bounded output head.
class Decoder {
 public:
  Decoder() = default;
  Decoder(const AutoencoderSpec& spec, Rng& rng);

  NodePtr forward(const NodePtr& latent) const;
  Tensor forward_t(const Tensor& latent) const;

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  struct ResBlock {
    Conv2dLayer conv1, conv2;
    InstanceNormLayer norm1, norm2;
  };
  AutoencoderSpec spec_;
  Conv2dLayer from_neck_;
  InstanceNormLayer norm_in_;
  std::vector<ResBlock> blocks_;
  std::array<ConvT2dLayer, 4> up_;
  std::array<InstanceNormLayer, 4> up_norm_;
  Conv2dLayer conv_out_;
};

class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(const AutoencoderSpec& spec, Rng& rng) : spec_(spec), enc_(spec, rng), dec_(spec, rng) {}

  const AutoencoderSpec& spec() const { return spec_; }
  const Encoder& encoder() const { return enc_; }
  const Decoder& decoder() const { return dec_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  AutoencoderSpec spec_;
  Encoder enc_;
  Decoder dec_;
};

LatentCode encode(const Tensor& x, const Autoencoder& ae, ScaleId scale);
Tensor decode(const LatentCode& w, const Autoencoder& ae);

// One patch discriminator: stride-2 conv stack emitting a spatial score map,
// with every intermediate activation exposed as a feature tap.
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  PatchDiscriminator(const DiscriminatorSpec& spec, Rng& rng);

  struct Result {
    NodePtr score;                // (N, 1, h, w) patch scores
    std::vector<NodePtr> taps;    // n_layers intermediate activations
  };
  Result forward(const NodePtr& x) const;

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  DiscriminatorSpec spec_;
  std::vector<Conv2dLayer> convs_;
  std::vector<InstanceNormLayer> norms_;  // layers 1..n-1 (none on the first)
  Conv2dLayer score_;
};

// Three identical sub-discriminators applied to the image and its /2 and /4
// bilinear downsamples. Architectures match, weights do not.
class MultiScaleDiscriminator {
 public:
  MultiScaleDiscriminator() = default;
  MultiScaleDiscriminator(const DiscriminatorSpec& spec, Rng& rng);

  const DiscriminatorSpec& spec() const { return spec_; }
  std::vector<PatchDiscriminator::Result> forward(const NodePtr& x) const;
  const PatchDiscriminator& sub(int i) const { return subs_[static_cast<std::size_t>(i)]; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  DiscriminatorSpec spec_;
  std::vector<PatchDiscriminator> subs_;
};

std::vector<PatchDiscriminator::Result> discriminate(const Tensor& x,
                                                     const MultiScaleDiscriminator& d);

}  // namespace msae

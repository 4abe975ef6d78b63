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

#include "msae/checkpoint.hpp"
#include "msae/entropy.hpp"
#include "msae/losses.hpp"

namespace msae {

struct TrainConfig {
  Scalar learning_rate = 2e-4;
  Scalar adam_beta1 = 0.5;
  Scalar adam_beta2 = 0.999;
  Scalar adam_eps = 1e-8;
  int batch_size = 2;
  int steps = 2000;
  int crop_size = 128;  // must be a multiple of 64 so the k/4 scale stays aligned
  RDConfig rd;
  std::uint64_t seed = 1;

  // network widths; the desk preset is the paper architecture at 1/8 width
  int base_channels = 8;
  int trunk_channels = 60;
  int n_res_blocks = 9;
  int d_base_channels = 8;

  Scalar grad_clip = 0;  // 0 disables
  Scalar lr_decay = 0;   // lr / (1 + lr_decay * step); 0 disables
  Scalar split = 0.9;    // train fraction of the dataset
  int log_every = 25;
  int checkpoint_every = 500;

  void validate() const;
  static TrainConfig desk();
  static TrainConfig paper();
};

// Bias-corrected adaptive-moment optimizer bound to a fixed parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(ParamList params, Scalar lr, Scalar beta1, Scalar beta2, Scalar eps);

  // lr_scale rescales the base rate (learning-rate decay hook)
  void step(Scalar lr_scale = 1);

  const ParamList& params() const { return params_; }
  std::int64_t t() const { return t_; }
  void save(Archive& a, const std::string& prefix) const;
  void load(const Archive& a, const std::string& prefix);

 private:
  ParamList params_;
  std::vector<Tensor> m_, v_;
  Scalar lr_ = 2e-4, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
};

// All trainable state: the three per-scale autoencoders ([k, k/2, k/4]), the
// multiscale discriminator and the per-scale entropy models.
struct Model {
  TrainConfig cfg;
  std::array<Autoencoder, 3> ae;
  MultiScaleDiscriminator disc;
  std::array<EntropyModel, 3> entropy;
  Rng rng_noise{1};
  std::uint64_t step = 0;
  bool frozen = false;
  std::array<std::vector<CdfTable>, 3> tables;  // per scale, built at freeze

  static Model init(const TrainConfig& cfg);

  ParamList generator_params() const;      // encoders + decoders + entropy
  ParamList discriminator_params() const;
  ParamList network_params() const;        // both, for hashing/serialization
  std::uint64_t fingerprint() const;       // over weights + entropy + supports
};

struct TrainState {
  Model model;
  Adam opt_g, opt_d;

  static TrainState init(const TrainConfig& cfg);
};

// One discriminator update (detached fakes) followed by one generator /
// encoder / entropy update of the compound rate-distortion objective, with
// the quantizer in noise mode. Throws with a component dump if any loss goes
// non-finite.
LossBundle train_step(TrainState& st, const Tensor& batch);

// Switches to rounding, computes coding supports, builds CDF tables and
// forbids further training.
void freeze_model(Model& m);

void save_checkpoint(const TrainState& st, const std::string& path,
                     const std::map<std::string, std::string>& extra = {});
TrainState load_checkpoint(const std::string& path,
                           std::map<std::string, std::string>* extra = nullptr);
Model load_model(const std::string& path);  // inference-side load

// Deterministic hash of current parameter values (isolation checks).
std::uint64_t weights_hash(const ParamList& params);

}  // namespace msae

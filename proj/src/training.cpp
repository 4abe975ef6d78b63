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

#include "msae/training.hpp"

#include <cmath>
#include <sstream>

#include "msae/config.hpp"

namespace msae {

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw UsageError("config: learning_rate must be > 0");
  if (crop_size % 64 != 0 || crop_size <= 0)
    throw UsageError("config: crop_size must be a positive multiple of 64");
  if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
  if (steps < 0) throw UsageError("config: steps must be >= 0");
  if (split <= 0 || split > 1) throw UsageError("config: split must be in (0, 1]");
  if (base_channels < 1 || trunk_channels < 1 || d_base_channels < 1 || n_res_blocks < 0)
    throw UsageError("config: network widths must be positive");
  rd.validate();
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig cfg;
  cfg.base_channels = 60;
  cfg.trunk_channels = 480;
  cfg.d_base_channels = 64;
  cfg.crop_size = 512;
  cfg.batch_size = 1;
  return cfg;
}

// ---------------------------------------------------------------------- Adam

Adam::Adam(ParamList params, Scalar lr, Scalar beta1, Scalar beta2, Scalar eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.node->value.shape());
    v_.emplace_back(p.node->value.shape());
  }
}

void Adam::step(Scalar lr_scale) {
  ++t_;
  const Scalar bc1 = 1 - std::pow(beta1_, static_cast<Scalar>(t_));
  const Scalar bc2 = 1 - std::pow(beta2_, static_cast<Scalar>(t_));
  const Scalar lr = lr_ * lr_scale;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& p = *params_[i].node;
    if (p.grad.numel() != p.value.numel()) continue;  // no gradient this step
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::int64_t j = 0; j < p.value.numel(); ++j) {
      const Scalar g = p.grad[j];
      m[j] = beta1_ * m[j] + (1 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1 - beta2_) * g * g;
      const Scalar mh = m[j] / bc1;
      const Scalar vh = v[j] / bc2;
      p.value[j] -= lr * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::save(Archive& a, const std::string& prefix) const {
  a.put_i64(prefix + "/t", t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    a.put_tensor(prefix + "/m/" + params_[i].name, m_[i]);
    a.put_tensor(prefix + "/v/" + params_[i].name, v_[i]);
  }
}

void Adam::load(const Archive& a, const std::string& prefix) {
  t_ = a.get_i64(prefix + "/t");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = a.get_tensor(prefix + "/m/" + params_[i].name);
    v_[i] = a.get_tensor(prefix + "/v/" + params_[i].name);
  }
}

// --------------------------------------------------------------------- Model

namespace {

const char* kScaleNames[3] = {"k", "k2", "k4"};

std::uint64_t hash_params(const ParamList& params, std::uint64_t h) {
  for (const auto& p : params) {
    h = fnv1a64(p.name.data(), p.name.size(), h);
    h = fnv1a64(p.node->value.data(),
                static_cast<std::size_t>(p.node->value.numel()) * sizeof(Scalar), h);
  }
  return h;
}

}  // namespace

Model Model::init(const TrainConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng init_rng(cfg.seed);
  for (int i = 0; i < 3; ++i) {
    AutoencoderSpec spec;
    spec.c_neck = cfg.rd.c_neck[static_cast<std::size_t>(i)];
    spec.base_channels = cfg.base_channels;
    spec.trunk_channels = cfg.trunk_channels;
    spec.n_res_blocks = cfg.n_res_blocks;
    m.ae[static_cast<std::size_t>(i)] = Autoencoder(spec, init_rng);
  }
  DiscriminatorSpec dspec;
  dspec.base_channels = cfg.d_base_channels;
  m.disc = MultiScaleDiscriminator(dspec, init_rng);
  for (int i = 0; i < 3; ++i)
    m.entropy[static_cast<std::size_t>(i)] =
        EntropyModel(cfg.rd.c_neck[static_cast<std::size_t>(i)], init_rng);
  m.rng_noise.seed(cfg.seed + 0x9e3779b97f4a7c15ull);
  return m;
}

ParamList Model::generator_params() const {
  ParamList out;
  for (int i = 0; i < 3; ++i)
    ae[static_cast<std::size_t>(i)].collect(std::string("net/ae_") + kScaleNames[i], out);
  for (int i = 0; i < 3; ++i)
    entropy[static_cast<std::size_t>(i)].collect(std::string("ent/") + kScaleNames[i], out);
  return out;
}

ParamList Model::discriminator_params() const {
  ParamList out;
  disc.collect("net/disc", out);
  return out;
}

ParamList Model::network_params() const {
  ParamList out = generator_params();
  ParamList d = discriminator_params();
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

std::uint64_t Model::fingerprint() const {
  std::uint64_t h = hash_params(network_params(), 0xcbf29ce484222325ull);
  for (int i = 0; i < 3; ++i) {
    const auto& e = entropy[static_cast<std::size_t>(i)];
    for (const auto& [lo, hi] : e.supports()) {
      std::int64_t pair[2] = {lo, hi};
      h = fnv1a64(pair, sizeof(pair), h);
    }
  }
  return h;
}

TrainState TrainState::init(const TrainConfig& cfg) {
  TrainState st;
  st.model = Model::init(cfg);
  st.opt_g = Adam(st.model.generator_params(), cfg.learning_rate, cfg.adam_beta1,
                  cfg.adam_beta2, cfg.adam_eps);
  st.opt_d = Adam(st.model.discriminator_params(), cfg.learning_rate, cfg.adam_beta1,
                  cfg.adam_beta2, cfg.adam_eps);
  return st;
}

// ---------------------------------------------------------------- train_step

namespace {

struct PipelineNodes {
  std::array<NodePtr, 3> recon;     // indexed by scale: 0=k .. 2=k/4 (unclamped)
  std::array<NodePtr, 3> rate;      // bits per image
};

// Coarse-to-fine residual pipeline on graph nodes; noise-relaxed latents.
PipelineNodes run_pipeline(Model& m, const std::array<NodePtr, 3>& levels) {
  PipelineNodes out;
  const int s = m.cfg.rd.s;
  NodePtr recon_prev;
  for (int scale = 2; scale >= 0; --scale) {
    NodePtr input = levels[static_cast<std::size_t>(scale)];
    NodePtr up;
    if (scale < 2) {
      up = upsample_bilinear(recon_prev, s);
      input = sub(input, up);
    }
    auto enc = m.ae[static_cast<std::size_t>(scale)].encoder().forward(input);
    NodePtr noisy = add_uniform_noise(enc.latent, m.rng_noise);
    const Scalar batch = static_cast<Scalar>(noisy->value.dim(0));
    out.rate[static_cast<std::size_t>(scale)] = mul_scalar(
        m.entropy[static_cast<std::size_t>(scale)].rate_bits_node(noisy), 1 / batch);
    NodePtr dec = m.ae[static_cast<std::size_t>(scale)].decoder().forward(noisy);
    NodePtr recon = (scale == 2) ? dec : add(up, dec);
    out.recon[static_cast<std::size_t>(scale)] = recon;
    recon_prev = recon;
  }
  return out;
}

void clip_gradients(const ParamList& params, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& p : params) {
    if (p.node->grad.numel() != p.node->value.numel()) continue;
    for (std::int64_t i = 0; i < p.node->grad.numel(); ++i)
      sq += p.node->grad[i] * p.node->grad[i];
  }
  const Scalar norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const Scalar scale = max_norm / norm;
  for (const auto& p : params) {
    if (p.node->grad.numel() != p.node->value.numel()) continue;
    for (std::int64_t i = 0; i < p.node->grad.numel(); ++i) p.node->grad[i] *= scale;
  }
}

std::string dump_bundle(const LossBundle& b) {
  std::ostringstream os;
  os << "l_rd=" << b.l_rd << " l_g=" << b.l_g << " l_d=" << b.l_d << " l_f=" << b.l_f;
  for (int i = 0; i < 3; ++i)
    os << " d[" << i << "]=" << b.distortion[static_cast<std::size_t>(i)] << " H[" << i
       << "]=" << b.rate[static_cast<std::size_t>(i)];
  return os.str();
}

}  // namespace

LossBundle train_step(TrainState& st, const Tensor& batch) {
  Model& m = st.model;
  if (m.frozen) throw Error("train_step: model is frozen");
  const int align = alignment_multiple(m.cfg.rd.s);
  if (batch.dim(2) % align != 0 || batch.dim(3) % align != 0)
    throw Error("train_step: batch dimensions must be multiples of " + std::to_string(align));

  ImagePyramid pyr = build_pyramid(batch, m.cfg.rd.s);
  LossBundle bundle;

  // ---- discriminator update on detached fakes ----
  Tensor fake_detached;
  {
    NoGrad ng;
    std::array<NodePtr, 3> levels{make_constant(pyr.levels[0]), make_constant(pyr.levels[1]),
                                  make_constant(pyr.levels[2])};
    fake_detached = run_pipeline(m, levels).recon[0]->value;
  }
  NodePtr l_d = discriminator_loss(pyr.levels[0], fake_detached, m.disc);
  bundle.l_d = l_d->value[0];
  backward(l_d);
  if (m.cfg.grad_clip > 0) clip_gradients(st.opt_d.params(), m.cfg.grad_clip);
  const Scalar lr_scale =
      m.cfg.lr_decay > 0 ? 1 / (1 + m.cfg.lr_decay * static_cast<Scalar>(m.step)) : 1;
  st.opt_d.step(lr_scale);
  zero_grads(st.opt_d.params());

  // ---- generator / encoder / entropy update ----
  const ParamList d_params = st.opt_d.params();
  set_requires_grad(d_params, false);

  std::array<NodePtr, 3> levels{make_constant(pyr.levels[0]), make_constant(pyr.levels[1]),
                                make_constant(pyr.levels[2])};
  PipelineNodes pipe = run_pipeline(m, levels);

  RdParts parts;
  for (int i = 0; i < 3; ++i) {
    parts.dist[static_cast<std::size_t>(i)] =
        mse(levels[static_cast<std::size_t>(i)], pipe.recon[static_cast<std::size_t>(i)]);
    parts.rate[static_cast<std::size_t>(i)] = pipe.rate[static_cast<std::size_t>(i)];
  }

  auto real_taps_of = [&m](const Tensor& image) {
    NoGrad ng;
    auto results = m.disc.forward(make_constant(image));
    std::vector<std::vector<Tensor>> taps(results.size());
    for (std::size_t s = 0; s < results.size(); ++s)
      for (const auto& t : results[s].taps) taps[s].push_back(t->value);
    return taps;
  };
  auto fake_taps_of = [](std::vector<PatchDiscriminator::Result>& results) {
    std::vector<std::vector<NodePtr>> taps(results.size());
    for (std::size_t s = 0; s < results.size(); ++s) taps[s] = results[s].taps;
    return taps;
  };

  if (m.cfg.rd.per_scale_adversarial) {
    for (int i = 0; i < 3; ++i) {
      auto fake_res = m.disc.forward(pipe.recon[static_cast<std::size_t>(i)]);
      std::vector<NodePtr> scores;
      for (auto& r : fake_res) scores.push_back(r.score);
      parts.l_g[static_cast<std::size_t>(i)] = lsgan_f(scores);
      auto fake_taps = fake_taps_of(fake_res);
      parts.l_f[static_cast<std::size_t>(i)] = feature_matching_loss(
          real_taps_of(pyr.levels[static_cast<std::size_t>(i)]), fake_taps, m.cfg.rd.lambda);
    }
  } else {
    // Eq-literal form: the full-resolution adversarial and feature terms
    // re-enter every scale's summand.
    auto fake_res = m.disc.forward(pipe.recon[0]);
    std::vector<NodePtr> scores;
    for (auto& r : fake_res) scores.push_back(r.score);
    NodePtr l_g = lsgan_f(scores);
    auto fake_taps = fake_taps_of(fake_res);
    NodePtr l_f = feature_matching_loss(real_taps_of(pyr.levels[0]), fake_taps, m.cfg.rd.lambda);
    for (int i = 0; i < 3; ++i) {
      parts.l_g[static_cast<std::size_t>(i)] = l_g;
      parts.l_f[static_cast<std::size_t>(i)] = l_f;
    }
  }

  NodePtr total = rd_total(parts, m.cfg.rd);

  bundle.l_g = parts.l_g[0]->value[0];
  bundle.l_f = parts.l_f[0]->value[0];
  bundle.l_rd = total->value[0];
  for (int i = 0; i < 3; ++i) {
    bundle.distortion[static_cast<std::size_t>(i)] = parts.dist[static_cast<std::size_t>(i)]->value[0];
    bundle.rate[static_cast<std::size_t>(i)] = parts.rate[static_cast<std::size_t>(i)]->value[0];
  }
  if (!bundle.finite()) {
    set_requires_grad(d_params, true);
    throw Error("train_step: non-finite loss; " + dump_bundle(bundle));
  }

  backward(total);
  if (m.cfg.grad_clip > 0) clip_gradients(st.opt_g.params(), m.cfg.grad_clip);
  st.opt_g.step(lr_scale);
  zero_grads(st.opt_g.params());
  set_requires_grad(d_params, true);

  ++m.step;
  return bundle;
}

void freeze_model(Model& m) {
  if (m.frozen) return;
  for (int i = 0; i < 3; ++i) {
    m.entropy[static_cast<std::size_t>(i)].freeze();
    m.tables[static_cast<std::size_t>(i)] =
        build_cdf_tables(m.entropy[static_cast<std::size_t>(i)]);
  }
  m.frozen = true;
}

// --------------------------------------------------------------- checkpoint

namespace {

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(Rng& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (is.fail()) throw DataError("checkpoint: bad rng state");
}

void save_model_into(const Model& m, Archive& a) {
  a.put_u64("meta/format_version", 1);
  a.put_string("meta/config", serialize_train_config(m.cfg));
  a.put_u64("meta/step", m.step);
  a.put_u64("meta/frozen", m.frozen ? 1 : 0);
  a.put_string("rng/noise", rng_to_string(m.rng_noise));
  for (const auto& p : m.network_params()) a.put_tensor(p.name, p.node->value);
  for (int i = 0; i < 3; ++i) {
    const auto& e = m.entropy[static_cast<std::size_t>(i)];
    if (!e.frozen()) continue;
    const std::string base = std::string("coding/") + kScaleNames[i];
    for (int c = 0; c < e.channels(); ++c) {
      const auto& [lo, hi] = e.supports()[static_cast<std::size_t>(c)];
      const std::string cb = base + "/ch" + std::to_string(c);
      a.put_i64(cb + "/v_min", lo);
      a.put_i64(cb + "/v_max", hi);
      const auto& table = m.tables[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      std::vector<std::uint8_t> raw(table.cum.size() * 4);
      for (std::size_t j = 0; j < table.cum.size(); ++j)
        for (int b = 0; b < 4; ++b)
          raw[j * 4 + static_cast<std::size_t>(b)] =
              static_cast<std::uint8_t>(table.cum[j] >> (8 * b));
      a.put_bytes(cb + "/cum", std::move(raw));
    }
  }
}

Model load_model_from(const Archive& a) {
  TrainConfig cfg = parse_train_config_string(a.get_string("meta/config"));
  Model m = Model::init(cfg);
  m.step = a.get_u64("meta/step");
  m.frozen = a.get_u64("meta/frozen") != 0;
  rng_from_string(m.rng_noise, a.get_string("rng/noise"));
  for (const auto& p : m.network_params()) {
    const Tensor& t = a.get_tensor(p.name);
    if (!t.same_shape(p.node->value))
      throw DataError("checkpoint: shape mismatch for " + p.name);
    p.node->value = t;
  }
  if (m.frozen) {
    for (int i = 0; i < 3; ++i) {
      auto& e = m.entropy[static_cast<std::size_t>(i)];
      const std::string base = std::string("coding/") + kScaleNames[i];
      std::vector<std::pair<int, int>> supports;
      auto& tables = m.tables[static_cast<std::size_t>(i)];
      tables.clear();
      for (int c = 0; c < e.channels(); ++c) {
        const std::string cb = base + "/ch" + std::to_string(c);
        CdfTable t;
        t.v_min = static_cast<int>(a.get_i64(cb + "/v_min"));
        t.v_max = static_cast<int>(a.get_i64(cb + "/v_max"));
        const auto& raw = a.get_bytes(cb + "/cum");
        t.cum.resize(raw.size() / 4);
        for (std::size_t j = 0; j < t.cum.size(); ++j) {
          std::uint32_t v = 0;
          for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(raw[j * 4 + static_cast<std::size_t>(b)]) << (8 * b);
          t.cum[j] = v;
        }
        supports.emplace_back(t.v_min, t.v_max);
        tables.push_back(std::move(t));
      }
      e.set_supports(std::move(supports));
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const TrainState& st, const std::string& path,
                     const std::map<std::string, std::string>& extra) {
  Archive a;
  save_model_into(st.model, a);
  st.opt_g.save(a, "opt_g");
  st.opt_d.save(a, "opt_d");
  for (const auto& [k, v] : extra) a.put_string("extra/" + k, v);
  a.save(path);
}

TrainState load_checkpoint(const std::string& path,
                           std::map<std::string, std::string>* extra) {
  Archive a = Archive::load(path);
  TrainState st;
  st.model = load_model_from(a);
  st.opt_g = Adam(st.model.generator_params(), st.model.cfg.learning_rate,
                  st.model.cfg.adam_beta1, st.model.cfg.adam_beta2, st.model.cfg.adam_eps);
  st.opt_d = Adam(st.model.discriminator_params(), st.model.cfg.learning_rate,
                  st.model.cfg.adam_beta1, st.model.cfg.adam_beta2, st.model.cfg.adam_eps);
  st.opt_g.load(a, "opt_g");
  st.opt_d.load(a, "opt_d");
  if (extra) {
    extra->clear();
    for (const auto& key : a.keys_with_prefix("extra/"))
      (*extra)[key.substr(6)] = a.get_string(key);
  }
  return st;
}

Model load_model(const std::string& path) {
  Archive a = Archive::load(path);
  return load_model_from(a);
}

std::uint64_t weights_hash(const ParamList& params) {
  return hash_params(params, 0xcbf29ce484222325ull);
}

}  // namespace msae

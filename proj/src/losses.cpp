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

#include "msae/losses.hpp"

#include <cmath>

namespace msae {

bool LossBundle::finite() const {
  auto ok = [](Scalar v) { return std::isfinite(v); };
  if (!(ok(l_f) && ok(l_g) && ok(l_d) && ok(l_rd))) return false;
  for (int i = 0; i < 3; ++i)
    if (!(ok(distortion[static_cast<std::size_t>(i)]) && ok(rate[static_cast<std::size_t>(i)])))
      return false;
  return true;
}

void RDConfig::validate() const {
  if (lambda <= 0) throw UsageError("rd config: lambda must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (alpha[static_cast<std::size_t>(i)] <= 0 || beta[static_cast<std::size_t>(i)] <= 0)
      throw UsageError("rd config: alpha/beta weights must be > 0");
    if (c_neck[static_cast<std::size_t>(i)] < 1)
      throw UsageError("rd config: c_neck must be >= 1");
  }
  if (s < 2) throw UsageError("rd config: scale factor must be >= 2");
}

NodePtr lsgan_f(const NodePtr& y) {
  NodePtr d = add_scalar(y, -1);
  return mean_all(mul(d, d));
}

NodePtr lsgan_g(const NodePtr& y) { return mean_all(mul(y, y)); }

namespace {
template <typename Fn>
NodePtr mean_over(const std::vector<NodePtr>& ys, Fn per_map) {
  if (ys.empty()) throw Error("lsgan: no score maps");
  NodePtr total;
  for (const auto& y : ys) {
    NodePtr t = per_map(y);
    total = total ? add(total, t) : t;
  }
  return mul_scalar(total, Scalar(1) / static_cast<Scalar>(ys.size()));
}
}  // namespace

NodePtr lsgan_f(const std::vector<NodePtr>& ys) {
  return mean_over(ys, [](const NodePtr& y) { return lsgan_f(y); });
}

NodePtr lsgan_g(const std::vector<NodePtr>& ys) {
  return mean_over(ys, [](const NodePtr& y) { return lsgan_g(y); });
}

NodePtr mse(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) throw Error("mse: shape mismatch");
  NodePtr d = sub(a, b);
  return mean_all(mul(d, d));
}

Scalar mse_t(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw Error("mse: shape mismatch");
  Scalar s = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const Scalar d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<Scalar>(a.numel());
}

NodePtr feature_matching_loss(const std::vector<std::vector<Tensor>>& real_taps,
                              const std::vector<std::vector<NodePtr>>& fake_taps,
                              Scalar lambda) {
  if (real_taps.size() != fake_taps.size())
    throw Error("feature_matching: scale count mismatch");
  NodePtr total;
  for (std::size_t m = 0; m < real_taps.size(); ++m) {
    if (real_taps[m].size() != fake_taps[m].size())
      throw Error("feature_matching: tap count mismatch");
    for (std::size_t n = 0; n < real_taps[m].size(); ++n) {
      const Tensor& real = real_taps[m][n];
      const NodePtr& fake = fake_taps[m][n];
      if (!real.same_shape(fake->value)) throw Error("feature_matching: tap shape mismatch");
      // channel sum, batch/spatial mean
      const Scalar denom = static_cast<Scalar>(real.dim(0)) * real.dim(2) * real.dim(3);
      NodePtr d = sub(fake, make_constant(real));
      NodePtr term = mul_scalar(sum_all(mul(d, d)), Scalar(1) / denom);
      total = total ? add(total, term) : term;
    }
  }
  if (!total) throw Error("feature_matching: no taps");
  return mul_scalar(total, lambda / static_cast<Scalar>(real_taps.size()));
}

NodePtr generator_adv_loss(const NodePtr& fake_full_res,
                           const MultiScaleDiscriminator& d) {
  auto results = d.forward(fake_full_res);
  std::vector<NodePtr> scores;
  scores.reserve(results.size());
  for (auto& r : results) scores.push_back(r.score);
  return lsgan_f(scores);
}

NodePtr discriminator_loss(const Tensor& real, const Tensor& fake,
                           const MultiScaleDiscriminator& d) {
  auto real_res = d.forward(make_constant(real));
  auto fake_res = d.forward(make_constant(fake));
  std::vector<NodePtr> real_scores, fake_scores;
  for (auto& r : real_res) real_scores.push_back(r.score);
  for (auto& r : fake_res) fake_scores.push_back(r.score);
  return add(lsgan_f(real_scores), lsgan_g(fake_scores));
}

NodePtr rd_total(const RdParts& parts, const RDConfig& cfg) {
  NodePtr total;
  for (std::size_t i = 0; i < 3; ++i) {
    NodePtr term = add(parts.l_g[i], parts.l_f[i]);
    term = add(term, mul_scalar(parts.dist[i], cfg.alpha[i]));
    term = add(term, mul_scalar(parts.rate[i], cfg.beta[i]));
    total = total ? add(total, term) : term;
  }
  return total;
}

}  // namespace msae

/* Copyright 2026 The roadmtl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "roadmtl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "roadmtl/error.hpp"
#include "roadmtl/ops.hpp"

namespace roadmtl {

using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double value_or_zero(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda_aux, lambda_deep, lambda_sfseg, lambda_steer,
                   lambda_adv_p, lambda_adv_a, lambda_mr, road_class_weight}) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("loss weights must be finite and non-negative");
  }
  if (mr_start_step < 0)
    throw ConfigError("mr_start_step must be non-negative");
}

Tensor weighted_bce(const Tensor& logits, const Tensor& mask,
                    double road_weight) {
  require_same_shape(logits, mask, "weighted_bce");
  const auto x = logits.data();
  const auto t = mask.data();
  const std::size_t n = x.size();
  if (n == 0) throw ShapeError("weighted_bce on an empty map");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] != 0.0 && t[i] != 1.0) {
      throw DataError("segmentation mask holds " + std::to_string(t[i]) +
                      "; expected 0 or 1");
    }
    // -log s(x) = softplus(-x), -log(1 - s(x)) = softplus(x)
    acc += t[i] != 0.0 ? road_weight * softplus(-x[i]) : softplus(x[i]);
  }
  const double inv = 1.0 / static_cast<double>(n);
  return make_result(
      Shape{}, {acc * inv}, {logits},
      [mask, road_weight, inv](Node& self) {
        double* gx = self.input_grad(0);
        const auto& xv = self.input_value(0);
        const auto t = mask.data();
        const double g = self.grad[0] * inv;
        for (std::size_t i = 0; i < xv.size(); ++i) {
          const double s = logistic(xv[i]);
          gx[i] += g * (t[i] != 0.0 ? road_weight * (s - 1.0) : s);
        }
      });
}

Tensor steering_mse(const Tensor& pred, const Tensor& gt) {
  if (!pred.defined() || !gt.defined() || pred.numel() == 0)
    throw ContractError("steering_mse on an empty batch");
  require_same_shape(pred, gt, "steering_mse");
  Tensor d = ops::sub(pred, gt);
  return ops::mean(ops::mul(d, d));
}

Tensor adversarial_gen_loss(const Tensor& d_output) {
  const auto d = d_output.data();
  double acc = 0.0;
  for (double v : d) acc += (v - 1.0) * (v - 1.0);
  const double inv = 1.0 / static_cast<double>(d.size());
  return make_result(Shape{}, {2.0 * acc * inv}, {d_output},
                     [inv](Node& self) {
                       double* gx = self.input_grad(0);
                       const auto& dv = self.input_value(0);
                       const double g = self.grad[0] * 4.0 * inv;
                       for (std::size_t i = 0; i < dv.size(); ++i)
                         gx[i] += g * (dv[i] - 1.0);
                     });
}

namespace {

// mean((x - target)^2)
Tensor mean_sq_to(const Tensor& x, double target) {
  const auto v = x.data();
  double acc = 0.0;
  for (double e : v) acc += (e - target) * (e - target);
  const double inv = 1.0 / static_cast<double>(v.size());
  return make_result(Shape{}, {acc * inv}, {x}, [inv, target](Node& self) {
    double* gx = self.input_grad(0);
    const auto& xv = self.input_value(0);
    const double g = self.grad[0] * 2.0 * inv;
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * (xv[i] - target);
  });
}

}  // namespace

Tensor discriminator_loss(const Tensor& scores_real,
                          const Tensor& scores_fake) {
  return ops::add(mean_sq_to(scores_real, 1.0), mean_sq_to(scores_fake, 0.0));
}

Tensor memory_reg_loss(const Tensor& p_primary, const Tensor& p_aux) {
  require_same_shape(p_primary, p_aux, "memory_reg_loss");
  const auto pp = p_primary.data();
  const auto pa = p_aux.data();
  const std::size_t n = pp.size();
  if (n == 0) throw ShapeError("memory_reg_loss on an empty map");
  static constexpr double lo = kProbEpsilon;
  static constexpr double hi = 1.0 - kProbEpsilon;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pp[i], lo, hi);
    const double a = std::clamp(pa[i], lo, hi);
    acc -= a * std::log(p) + (1.0 - a) * std::log1p(-p) + p * std::log(a) +
           (1.0 - p) * std::log1p(-a);
  }
  const double inv = 1.0 / static_cast<double>(n);
  return make_result(Shape{}, {acc * inv}, {p_primary, p_aux},
                     [inv](Node& self) {
    double* gp = self.input_grad(0);
    double* ga = self.input_grad(1);
    const auto& pv = self.input_value(0);
    const auto& av = self.input_value(1);
    const double g = self.grad[0] * inv;
    // dL/dq_x = -[q_y / q_x - (1 - q_y) / (1 - q_x) + log q_y - log(1 - q_y)]
    auto partial = [](double x, double y) {
      return -(y / x - (1.0 - y) / (1.0 - x) + std::log(y) - std::log1p(-y));
    };
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double p = std::clamp(pv[i], lo, hi);
      const double a = std::clamp(av[i], lo, hi);
      if (gp && pv[i] > lo && pv[i] < hi) gp[i] += g * partial(p, a);
      if (ga && av[i] > lo && av[i] < hi) ga[i] += g * partial(a, p);
    }
  });
}

Tensor deep_supervision_sum(std::span<const Tensor> per_scale) {
  if (per_scale.empty()) return Tensor::scalar(0.0);
  Tensor acc = per_scale[0];
  for (std::size_t i = 1; i < per_scale.size(); ++i)
    acc = ops::add(acc, per_scale[i]);
  return acc;
}

double deep_supervision_sum(std::span<const double> per_scale) {
  double acc = 0.0;
  for (double v : per_scale) acc += v;
  return acc;
}

namespace detail {
Tensor weighted(const Tensor& v, double s) { return ops::scale(v, s); }
Tensor plus(const Tensor& a, const Tensor& b) { return ops::add(a, b); }
}  // namespace detail

namespace {

Tensor bce_at_mask_size(const Tensor& logits, const Tensor& mask, double w) {
  const Shape& m = mask.shape();
  const Shape& s = logits.shape();
  if (s.h == m.h && s.w == m.w) return weighted_bce(logits, mask, w);
  return weighted_bce(ops::upsample_bilinear(logits, m.h, m.w), mask, w);
}

}  // namespace

SourceLossBreakdown source_loss(const ModelOutputs& out, const Tensor& mask,
                                const LossWeights& weights,
                                SourceTermSet terms) {
  if (!mask.defined()) throw ContractError("source loss needs a road mask");
  const double rw = weights.road_class_weight;
  SourceLossBreakdown b;
  b.seg_p = weighted_bce(out.primary_seg_logits, mask, rw);
  std::vector<Tensor> deep;
  for (const InitialPrediction& p : out.initial)
    deep.push_back(bce_at_mask_size(p.seg_logits, mask, rw));
  b.deep_seg = deep_supervision_sum(deep);
  b.seg_a = terms.aux ? weighted_bce(out.aux_seg_logits, mask, rw)
                      : Tensor::scalar(0.0);
  if (terms.sfseg) {
    b.sfseg = weighted_bce(out.sfseg_final, mask, rw);
    std::vector<Tensor> deep_sf;
    for (const Tensor& t : out.sfseg_deep)
      deep_sf.push_back(bce_at_mask_size(t, mask, rw));
    b.deep_sfseg = deep_supervision_sum(deep_sf);
  } else {
    b.sfseg = Tensor::scalar(0.0);
    b.deep_sfseg = Tensor::scalar(0.0);
  }
  b.total = source_total(b, weights);
  return b;
}

TargetLossBreakdown target_loss(const ModelOutputs& out,
                                const TargetLossInputs& in,
                                const LossWeights& weights) {
  TargetLossBreakdown b;
  b.steer_active = in.with_steering;
  b.mr_active = weights.mr_active(in.step);
  if (in.with_steering) {
    if (in.gt_angles == nullptr || !in.gt_angles->defined())
      throw ContractError("target loss needs steering angles");
    if (!out.has_steering())
      throw ContractError("target loss needs steering predictions");
    b.steer = steering_mse(*out.steer_angle_final, *in.gt_angles);
    std::vector<Tensor> deep;
    for (const Tensor& a : *out.steer_angle_deep)
      deep.push_back(steering_mse(a, *in.gt_angles));
    b.deep_steer = deep_supervision_sum(deep);
  } else {
    b.steer = Tensor::scalar(0.0);
    b.deep_steer = Tensor::scalar(0.0);
  }
  b.adv_p = in.d_primary.defined() ? adversarial_gen_loss(in.d_primary)
                                   : Tensor::scalar(0.0);
  b.adv_a = in.d_aux.defined() ? adversarial_gen_loss(in.d_aux)
                               : Tensor::scalar(0.0);
  b.mr = b.mr_active ? memory_reg_loss(ops::sigmoid(out.primary_seg_logits),
                                       ops::sigmoid(out.aux_seg_logits))
                     : Tensor::scalar(0.0);
  b.total = target_total(b, weights);
  return b;
}

SourceLossValues values(const SourceLossBreakdown& b) {
  return {value_or_zero(b.seg_p),    value_or_zero(b.seg_a),
          value_or_zero(b.deep_seg), value_or_zero(b.sfseg),
          value_or_zero(b.deep_sfseg), value_or_zero(b.total)};
}

TargetLossValues values(const TargetLossBreakdown& b) {
  TargetLossValues v{value_or_zero(b.steer), value_or_zero(b.deep_steer),
                     value_or_zero(b.adv_p), value_or_zero(b.adv_a),
                     value_or_zero(b.mr),    value_or_zero(b.total)};
  v.steer_active = b.steer_active;
  v.mr_active = b.mr_active;
  return v;
}

}  // namespace roadmtl

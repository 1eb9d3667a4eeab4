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

// Segmentation, steering, adversarial and consistency losses, and their
// weighted composition for source and target mini-batches.

#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "roadmtl/model.hpp"
#include "roadmtl/tensor.hpp"

namespace roadmtl {

struct LossWeights {
  double lambda_aux = 0.5;
  double lambda_deep = 1.0;
  double lambda_sfseg = 0.3;
  double lambda_steer = 0.5;
  double lambda_adv_p = 0.001;
  double lambda_adv_a = 0.0002;
  double lambda_mr = 0.1;
  double road_class_weight = 2.287;
  std::int64_t mr_start_step = 15000;

  void validate() const;
  // Memory regularisation applies strictly after mr_start_step.
  bool mr_active(std::int64_t step) const { return step > mr_start_step; }
};

inline constexpr double kProbEpsilon = 1e-7;

// Mean over all pixels of -[w t log s(x) + (1 - t) log(1 - s(x))], s the
// logistic function. `mask` must have the logits' shape and hold 0/1.
Tensor weighted_bce(const Tensor& logits, const Tensor& mask,
                    double road_weight);

// Mean squared difference; both N x 1 x 1 x 1 (or any equal shapes).
Tensor steering_mse(const Tensor& pred, const Tensor& gt);

// 2 * mean((d - 1)^2).
Tensor adversarial_gen_loss(const Tensor& d_output);

// mean((real - 1)^2) + mean(fake^2).
Tensor discriminator_loss(const Tensor& scores_real, const Tensor& scores_fake);

// Per-pixel symmetric two-class cross-entropy between road probability maps,
// averaged over pixels. Probabilities are clamped to [eps, 1 - eps].
Tensor memory_reg_loss(const Tensor& p_primary, const Tensor& p_aux);

Tensor deep_supervision_sum(std::span<const Tensor> per_scale);
double deep_supervision_sum(std::span<const double> per_scale);

template <class T>
struct SourceTerms {
  T seg_p{};
  T seg_a{};
  T deep_seg{};
  T sfseg{};
  T deep_sfseg{};
  T total{};
};

template <class T>
struct TargetTerms {
  T steer{};
  T deep_steer{};
  T adv_p{};
  T adv_a{};
  T mr{};
  T total{};
  bool steer_active = true;
  bool mr_active = false;
};

using SourceLossBreakdown = SourceTerms<Tensor>;
using TargetLossBreakdown = TargetTerms<Tensor>;
using SourceLossValues = SourceTerms<double>;
using TargetLossValues = TargetTerms<double>;

namespace detail {
inline double weighted(double v, double s) { return v * s; }
inline double plus(double a, double b) { return a + b; }
Tensor weighted(const Tensor& v, double s);
Tensor plus(const Tensor& a, const Tensor& b);
}  // namespace detail

// total = seg_p + l_aux seg_a + l_deep deep_seg
//         + l_sfseg (sfseg + l_deep deep_sfseg)
template <class T>
T source_total(const SourceTerms<T>& t, const LossWeights& w) {
  using detail::plus;
  using detail::weighted;
  T sf = plus(t.sfseg, weighted(t.deep_sfseg, w.lambda_deep));
  T out = plus(t.seg_p, weighted(t.seg_a, w.lambda_aux));
  out = plus(out, weighted(t.deep_seg, w.lambda_deep));
  return plus(out, weighted(sf, w.lambda_sfseg));
}

// total = l_steer (steer + l_deep deep_steer) + l_adv_p adv_p
//         + l_adv_a adv_a [+ l_mr mr]
// Inactive terms are left out of the sum entirely.
template <class T>
T target_total(const TargetTerms<T>& t, const LossWeights& w) {
  using detail::plus;
  using detail::weighted;
  T out = plus(weighted(t.adv_p, w.lambda_adv_p),
               weighted(t.adv_a, w.lambda_adv_a));
  if (t.steer_active) {
    T st = plus(t.steer, weighted(t.deep_steer, w.lambda_deep));
    out = plus(weighted(st, w.lambda_steer), out);
  }
  if (t.mr_active) out = plus(out, weighted(t.mr, w.lambda_mr));
  return out;
}

// Which source terms a training variant evaluates. Disabled terms are
// zero scalars.
struct SourceTermSet {
  bool aux = true;
  bool sfseg = true;
};

// Source loss of one forward pass against N x 1 x H x W masks. Coarse
// predictions are upsampled bilinearly to the mask size.
SourceLossBreakdown source_loss(const ModelOutputs& out, const Tensor& mask,
                                const LossWeights& weights,
                                SourceTermSet terms = {});

struct TargetLossInputs {
  // Normalized ground-truth angles, N x 1 x 1 x 1. Required when
  // with_steering is set.
  const Tensor* gt_angles = nullptr;
  // Discriminator outputs on the target primary and auxiliary maps.
  Tensor d_primary;
  Tensor d_aux;
  std::int64_t step = 0;
  bool with_steering = true;
};

TargetLossBreakdown target_loss(const ModelOutputs& out,
                                const TargetLossInputs& in,
                                const LossWeights& weights);

SourceLossValues values(const SourceLossBreakdown& b);
TargetLossValues values(const TargetLossBreakdown& b);

}  // namespace roadmtl

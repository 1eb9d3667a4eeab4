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

#include "roadmtl/optim.hpp"

#include <cmath>

#include "roadmtl/kernels/kernels.hpp"

namespace roadmtl::optim {

Sgd::Sgd(std::vector<Tensor*> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {
  for (Tensor* p : params_) momentum_.emplace_back(p->numel(), 0.0);
}

void Sgd::step() {
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    if (p.grad().empty()) continue;
    K.sgd_nesterov(p.numel(), options_.lr, options_.momentum,
                   options_.weight_decay, p.mutable_data().data(),
                   p.grad().data(), momentum_[i].data());
  }
}

void Sgd::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

StateList Sgd::state(const std::string& prefix) {
  StateList out;
  for (std::size_t i = 0; i < params_.size(); ++i)
    out.emplace_back(prefix + std::to_string(i), &momentum_[i]);
  return out;
}

Adam::Adam(std::vector<Tensor*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (Tensor* p : params_) {
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    if (p.grad().empty()) continue;
    K.adam(p.numel(), options_.lr, options_.beta1, options_.beta2,
           options_.eps, bc1, bc2, p.mutable_data().data(), p.grad().data(),
           m_[i].data(), v_[i].data());
  }
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

StateList Adam::state(const std::string& prefix) {
  StateList out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back(prefix + "m." + std::to_string(i), &m_[i]);
    out.emplace_back(prefix + "v." + std::to_string(i), &v_[i]);
  }
  return out;
}

double poly_lr(double base, std::int64_t step, std::int64_t total,
               double power) {
  if (total <= 0) return base;
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total);
  return base * std::pow(frac > 0.0 ? frac : 0.0, power);
}

}  // namespace roadmtl::optim
